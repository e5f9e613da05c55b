from .convert import ConversionManifest, convert, write_container

__all__ = ["ConversionManifest", "convert", "write_container"]
