"""One-off converter: pickled citation-network datasets -> graph container.

The upstream distribution ships eight files per dataset
(``ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index}``): pickled scipy
feature matrices and one-hot label blocks for the non-test and test
partitions, a neighbor dictionary, and the positions of the test rows in
the full node ordering.  This tool merges all partitions into one pool and
emits a single self-describing container file: a JSON header line followed
by row-major float32 features, an int32 undirected edge list (each pair
once, i < j, sorted) and int32 per-node labels with -1 for unlabeled nodes.

Output bytes are deterministic for a fixed input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import pickle
import sys
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

CONTAINER_FORMAT = "graph-container"
CONTAINER_VERSION = 1

PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")

# published statistics for the three citation benchmarks; raw edge counts
# famously disagree with deduplicated undirected counts, so only node,
# class and feature counts are checked strictly
EXPECTED = {
    "cora": {"nodes": 2708, "classes": 7, "features": 1433, "edges_reported": 5429},
    "citeseer": {"nodes": 3327, "classes": 6, "features": 3703, "edges_reported": 4732},
    "pubmed": {"nodes": 19717, "classes": 3, "features": 500, "edges_reported": 44338},
}

# upstream checksums, when known, go here; unknown sources only get their
# digests recorded in the manifest
KNOWN_CHECKSUMS: dict[str, str] = {}


@dataclass
class ConversionManifest:
    dataset: str
    output: str
    source_checksums: dict
    nodes: int
    edges_raw_directed: int
    edges_unique_undirected: int
    edges_reported_upstream: int | None
    classes: int
    features: int
    unlabeled_nodes: int
    warnings: list

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _read_pickle(path: Path):
    with open(path, "rb") as fh:
        try:
            return pickle.load(fh, encoding="latin1")
        except TypeError:
            return pickle.load(fh)


def _read_index(path: Path) -> np.ndarray:
    values = [int(line) for line in path.read_text().split()]
    return np.asarray(values, dtype=np.int64)


def _dense(matrix) -> np.ndarray:
    if sp.issparse(matrix):
        return np.asarray(matrix.todense(), dtype=np.float32)
    return np.asarray(matrix, dtype=np.float32)


def _labels_from_onehot(block: np.ndarray) -> np.ndarray:
    block = np.asarray(block)
    out = np.full(block.shape[0], -1, dtype=np.int32)
    present = block.sum(axis=1) > 0
    out[present] = block[present].argmax(axis=1)
    return out


def write_container(path: Path, features: np.ndarray, edges: np.ndarray,
                    labels: np.ndarray, num_classes: int) -> None:
    header = {
        "edge_count": int(edges.shape[0]),
        "feature_dim": int(features.shape[1]),
        "format": CONTAINER_FORMAT,
        "has_labels": True,
        "node_count": int(features.shape[0]),
        "num_classes": int(num_classes),
        "version": CONTAINER_VERSION,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode())
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(features, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(edges, dtype="<i4").tobytes())
        fh.write(np.ascontiguousarray(labels, dtype="<i4").tobytes())


def convert(source_dir: str | Path, dataset: str, out: str | Path) -> ConversionManifest:
    """Convert one dataset; returns the manifest (also printed by the CLI)."""
    if dataset not in EXPECTED:
        raise ValueError(f"unknown dataset {dataset!r}; choose from {sorted(EXPECTED)}")
    source_dir = Path(source_dir)
    paths = {part: source_dir / f"ind.{dataset}.{part}" for part in PARTS}
    missing = [str(p) for p in paths.values() if not p.exists()]
    if missing:
        raise FileNotFoundError(
            "missing upstream files:\n  " + "\n  ".join(missing))

    checksums = {p.name: _sha256(p) for p in paths.values()}
    notes: list[str] = []
    for name, digest in checksums.items():
        known = KNOWN_CHECKSUMS.get(name)
        if known and known != digest:
            msg = f"checksum mismatch for {name}: got {digest[:12]}..."
            warnings.warn(msg)
            notes.append(msg)

    allx = _read_pickle(paths["allx"])
    tx = _read_pickle(paths["tx"])
    ally = np.asarray(_read_pickle(paths["ally"]))
    ty = np.asarray(_read_pickle(paths["ty"]))
    graph = _read_pickle(paths["graph"])
    test_index = _read_index(paths["test.index"])

    n_all = allx.shape[0]
    num_nodes = max(n_all + tx.shape[0],
                    int(test_index.max()) + 1 if test_index.size else 0,
                    max(graph.keys(), default=-1) + 1)
    feature_dim = allx.shape[1]
    num_classes = ally.shape[1]

    features = np.zeros((num_nodes, feature_dim), dtype=np.float32)
    features[:n_all] = _dense(allx)
    features[test_index] = _dense(tx)

    labels = np.full(num_nodes, -1, dtype=np.int32)
    labels[:n_all] = _labels_from_onehot(ally)
    labels[test_index] = _labels_from_onehot(ty)
    gaps = int((labels < 0).sum())
    if gaps:
        msg = (f"{gaps} nodes have no label (index gaps in the test split); "
               "stored as -1 with zero features")
        warnings.warn(msg)
        notes.append(msg)

    raw_directed = 0
    pairs = set()
    for node, neighbors in graph.items():
        for other in neighbors:
            raw_directed += 1
            if node == other:
                continue
            pairs.add((min(node, other), max(node, other)))
    edges = np.asarray(sorted(pairs), dtype=np.int64).reshape(-1, 2)

    expected = EXPECTED[dataset]
    for key, actual in (("nodes", num_nodes), ("classes", num_classes),
                        ("features", feature_dim)):
        if expected[key] != actual:
            msg = f"{key}: expected {expected[key]}, converted {actual}"
            warnings.warn(msg)
            notes.append(msg)

    out = Path(out)
    write_container(out, features, edges, labels, num_classes)
    return ConversionManifest(
        dataset=dataset,
        output=str(out),
        source_checksums=checksums,
        nodes=num_nodes,
        edges_raw_directed=raw_directed,
        edges_unique_undirected=int(edges.shape[0]),
        edges_reported_upstream=expected.get("edges_reported"),
        classes=num_classes,
        features=feature_dim,
        unlabeled_nodes=gaps,
        warnings=notes,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="planetoid-convert",
        description="Convert pickled citation datasets to the graph container format")
    parser.add_argument("--dataset", required=True, choices=sorted(EXPECTED))
    parser.add_argument("--src", required=True, help="directory with ind.<name>.* files")
    parser.add_argument("--out", required=True, help="container output path")
    args = parser.parse_args(argv)
    try:
        manifest = convert(args.src, args.dataset, args.out)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(manifest.to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
