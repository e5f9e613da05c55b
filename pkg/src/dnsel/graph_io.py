"""Graph dataset containers: loading, saving, validation, built-in toy graphs.

Two on-disk formats are supported:

* the binary *container* format: one JSON header line followed by raw
  row-major float32 feature values, an int32 edge list, and (optionally)
  int32 labels with -1 marking unlabeled nodes;
* a plain *edge-list + TSV* pair: a whitespace-delimited two-column integer
  edge file plus a feature table with one row per node (first column the
  node id, optionally a trailing non-numeric class column).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

UNLABELED = -1

CONTAINER_FORMAT = "graph-container"
CONTAINER_VERSION = 1

_FEATURE_DTYPE = np.dtype("<f4")
_INDEX_DTYPE = np.dtype("<i4")


class GraphFormatError(ValueError):
    """Raised when an input file cannot be parsed."""


class GraphValidationError(ValueError):
    """Raised when parsed data violates a graph invariant."""


@dataclass(frozen=True)
class DatasetStats:
    nodes: int
    edges: int
    classes: int
    features: int


class Graph:
    """Undirected graph with dense node features and optional labels.

    The adjacency is stored in CSR form, symmetric, deduplicated and with no
    stored self-loops.  Instances are immutable after construction and safe
    to share across workers.
    """

    def __init__(self, adj: sp.csr_matrix, features: np.ndarray,
                 labels: np.ndarray | None = None, num_classes: int = 0):
        self.adj = adj
        self.features = np.ascontiguousarray(features, dtype=np.float32)
        self.features.setflags(write=False)
        if labels is not None:
            labels = np.ascontiguousarray(labels, dtype=np.int32)
            labels.setflags(write=False)
            if num_classes == 0:
                num_classes = int(labels.max()) + 1 if labels.size else 0
        self.labels = labels
        self.num_classes = int(num_classes)
        self._degrees = np.asarray(adj.sum(axis=1)).ravel().astype(np.int64)
        self._degrees.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return self.adj.shape[0]

    @property
    def num_edges(self) -> int:
        """Undirected edge count (each pair counted once)."""
        return self.adj.nnz // 2

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    def neighbors(self, i: int) -> np.ndarray:
        return self.adj.indices[self.adj.indptr[i]:self.adj.indptr[i + 1]]

    def edge_array(self) -> np.ndarray:
        """Canonical (m, 2) array of undirected edges, i < j, sorted."""
        coo = sp.triu(self.adj, k=1).tocoo()
        edges = np.stack([coo.row, coo.col], axis=1).astype(np.int64)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        return edges[order]

    def stats(self) -> DatasetStats:
        return DatasetStats(nodes=self.num_nodes, edges=self.num_edges,
                            classes=self.num_classes, features=self.feature_dim)


def from_edges(num_nodes: int, edges: np.ndarray, features: np.ndarray,
               labels: np.ndarray | None = None, num_classes: int = 0) -> Graph:
    """Build a Graph from a (possibly directed / duplicated) edge array.

    Self-loops are dropped (the aggregation operator adds them analytically),
    reversed duplicates are merged, and the adjacency is symmetrized.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    features = np.asarray(features)
    if features.shape[0] != num_nodes:
        raise GraphValidationError(
            f"feature matrix has {features.shape[0]} rows, expected {num_nodes}")
    if edges.size:
        if edges.min() < 0 or edges.max() >= num_nodes:
            raise GraphValidationError("edge endpoint out of range")
        edges = edges[edges[:, 0] != edges[:, 1]]
    if edges.size:
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        und = np.unique(np.stack([lo, hi], axis=1), axis=0)
        rows = np.concatenate([und[:, 0], und[:, 1]])
        cols = np.concatenate([und[:, 1], und[:, 0]])
        data = np.ones(rows.shape[0], dtype=np.float64)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        data = np.zeros(0, dtype=np.float64)
    adj = sp.csr_matrix((data, (rows, cols)), shape=(num_nodes, num_nodes))
    adj.sort_indices()
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int32)
        if labels.shape != (num_nodes,):
            raise GraphValidationError("label array length mismatch")
        declared = num_classes if num_classes else (int(labels.max()) + 1 if labels.size else 0)
        if labels.size and (labels.min() < UNLABELED or labels.max() >= declared):
            raise GraphValidationError(
                f"label out of range: expected values in [-1, {declared})")
        num_classes = declared
    return Graph(adj, features, labels, num_classes)


def validate(graph: Graph) -> list[str]:
    """Return a list of invariant violations; empty iff the graph is valid."""
    violations = []
    adj = graph.adj
    if adj.shape[0] != adj.shape[1]:
        violations.append(f"adjacency not square: {adj.shape}")
        return violations
    if (adj != adj.T).nnz != 0:
        violations.append("adjacency not symmetric")
    if adj.diagonal().any():
        violations.append("self-loops stored in adjacency")
    if graph.features.shape[0] != graph.num_nodes:
        violations.append(
            f"feature rows ({graph.features.shape[0]}) != num_nodes ({graph.num_nodes})")
    if not np.isfinite(graph.features).all():
        violations.append("non-finite feature values")
    if graph.labels is not None:
        lab = graph.labels
        if lab.shape != (graph.num_nodes,):
            violations.append("label array length mismatch")
        else:
            bad = (lab < UNLABELED) | (lab >= graph.num_classes)
            if bad.any():
                violations.append(
                    f"{int(bad.sum())} labels outside [-1, {graph.num_classes})")
    return violations


# ---------------------------------------------------------------------------
# container format

def save_container(graph: Graph, path: str | Path) -> None:
    """Write the binary container; output bytes are deterministic."""
    path = Path(path)
    edges = graph.edge_array().astype(_INDEX_DTYPE)
    header = {
        "edge_count": int(edges.shape[0]),
        "feature_dim": graph.feature_dim,
        "format": CONTAINER_FORMAT,
        "has_labels": graph.labels is not None,
        "node_count": graph.num_nodes,
        "num_classes": graph.num_classes,
        "version": CONTAINER_VERSION,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode())
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(graph.features, dtype=_FEATURE_DTYPE).tobytes())
        fh.write(edges.tobytes())
        if graph.labels is not None:
            fh.write(np.ascontiguousarray(graph.labels, dtype=_INDEX_DTYPE).tobytes())


def load_container(path: str | Path) -> Graph:
    path = Path(path)
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"{path}: line 1: invalid JSON header: {exc}") from exc
        if header.get("format") != CONTAINER_FORMAT:
            raise GraphFormatError(f"{path}: line 1: not a {CONTAINER_FORMAT} file")
        n = int(header["node_count"])
        d = int(header["feature_dim"])
        m = int(header["edge_count"])
        payload = fh.read()
    need = n * d * 4 + m * 2 * 4 + (n * 4 if header["has_labels"] else 0)
    if len(payload) != need:
        raise GraphFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {need}")
    off = n * d * 4
    features = np.frombuffer(payload[:off], dtype=_FEATURE_DTYPE).reshape(n, d)
    edges = np.frombuffer(payload[off:off + m * 8], dtype=_INDEX_DTYPE).reshape(m, 2)
    labels = None
    if header["has_labels"]:
        labels = np.frombuffer(payload[off + m * 8:], dtype=_INDEX_DTYPE)
    return from_edges(n, edges.astype(np.int64), features, labels,
                      num_classes=int(header["num_classes"]))


# ---------------------------------------------------------------------------
# edge-list + TSV format

def _parse_feature_table(path: Path) -> tuple[dict[int, int], np.ndarray, np.ndarray | None, int]:
    """Parse the node table: id, feature columns, optional trailing class column."""
    ids: list[int] = []
    rows: list[list[float]] = []
    raw_labels: list[str] = []
    has_labels: bool | None = None
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if width is None:
                width = len(parts)
                if width < 2:
                    raise GraphFormatError(
                        f"{path}: line {lineno}: expected id plus at least one feature column")
                try:
                    float(parts[-1])
                    has_labels = False
                except ValueError:
                    has_labels = True
            elif len(parts) != width:
                raise GraphFormatError(
                    f"{path}: line {lineno}: {len(parts)} columns, expected {width}")
            try:
                node_id = int(parts[0])
            except ValueError as exc:
                raise GraphFormatError(
                    f"{path}: line {lineno}: node id {parts[0]!r} is not an integer") from exc
            feat_end = -1 if has_labels else len(parts)
            try:
                rows.append([float(v) for v in parts[1:feat_end]])
            except ValueError as exc:
                raise GraphFormatError(
                    f"{path}: line {lineno}: non-numeric feature value ({exc})") from exc
            if has_labels:
                raw_labels.append(parts[-1])
            ids.append(node_id)
    if not ids:
        raise GraphFormatError(f"{path}: empty feature table")
    id_map = {}
    for pos, node_id in enumerate(ids):
        if node_id in id_map:
            raise GraphFormatError(f"{path}: duplicate node id {node_id}")
        id_map[node_id] = pos
    features = np.asarray(rows, dtype=np.float32)
    labels = None
    num_classes = 0
    if has_labels:
        classes = sorted(set(raw_labels))
        lut = {name: idx for idx, name in enumerate(classes)}
        labels = np.asarray([lut[name] for name in raw_labels], dtype=np.int32)
        num_classes = len(classes)
    return id_map, features, labels, num_classes


def load_edgelist(edge_path: str | Path, features_path: str | Path) -> Graph:
    """Load the edge-list + TSV pair; node order follows the feature table."""
    edge_path = Path(edge_path)
    id_map, features, labels, num_classes = _parse_feature_table(Path(features_path))
    edges = []
    with open(edge_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise GraphFormatError(
                    f"{edge_path}: line {lineno}: expected two columns, got {len(parts)}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise GraphFormatError(
                    f"{edge_path}: line {lineno}: non-integer endpoint") from exc
            if u not in id_map or v not in id_map:
                missing = u if u not in id_map else v
                raise GraphFormatError(
                    f"{edge_path}: line {lineno}: unknown node id {missing}")
            edges.append((id_map[u], id_map[v]))
    edge_arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return from_edges(len(id_map), edge_arr, features, labels, num_classes)


def load_dataset(path: str | Path, fmt: str = "container",
                 features_path: str | Path | None = None) -> Graph:
    """Load a dataset in either supported format.

    ``fmt`` is ``"container"`` or ``"edgelist"``; the latter requires
    ``features_path``.
    """
    if fmt == "container":
        return load_container(path)
    if fmt == "edgelist":
        if features_path is None:
            raise ValueError("edgelist format requires features_path")
        return load_edgelist(path, features_path)
    raise ValueError(f"unknown dataset format {fmt!r}")


# ---------------------------------------------------------------------------
# built-in toy graph

# Zachary's karate club: canonical 34-node, 78-edge graph with the standard
# two-faction split (0 = instructor's side, 1 = administrator's side).
_KARATE_EDGES = (
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10),
    (0, 11), (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2),
    (1, 3), (1, 7), (1, 13), (1, 17), (1, 19), (1, 21), (1, 30), (2, 3),
    (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28), (2, 32), (3, 7),
    (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16), (6, 16),
    (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33),
    (15, 32), (15, 33), (18, 32), (18, 33), (19, 33), (20, 32), (20, 33),
    (22, 32), (22, 33), (23, 25), (23, 27), (23, 29), (23, 32), (23, 33),
    (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33), (27, 33),
    (28, 31), (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32),
    (31, 33), (32, 33),
)

_KARATE_LABELS = (0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1,
                  0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1)


def karate_club(features: np.ndarray | None = None) -> Graph:
    """The karate-club graph; features default to one-hot node identity."""
    n = 34
    if features is None:
        features = np.eye(n, dtype=np.float32)
    edges = np.asarray(_KARATE_EDGES, dtype=np.int64)
    labels = np.asarray(_KARATE_LABELS, dtype=np.int32)
    return from_edges(n, edges, features, labels, num_classes=2)
