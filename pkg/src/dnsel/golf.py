"""Leading-forest construction over a graph.

The pipeline turns node features into a spanning forest whose parent links
always point toward denser neighbors: aggregate features through the
symmetrically normalized adjacency, map each node's aggregated feature norm
to a local density, attach every node to its densest eligible neighbor,
score cluster-center likelihood (gamma = density times parent density), and
cut the highest-gamma links until the requested tree count is reached.

Density comparisons use 64-bit floats throughout; every tie is broken by
node index so identical inputs give bit-identical forests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph_io import Graph

NO_PARENT = -1


@dataclass
class LeadingForest:
    """Per-node forest arrays plus the root list.

    ``parent`` is ``NO_PARENT`` for roots; ``layer`` is 1 at roots and grows
    toward the leaves; ``tree_id`` is the index of the owning root within
    ``roots`` (which is sorted by node index).
    """
    parent: np.ndarray
    rho: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    layer: np.ndarray
    tree_id: np.ndarray
    roots: np.ndarray
    requested_trees: int

    @property
    def num_nodes(self) -> int:
        return self.parent.shape[0]

    @property
    def num_trees(self) -> int:
        return self.roots.shape[0]

    def to_json(self) -> str:
        payload = {
            "parent": self.parent.tolist(),
            "rho": self.rho.tolist(),
            "delta": self.delta.tolist(),
            "gamma": self.gamma.tolist(),
            "layer": self.layer.tolist(),
            "tree_id": self.tree_id.tolist(),
            "roots": self.roots.tolist(),
            "requested_trees": self.requested_trees,
        }
        return json.dumps(payload, sort_keys=True)

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def normalized_adjacency(graph: Graph) -> sp.csr_matrix:
    """Sparse D^{-1/2} (A + I) D^{-1/2}, the shared propagation operator."""
    n = graph.num_nodes
    dinv = 1.0 / np.sqrt(graph.degrees.astype(np.float64) + 1.0)
    a_tilde = (graph.adj + sp.eye(n, format="csr")).tocoo()
    data = a_tilde.data * dinv[a_tilde.row] * dinv[a_tilde.col]
    out = sp.csr_matrix((data, (a_tilde.row, a_tilde.col)), shape=(n, n))
    out.sort_indices()
    return out


def compute_aggregated_features(graph: Graph) -> np.ndarray:
    """Normalized one-hop feature aggregation with analytic self-loops.

    Computes D^{-1/2} (A + I) D^{-1/2} X in float64 using only the sparse
    adjacency; isolated nodes keep their own features.
    """
    x = graph.features.astype(np.float64)
    return normalized_adjacency(graph).dot(x)


def compute_density(aggregated: np.ndarray, sigma: float) -> np.ndarray:
    """Per-node density exp(-||F_i||^2 / sigma^2), in (0, 1]."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    sq_norms = np.einsum("ij,ij->i", aggregated, aggregated)
    return np.exp(-sq_norms / (sigma * sigma))


def _leads(rho: np.ndarray, j: np.ndarray, i: int) -> np.ndarray:
    """Mask of neighbors j that lead node i: higher density, index tie-break."""
    return (rho[j] > rho[i]) | ((rho[j] == rho[i]) & (j < i))


def assign_leading_nodes(graph: Graph, rho: np.ndarray) -> np.ndarray:
    """Attach each node to its densest leading neighbor.

    parent[i] is the neighbor with maximal (rho, -index) among those strictly
    leading i, or NO_PARENT when i is a local density maximum.  The strict
    order guarantees acyclicity; the global maximum is always a root.
    """
    n = graph.num_nodes
    parent = np.full(n, NO_PARENT, dtype=np.int64)
    indptr, indices = graph.adj.indptr, graph.adj.indices
    for i in range(n):
        nbrs = indices[indptr[i]:indptr[i + 1]]
        if nbrs.size == 0:
            continue
        eligible = nbrs[_leads(rho, nbrs, i)]
        if eligible.size == 0:
            continue
        best_rho = rho[eligible].max()
        parent[i] = eligible[rho[eligible] == best_rho].min()
    return parent


def compute_delta(graph: Graph, rho: np.ndarray, parent: np.ndarray) -> np.ndarray:
    """Parent density per node; local roots take their minimum neighbor density.

    An isolated root falls back to its own density so delta stays in (0, 1].
    """
    delta = np.empty_like(rho)
    nonroot = parent != NO_PARENT
    delta[nonroot] = rho[parent[nonroot]]
    indptr, indices = graph.adj.indptr, graph.adj.indices
    for i in np.flatnonzero(~nonroot):
        nbrs = indices[indptr[i]:indptr[i + 1]]
        delta[i] = rho[nbrs].min() if nbrs.size else rho[i]
    return delta


def compute_gamma(rho: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Cluster-center score: elementwise rho * delta."""
    if rho.shape != delta.shape:
        raise ValueError("rho and delta must have the same shape")
    return rho * delta


def cut_forest(graph: Graph, rho: np.ndarray, parent: np.ndarray,
               gamma: np.ndarray, trees: int) -> LeadingForest:
    """Cut the leading structure into (at least) ``trees`` trees.

    Natural local roots are kept as-is; when there are fewer than ``trees``,
    the highest-gamma non-root nodes are detached from their parents.  When
    natural roots already exceed the request, no merging is attempted and the
    actual root count is reported via ``roots``.
    """
    n = graph.num_nodes
    if not 1 <= trees <= n:
        raise ValueError(f"tree count must be in [1, {n}], got {trees}")
    # delta and gamma are frozen from the uncut structure; cutting only
    # rewires parent/layer/tree_id
    delta = compute_delta(graph, rho, parent)
    parent = parent.copy()
    natural_roots = np.flatnonzero(parent == NO_PARENT)
    deficit = trees - natural_roots.size
    if deficit > 0:
        nonroot = np.flatnonzero(parent != NO_PARENT)
        # highest gamma first, node index breaking ties
        order = nonroot[np.lexsort((nonroot, -gamma[nonroot]))]
        parent[order[:deficit]] = NO_PARENT

    roots = np.flatnonzero(parent == NO_PARENT)
    layer = np.zeros(n, dtype=np.int64)
    tree_id = np.full(n, -1, dtype=np.int64)
    children: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        if parent[i] != NO_PARENT:
            children[parent[i]].append(i)
    for tid, root in enumerate(roots):
        stack = [root]
        layer[root] = 1
        tree_id[root] = tid
        while stack:
            node = stack.pop()
            for child in children[node]:
                layer[child] = layer[node] + 1
                tree_id[child] = tid
                stack.append(child)

    return LeadingForest(parent=parent, rho=rho, delta=delta, gamma=gamma,
                         layer=layer, tree_id=tree_id, roots=roots,
                         requested_trees=trees)


def build_forest(graph: Graph, sigma: float, trees: int) -> LeadingForest:
    """Full pipeline: aggregation, density, leading links, gamma, cut."""
    aggregated = compute_aggregated_features(graph)
    rho = compute_density(aggregated, sigma)
    parent = assign_leading_nodes(graph, rho)
    delta = compute_delta(graph, rho, parent)
    gamma = compute_gamma(rho, delta)
    return cut_forest(graph, rho, parent, gamma, trees)
