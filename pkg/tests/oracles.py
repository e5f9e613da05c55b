"""Independent reference implementations used as test oracles.

Everything here is deliberately written with dense arrays and plain loops,
sharing no code with the package under test.
"""

from __future__ import annotations

import math

import numpy as np


def dense_normalized_adjacency(adj_dense: np.ndarray) -> np.ndarray:
    n = adj_dense.shape[0]
    a_tilde = adj_dense.astype(np.float64) + np.eye(n)
    d = a_tilde.sum(axis=1)
    d_inv_sqrt = np.diag(1.0 / np.sqrt(d))
    return d_inv_sqrt @ a_tilde @ d_inv_sqrt


def dense_forest(adj_dense: np.ndarray, aggregated: np.ndarray, sigma: float,
                 trees: int) -> dict:
    """Re-derive density, parents, delta, gamma, layers from first principles."""
    n = adj_dense.shape[0]
    rho = np.empty(n)
    for i in range(n):
        acc = 0.0
        for value in aggregated[i]:
            acc += float(value) * float(value)
        rho[i] = math.exp(-acc / (sigma * sigma))

    parent = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        best = -1
        for j in range(n):
            if not adj_dense[i, j] or i == j:
                continue
            if (rho[j], -j) <= (rho[i], -i):
                continue
            if best == -1 or (rho[j], -j) > (rho[best], -best):
                best = j
        parent[i] = best

    delta = np.empty(n)
    for i in range(n):
        nbrs = [j for j in range(n) if adj_dense[i, j] and j != i]
        if parent[i] == -1:
            delta[i] = min((rho[j] for j in nbrs), default=rho[i])
        else:
            delta[i] = rho[parent[i]]
    gamma = rho * delta

    cut_parent = parent.copy()
    roots = [i for i in range(n) if cut_parent[i] == -1]
    deficit = trees - len(roots)
    if deficit > 0:
        nonroots = sorted((i for i in range(n) if cut_parent[i] != -1),
                          key=lambda i: (-gamma[i], i))
        for i in nonroots[:deficit]:
            cut_parent[i] = -1
        roots = [i for i in range(n) if cut_parent[i] == -1]

    layer = np.zeros(n, dtype=np.int64)
    tree_id = np.full(n, -1, dtype=np.int64)
    children = {i: [] for i in range(n)}
    for i in range(n):
        if cut_parent[i] != -1:
            children[cut_parent[i]].append(i)
    for tid, root in enumerate(sorted(roots)):
        frontier = [(root, 1)]
        while frontier:
            node, depth = frontier.pop()
            layer[node] = depth
            tree_id[node] = tid
            for child in children[node]:
                frontier.append((child, depth + 1))

    return {"rho": rho, "parent": parent, "cut_parent": cut_parent,
            "delta": delta, "gamma": gamma, "layer": layer,
            "tree_id": tree_id, "roots": np.asarray(sorted(roots))}


def parents_acyclic(parent: np.ndarray) -> bool:
    """Follow parent links; True iff every walk ends at a root in <= n steps."""
    n = parent.shape[0]
    for start in range(n):
        node = start
        for _ in range(n + 1):
            if parent[node] == -1:
                break
            node = parent[node]
        else:
            return False
    return True


def finite_difference_grads(loss_fn, weights: list[np.ndarray],
                            eps: float = 1e-4) -> list[np.ndarray]:
    """Central differences of ``loss_fn()`` w.r.t. each weight matrix in place."""
    grads = []
    for w in weights:
        grad = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            orig = w[idx]
            w[idx] = orig + eps
            up = loss_fn()
            w[idx] = orig - eps
            down = loss_fn()
            w[idx] = orig
            grad[idx] = (up - down) / (2 * eps)
        grads.append(grad)
    return grads
