"""Minimal full-batch GCN in numpy with hand-written reverse-mode gradients.

Layers compute relu(A_hat @ dropout(H) @ W) with the shared normalized
adjacency; the last layer ends in a row-wise softmax.  Training is Adam on
masked cross-entropy plus L2 on the first-layer weights, matching the usual
two-layer citation-network setup.  Everything is seeded and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .golf import normalized_adjacency
from .graph_io import Graph

# input feature matrices at least this sparse are fed through a CSR fast path
_SPARSE_INPUT_THRESHOLD = 0.25


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 200
    dropout: float = 0.5
    weight_decay: float = 5e-4
    hidden_units: int = 16
    num_layers: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.num_layers < 2:
            raise ValueError(f"num_layers must be >= 2, got {self.num_layers}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


class GcnModel:
    """Per-layer weights plus the cached normalized adjacency."""

    def __init__(self, weights: list[np.ndarray], norm_adj, dropout: float = 0.0):
        self.weights = weights
        self.norm_adj = norm_adj
        self.dropout = dropout

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[1]


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(graph: Graph, config: TrainConfig,
               rng: np.random.Generator) -> GcnModel:
    if graph.num_classes < 1:
        raise ValueError("graph must declare num_classes to train a classifier")
    dims = [graph.feature_dim] + [config.hidden_units] * (config.num_layers - 1) \
        + [graph.num_classes]
    weights = [glorot(rng, dims[i], dims[i + 1]) for i in range(config.num_layers)]
    return GcnModel(weights, normalized_adjacency(graph), config.dropout)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _dropout(h, p: float, rng: np.random.Generator):
    """Inverted dropout; sparse inputs are masked on their stored values."""
    if sp.issparse(h):
        g = h.copy()
        g.data = g.data * ((rng.random(g.data.shape) >= p) / (1.0 - p))
        return g, None
    mask = (rng.random(h.shape) >= p) / (1.0 - p)
    return h * mask, mask


def _forward_cached(model: GcnModel, features, train_mode: bool,
                    rng: np.random.Generator | None):
    """Forward pass keeping the intermediates needed for backprop."""
    if sp.issparse(features):
        h = features.tocsr().astype(np.float64)
    else:
        h = np.asarray(features, dtype=np.float64)
    if h.shape[1] != model.weights[0].shape[0]:
        raise ValueError(
            f"feature dim {h.shape[1]} does not match first layer "
            f"({model.weights[0].shape[0]})")
    p = model.dropout if train_mode else 0.0
    if p > 0.0 and rng is None:
        raise ValueError("dropout in train mode requires an rng")
    dropped, pre_acts = [], []
    for idx, w in enumerate(model.weights):
        if p > 0.0:
            g, mask = _dropout(h, p, rng)
        else:
            g, mask = h, None
        z = model.norm_adj.dot(g @ w if not sp.issparse(g) else g.dot(w))
        dropped.append((g, mask))
        pre_acts.append(z)
        h = np.maximum(z, 0.0) if idx < len(model.weights) - 1 else z
    return _softmax(pre_acts[-1]), dropped, pre_acts


def forward(model: GcnModel, features: np.ndarray, train_mode: bool = False,
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Class probabilities per node; rows sum to 1."""
    probs, _, _ = _forward_cached(model, features, train_mode, rng)
    return probs


def _as_label_arrays(label_set) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(label_set, dict):
        nodes = np.asarray(sorted(label_set), dtype=np.int64)
        targets = np.asarray([label_set[int(i)] for i in nodes], dtype=np.int64)
    else:
        nodes, targets = label_set
        nodes = np.asarray(nodes, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
    if nodes.size == 0:
        raise ValueError("label set is empty")
    if (targets < 0).any():
        raise ValueError("label set contains unlabeled (-1) targets")
    return nodes, targets


def loss_and_gradients(model: GcnModel, features: np.ndarray, label_set,
                       weight_decay: float = 0.0,
                       rng: np.random.Generator | None = None,
                       train_mode: bool = True):
    """Masked cross-entropy (+ L2 on the first layer) and its gradients.

    ``label_set`` is a node->class dict or a (nodes, targets) pair.  Returns
    (loss, [dW per layer]) with gradients from reverse-mode differentiation
    through the sparse propagation.
    """
    nodes, targets = _as_label_arrays(label_set)
    probs, dropped, pre_acts = _forward_cached(model, features, train_mode, rng)

    count = nodes.size
    picked = np.clip(probs[nodes, targets], 1e-300, None)
    loss = -float(np.log(picked).mean())
    if weight_decay > 0.0:
        loss += 0.5 * weight_decay * float((model.weights[0] ** 2).sum())

    d_z = np.zeros_like(probs)
    d_z[nodes] = probs[nodes]
    d_z[nodes, targets] -= 1.0
    d_z /= count

    grads: list[np.ndarray] = [None] * model.num_layers
    for idx in range(model.num_layers - 1, -1, -1):
        g, mask = dropped[idx]
        back = model.norm_adj.dot(d_z)  # symmetric operator, so A^T = A
        grads[idx] = np.asarray(g.T @ back if not sp.issparse(g) else g.T.dot(back))
        if idx > 0:
            d_g = back @ model.weights[idx].T
            d_h = d_g * mask if mask is not None else d_g
            d_z = d_h * (pre_acts[idx - 1] > 0.0)
    if weight_decay > 0.0:
        grads[0] = grads[0] + weight_decay * model.weights[0]
    return loss, grads


def train(graph: Graph, label_set, config: TrainConfig):
    """Adam on full-graph epochs; deterministic given the config seed.

    Returns (model, loss curve).  Aborts with a diagnostic if the loss goes
    non-finite.
    """
    rng = np.random.default_rng(config.seed)
    model = init_model(graph, config, rng)
    nodes, targets = _as_label_arrays(label_set)
    feats = graph.features
    if np.count_nonzero(feats) / max(feats.size, 1) < _SPARSE_INPUT_THRESHOLD:
        feats = sp.csr_matrix(feats, dtype=np.float64)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m = [np.zeros_like(w) for w in model.weights]
    v = [np.zeros_like(w) for w in model.weights]
    curve = []
    for epoch in range(1, config.epochs + 1):
        loss, grads = loss_and_gradients(
            model, feats, (nodes, targets),
            weight_decay=config.weight_decay, rng=rng, train_mode=True)
        if not np.isfinite(loss):
            raise RuntimeError(
                f"training diverged: non-finite loss at epoch {epoch}")
        for i, grad in enumerate(grads):
            m[i] = beta1 * m[i] + (1 - beta1) * grad
            v[i] = beta2 * v[i] + (1 - beta2) * grad * grad
            m_hat = m[i] / (1 - beta1 ** epoch)
            v_hat = v[i] / (1 - beta2 ** epoch)
            model.weights[i] -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        curve.append(loss)
    return model, curve


def predict(model: GcnModel, features: np.ndarray) -> np.ndarray:
    return forward(model, features).argmax(axis=1)


def evaluate(model: GcnModel, graph: Graph, test_nodes,
             labeled_nodes=None) -> float:
    """Accuracy of argmax predictions on ``test_nodes``.

    When ``labeled_nodes`` is given, any overlap with the test set is a
    contract violation.
    """
    test_nodes = np.asarray(test_nodes, dtype=np.int64)
    if test_nodes.size == 0:
        raise ValueError("test set is empty")
    if labeled_nodes is not None:
        overlap = np.intersect1d(test_nodes, np.asarray(labeled_nodes))
        if overlap.size:
            raise ValueError(f"test set overlaps label set: {overlap[:5]}")
    if graph.labels is None:
        raise ValueError("graph has no labels to evaluate against")
    preds = predict(model, graph.features)
    truth = graph.labels[test_nodes]
    if (truth < 0).any():
        raise ValueError("test set contains unlabeled nodes")
    return float((preds[test_nodes] == truth).mean())
