import numpy as np
import pytest
import scipy.sparse as sp

from dnsel import from_edges
from dnsel.gcn import (
    GcnModel,
    TrainConfig,
    evaluate,
    forward,
    init_model,
    loss_and_gradients,
    predict,
    train,
)
from dnsel.golf import normalized_adjacency

from oracles import finite_difference_grads


@pytest.fixture()
def six_node_graph():
    edges = np.array([[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [1, 4]])
    feats = np.random.default_rng(42).normal(size=(6, 4)).astype(np.float32)
    labels = np.array([0, 0, 1, 1, 2, 2], dtype=np.int32)
    return from_edges(6, edges, feats, labels, 3)


def separable_graph():
    # two cliques joined by one edge, features aligned with the class
    edges = [[i, j] for i in range(4) for j in range(i + 1, 4)]
    edges += [[i, j] for i in range(4, 8) for j in range(i + 1, 8)]
    edges += [[3, 4]]
    feats = np.zeros((8, 2), dtype=np.float32)
    feats[:4, 0] = 1.0
    feats[4:, 1] = 1.0
    labels = np.array([0] * 4 + [1] * 4, dtype=np.int32)
    return from_edges(8, np.asarray(edges), feats, labels, 2)


def test_forward_rows_sum_to_one(six_node_graph):
    model = init_model(six_node_graph, TrainConfig(seed=0), np.random.default_rng(0))
    probs = forward(model, six_node_graph.features)
    assert probs.shape == (6, 3)
    assert np.all(np.abs(probs.sum(axis=1) - 1.0) < 1e-6)
    rng = np.random.default_rng(1)
    probs_train = forward(model, six_node_graph.features, train_mode=True, rng=rng)
    assert np.all(np.abs(probs_train.sum(axis=1) - 1.0) < 1e-6)


def test_forward_no_dropout_train_equals_eval(six_node_graph):
    cfg = TrainConfig(seed=0, dropout=0.0)
    model = init_model(six_node_graph, cfg, np.random.default_rng(0))
    a = forward(model, six_node_graph.features, train_mode=False)
    b = forward(model, six_node_graph.features, train_mode=True,
                rng=np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_forward_matches_hand_computation():
    # 2 nodes, 1 edge, identity features, hand-set weights
    g = from_edges(2, np.array([[0, 1]]), np.eye(2, dtype=np.float32),
                   np.array([0, 1]), 2)
    w0 = np.array([[1.0, -1.0], [2.0, 0.5]])
    w1 = np.array([[0.3, -0.2], [0.1, 0.4]])
    model = GcnModel([w0.copy(), w1.copy()], normalized_adjacency(g), dropout=0.0)

    a_hat = np.full((2, 2), 0.5)
    h1 = np.maximum(a_hat @ np.eye(2) @ w0, 0.0)
    z2 = a_hat @ h1 @ w1
    expected = np.exp(z2 - z2.max(axis=1, keepdims=True))
    expected /= expected.sum(axis=1, keepdims=True)
    assert np.allclose(forward(model, g.features), expected, atol=1e-12)


def test_forward_rejects_dim_mismatch(six_node_graph):
    model = init_model(six_node_graph, TrainConfig(seed=0), np.random.default_rng(0))
    with pytest.raises(ValueError, match="feature dim"):
        forward(model, np.zeros((6, 7)))


def test_uniform_predictions_give_log_c_loss(six_node_graph):
    model = init_model(six_node_graph, TrainConfig(seed=0, dropout=0.0),
                       np.random.default_rng(0))
    for w in model.weights:
        w[:] = 0.0
    labels = {i: int(six_node_graph.labels[i]) for i in range(6)}
    loss, _ = loss_and_gradients(model, six_node_graph.features, labels,
                                 train_mode=False)
    assert loss == pytest.approx(np.log(3), rel=1e-12)


def test_weight_decay_term_exact(six_node_graph):
    model = init_model(six_node_graph, TrainConfig(seed=0, dropout=0.0),
                       np.random.default_rng(0))
    labels = {i: int(six_node_graph.labels[i]) for i in range(6)}
    plain, _ = loss_and_gradients(model, six_node_graph.features, labels,
                                  weight_decay=0.0, train_mode=False)
    decayed, _ = loss_and_gradients(model, six_node_graph.features, labels,
                                    weight_decay=0.1, train_mode=False)
    assert decayed - plain == pytest.approx(
        0.05 * float((model.weights[0] ** 2).sum()), rel=1e-12)


def test_gradients_match_central_differences(six_node_graph):
    cfg = TrainConfig(seed=0, dropout=0.0, num_layers=3, hidden_units=5)
    model = init_model(six_node_graph, cfg, np.random.default_rng(0))
    labels = {i: int(six_node_graph.labels[i]) for i in range(6)}

    _, analytic = loss_and_gradients(model, six_node_graph.features, labels,
                                     weight_decay=5e-4, train_mode=False)

    def loss_fn():
        value, _ = loss_and_gradients(model, six_node_graph.features, labels,
                                      weight_decay=5e-4, train_mode=False)
        return value

    numeric = finite_difference_grads(loss_fn, model.weights, eps=1e-4)
    for got, want in zip(analytic, numeric):
        scale = np.maximum(np.maximum(np.abs(got), np.abs(want)), 1e-12)
        assert (np.abs(got - want) / scale).max() < 1e-4


def test_sparse_and_dense_inputs_agree(six_node_graph):
    cfg = TrainConfig(seed=0, dropout=0.0)
    model = init_model(six_node_graph, cfg, np.random.default_rng(0))
    labels = {i: int(six_node_graph.labels[i]) for i in range(6)}
    dense_loss, dense_grads = loss_and_gradients(
        model, six_node_graph.features, labels, train_mode=False)
    sparse_loss, sparse_grads = loss_and_gradients(
        model, sp.csr_matrix(six_node_graph.features), labels, train_mode=False)
    assert sparse_loss == pytest.approx(dense_loss, rel=1e-12)
    for a, b in zip(dense_grads, sparse_grads):
        assert np.allclose(a, b, atol=1e-12)


def test_empty_label_set_rejected(six_node_graph):
    model = init_model(six_node_graph, TrainConfig(seed=0), np.random.default_rng(0))
    with pytest.raises(ValueError, match="empty"):
        loss_and_gradients(model, six_node_graph.features, {}, train_mode=False)


def test_unlabeled_targets_rejected(six_node_graph):
    model = init_model(six_node_graph, TrainConfig(seed=0), np.random.default_rng(0))
    with pytest.raises(ValueError, match="unlabeled"):
        loss_and_gradients(model, six_node_graph.features, {0: 0, 1: -1},
                           train_mode=False)


def test_train_separable_toy_to_perfection():
    g = separable_graph()
    labels = {0: 0, 7: 1}
    model, curve = train(g, labels, TrainConfig(seed=3, dropout=0.2))
    preds = predict(model, g.features)
    train_nodes = np.asarray(sorted(labels))
    assert np.array_equal(preds[train_nodes], [0, 1])
    # the whole toy graph is classified correctly within the epoch budget
    assert np.array_equal(preds, g.labels)
    assert curve[-1] < curve[0]


def test_train_deterministic_same_seed():
    g = separable_graph()
    labels = {0: 0, 7: 1}
    cfg = TrainConfig(seed=11)
    m1, c1 = train(g, labels, cfg)
    m2, c2 = train(g, labels, cfg)
    assert c1 == c2
    for a, b in zip(m1.weights, m2.weights):
        assert np.array_equal(a, b)


@pytest.mark.filterwarnings("ignore:overflow", "ignore:invalid value")
def test_train_aborts_on_divergence():
    g = separable_graph()
    feats = g.features.copy()
    feats[0, 0] = np.float32(1e38)  # overflows under squaring in float64 matmuls
    bad = from_edges(8, g.edge_array(), feats * feats, g.labels, 2)
    with pytest.raises(RuntimeError, match="non-finite"):
        train(bad, {0: 0, 7: 1}, TrainConfig(seed=0, epochs=5))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(num_layers=1)
    with pytest.raises(ValueError):
        TrainConfig(dropout=1.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)


def test_evaluate_contracts():
    g = separable_graph()
    labels = {0: 0, 7: 1}
    model, _ = train(g, labels, TrainConfig(seed=3))
    test_nodes = [1, 2, 3, 4, 5, 6]
    acc = evaluate(model, g, test_nodes, labeled_nodes=[0, 7])
    assert acc == 1.0
    with pytest.raises(ValueError, match="overlap"):
        evaluate(model, g, [0, 1], labeled_nodes=[0, 7])
    with pytest.raises(ValueError, match="empty"):
        evaluate(model, g, [], labeled_nodes=[0, 7])


def test_constant_predictor_accuracy_is_class_share():
    g = separable_graph()
    model = init_model(g, TrainConfig(seed=0, dropout=0.0), np.random.default_rng(0))
    for w in model.weights:
        w[:] = 0.0  # uniform output, argmax ties resolve to class 0
    test_nodes = np.arange(8)
    acc = evaluate(model, g, test_nodes)
    assert acc == pytest.approx((g.labels[test_nodes] == 0).mean())
