import numpy as np
import pytest
import scipy.sparse as sp

from dnsel import (
    Graph,
    GraphFormatError,
    GraphValidationError,
    from_edges,
    karate_club,
    load_container,
    load_dataset,
    load_edgelist,
    save_container,
    validate,
)


def test_karate_counts(karate):
    stats = karate.stats()
    assert stats.nodes == 34
    assert stats.edges == 78
    assert stats.classes == 2
    assert stats.features == 34


def test_karate_symmetric_and_valid(karate):
    assert (karate.adj != karate.adj.T).nnz == 0
    assert validate(karate) == []


def test_karate_default_features_one_hot(karate):
    assert np.array_equal(karate.features, np.eye(34, dtype=np.float32))


def test_karate_feature_override():
    feats = np.ones((34, 3), dtype=np.float32)
    g = karate_club(features=feats)
    assert g.feature_dim == 3


def test_from_edges_symmetrizes_and_dedups():
    # duplicates, reversed pairs and self-loops all collapse
    edges = np.array([[0, 1], [1, 0], [0, 1], [2, 2], [1, 2]])
    g = from_edges(3, edges, np.zeros((3, 1)))
    assert g.num_edges == 2
    assert g.adj.diagonal().sum() == 0
    assert (g.adj != g.adj.T).nnz == 0


def test_symmetrization_idempotent():
    edges = np.array([[0, 1], [3, 2], [1, 2]])
    g1 = from_edges(4, edges, np.zeros((4, 1)))
    g2 = from_edges(4, g1.edge_array(), np.zeros((4, 1)))
    assert np.array_equal(g1.edge_array(), g2.edge_array())


def test_from_edges_rejects_out_of_range():
    with pytest.raises(GraphValidationError):
        from_edges(2, np.array([[0, 5]]), np.zeros((2, 1)))


def test_from_edges_rejects_bad_labels():
    with pytest.raises(GraphValidationError, match="label"):
        from_edges(2, np.zeros((0, 2)), np.zeros((2, 1)),
                   labels=np.array([0, 3]), num_classes=2)


def test_from_edges_feature_row_mismatch():
    with pytest.raises(GraphValidationError, match="feature"):
        from_edges(3, np.zeros((0, 2)), np.zeros((2, 1)))


def test_validate_reports_asymmetry():
    adj = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=float))
    g = Graph(adj, np.zeros((2, 1), dtype=np.float32))
    assert any("symmetric" in v for v in validate(g))


def test_validate_reports_label_range():
    g = from_edges(2, np.array([[0, 1]]), np.zeros((2, 1)),
                   labels=np.array([0, 1]), num_classes=2)
    # sneak an out-of-range label past the constructor
    bad = np.array([0, 2], dtype=np.int32)
    g.labels = bad
    assert any("labels outside" in v for v in validate(g))


def test_container_round_trip(tmp_path, karate):
    path = tmp_path / "karate.bin"
    save_container(karate, path)
    loaded = load_container(path)
    assert loaded.stats() == karate.stats()
    assert np.array_equal(loaded.features, karate.features)
    assert np.array_equal(loaded.labels, karate.labels)
    assert np.array_equal(loaded.edge_array(), karate.edge_array())
    # save(load(x)) is byte-identical
    path2 = tmp_path / "again.bin"
    save_container(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_container_without_labels(tmp_path):
    g = from_edges(3, np.array([[0, 1]]), np.random.rand(3, 4))
    path = tmp_path / "plain.bin"
    save_container(g, path)
    loaded = load_container(path)
    assert loaded.labels is None
    assert loaded.num_classes == 0


def test_container_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"not json\n\x00\x01")
    with pytest.raises(GraphFormatError, match="line 1"):
        load_container(path)


def test_container_rejects_truncation(tmp_path, karate):
    path = tmp_path / "trunc.bin"
    save_container(karate, path)
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(GraphFormatError, match="bytes"):
        load_container(path)


def test_load_dataset_dispatch(tmp_path, karate):
    path = tmp_path / "karate.bin"
    save_container(karate, path)
    g = load_dataset(path, fmt="container")
    assert g.num_nodes == 34
    with pytest.raises(ValueError, match="unknown dataset format"):
        load_dataset(path, fmt="pickle")
    with pytest.raises(ValueError, match="features_path"):
        load_dataset(path, fmt="edgelist")


def _write_tsv(path, rows):
    path.write_text("\n".join("\t".join(str(v) for v in row) for row in rows) + "\n")


def test_edgelist_round_trip(tmp_path):
    tsv = tmp_path / "nodes.tsv"
    edges = tmp_path / "cites.txt"
    _write_tsv(tsv, [
        [101, 1.0, 0.0, "ai"],
        [205, 0.0, 1.0, "systems"],
        [309, 1.0, 1.0, "ai"],
    ])
    edges.write_text("101 205\n309 101\n")
    g = load_edgelist(edges, tsv)
    assert g.num_nodes == 3
    assert g.num_edges == 2
    assert g.num_classes == 2
    # class names map sorted: ai -> 0, systems -> 1; rows keep file order
    assert g.labels.tolist() == [0, 1, 0]
    assert g.features.shape == (3, 2)


def test_edgelist_without_labels(tmp_path):
    tsv = tmp_path / "nodes.tsv"
    edges = tmp_path / "edges.txt"
    _write_tsv(tsv, [[0, 0.5, 1.5], [1, 2.5, 3.5]])
    edges.write_text("0 1\n")
    g = load_edgelist(edges, tsv)
    assert g.labels is None
    assert g.features.shape == (2, 2)


def test_empty_edge_file_three_nodes(tmp_path):
    tsv = tmp_path / "nodes.tsv"
    edges = tmp_path / "edges.txt"
    _write_tsv(tsv, [[0, 1.0], [1, 2.0], [2, 3.0]])
    edges.write_text("")
    g = load_edgelist(edges, tsv)
    assert g.num_nodes == 3
    assert g.num_edges == 0
    assert validate(g) == []


def test_edgelist_error_line_numbers(tmp_path):
    tsv = tmp_path / "nodes.tsv"
    edges = tmp_path / "edges.txt"
    _write_tsv(tsv, [[0, 1.0], [1, 2.0]])
    edges.write_text("0 1\n0 1 2\n")
    with pytest.raises(GraphFormatError, match="line 2"):
        load_edgelist(edges, tsv)
    edges.write_text("0 7\n")
    with pytest.raises(GraphFormatError, match="unknown node id 7"):
        load_edgelist(edges, tsv)


def test_tsv_error_cases(tmp_path):
    tsv = tmp_path / "nodes.tsv"
    edges = tmp_path / "edges.txt"
    edges.write_text("")
    _write_tsv(tsv, [[0, 1.0, "x"], [0, 2.0, "y"]])
    with pytest.raises(GraphFormatError, match="duplicate node id"):
        load_edgelist(edges, tsv)
    _write_tsv(tsv, [[0, 1.0, "x"], [1, "oops", "y"]])
    with pytest.raises(GraphFormatError, match="line 2"):
        load_edgelist(edges, tsv)
    tsv.write_text("")
    with pytest.raises(GraphFormatError, match="empty"):
        load_edgelist(edges, tsv)


def test_isolated_nodes_are_legal():
    g = from_edges(4, np.array([[0, 1]]), np.ones((4, 2)))
    assert validate(g) == []
    assert g.degrees.tolist() == [1, 1, 0, 0]


def test_loader_keeps_declared_node_count(tmp_path):
    # nodes absent from the edge file still exist via the feature table
    tsv = tmp_path / "nodes.tsv"
    edges = tmp_path / "edges.txt"
    _write_tsv(tsv, [[i, float(i)] for i in range(5)])
    edges.write_text("0 1\n")
    g = load_edgelist(edges, tsv)
    assert g.num_nodes == 5
