"""Deterministic synthetic graphs for tests, demos and benchmarks.

``synthetic_citation_benchmark`` builds a citation-network stand-in sized
like the classic Cora benchmark (2708 nodes, 1433 binary word features,
7 classes, ~5300 undirected edges): a degree-skewed homophilous block model
with topic-model word features.  It exists because the upstream pickled
datasets are not redistributable with this package; experiments accept any
container file in their place.
"""

from __future__ import annotations

import numpy as np

from .graph_io import Graph, from_edges

CORA_CLASS_SIZES = (818, 426, 418, 351, 298, 217, 180)


def random_graph(seed: int, max_nodes: int = 50, feature_dim: int | None = None,
                 labeled: bool = False) -> Graph:
    """Small random graph with continuous features, for property tests."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_nodes + 1))
    p = float(rng.uniform(0.0, 0.3))
    upper = np.triu_indices(n, k=1)
    keep = rng.random(upper[0].shape[0]) < p
    edges = np.stack([upper[0][keep], upper[1][keep]], axis=1)
    d = feature_dim or int(rng.integers(1, 9))
    features = rng.normal(size=(n, d)).astype(np.float32)
    labels = None
    num_classes = 0
    if labeled:
        num_classes = int(rng.integers(2, 5))
        labels = rng.integers(0, num_classes, size=n).astype(np.int32)
    return from_edges(n, edges, features, labels, num_classes)


def sparse_random_graph(num_nodes: int, num_edges: int, seed: int,
                        feature_dim: int = 16) -> Graph:
    """Uniform random graph with an exact edge count, for scaling runs."""
    rng = np.random.default_rng(seed)
    max_edges = num_nodes * (num_nodes - 1) // 2
    if num_edges > max_edges:
        raise ValueError(f"{num_edges} edges impossible on {num_nodes} nodes")
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < num_edges:
        batch = rng.integers(0, num_nodes, size=(2 * (num_edges - len(chosen)) + 16, 2))
        for u, v in batch:
            if u == v:
                continue
            pair = (int(min(u, v)), int(max(u, v)))
            chosen.add(pair)
            if len(chosen) == num_edges:
                break
    edges = np.asarray(sorted(chosen), dtype=np.int64)
    features = rng.normal(size=(num_nodes, feature_dim)).astype(np.float32)
    return from_edges(num_nodes, edges, features)


def synthetic_citation_benchmark(seed: int = 7,
                                 class_sizes: tuple[int, ...] = CORA_CLASS_SIZES,
                                 feature_dim: int = 1433,
                                 num_edges: int = 5278,
                                 community_scale: int = 60,
                                 p_within_community: float = 0.60,
                                 p_within_class: float = 0.21,
                                 topic_weight: float = 0.25,
                                 topic_block: int = 240,
                                 topic_stride: int = 100,
                                 off_topic_rate: float = 0.18,
                                 label_noise: float = 0.12,
                                 mean_words: float = 18.0,
                                 degree_skew: float = 2.0) -> Graph:
    """Citation-benchmark stand-in: multimodal communities + topic words.

    Every class is split into several communities of roughly
    ``community_scale`` nodes, so labels are multimodal the way citation
    topics are: edges land inside a community with probability
    ``p_within_community``, elsewhere in the class with ``p_within_class``,
    and across classes otherwise (edge homophily is the sum of the first
    two).  Node degrees follow a Pareto propensity, and each node's binary
    feature row is a bag of words mixing a shared vocabulary-wide Zipf
    distribution with a class topic block (``off_topic_rate`` of nodes draw
    from the shared distribution only).  Topic blocks of adjacent classes
    overlap whenever ``topic_stride`` < ``topic_block``, and ``label_noise``
    of the labels are resampled, mimicking genuinely confusable topics and
    imperfect annotations.
    """
    rng = np.random.default_rng(seed)
    num_nodes = int(sum(class_sizes))
    num_classes = len(class_sizes)
    labels = np.repeat(np.arange(num_classes), class_sizes).astype(np.int32)
    # interleave classes so node index carries no class information
    order = rng.permutation(num_nodes)
    labels = labels[order]

    # split each class into communities of ~community_scale nodes
    community = np.zeros(num_nodes, dtype=np.int64)
    next_comm = 0
    comm_members: list[np.ndarray] = []
    comm_class: list[int] = []
    for c in range(num_classes):
        members = rng.permutation(np.flatnonzero(labels == c))
        pieces = max(2, int(round(members.size / community_scale)))
        for chunk in np.array_split(members, pieces):
            community[chunk] = next_comm
            comm_members.append(np.sort(chunk))
            comm_class.append(c)
            next_comm += 1

    propensity = rng.pareto(degree_skew, size=num_nodes) + 1.0
    class_members = [np.flatnonzero(labels == c) for c in range(num_classes)]

    def pick(pool: np.ndarray) -> int:
        weights = propensity[pool]
        return int(rng.choice(pool, p=weights / weights.sum()))

    comm_sizes = np.asarray([m.size for m in comm_members], dtype=np.float64)
    comm_p = comm_sizes / comm_sizes.sum()
    class_p = np.asarray(class_sizes, dtype=np.float64) / num_nodes

    chosen: set[tuple[int, int]] = set()
    while len(chosen) < num_edges:
        roll = rng.random()
        if roll < p_within_community:
            comm = int(rng.choice(len(comm_members), p=comm_p))
            pool = comm_members[comm]
            u, v = pick(pool), pick(pool)
        elif roll < p_within_community + p_within_class:
            c = int(rng.choice(num_classes, p=class_p))
            u, v = pick(class_members[c]), pick(class_members[c])
        else:
            c1, c2 = rng.choice(num_classes, size=2, replace=False, p=class_p)
            u, v = pick(class_members[c1]), pick(class_members[c2])
        if u == v:
            continue
        chosen.add((min(u, v), max(u, v)))
    edges = np.asarray(sorted(chosen), dtype=np.int64)

    # word distributions: shared Zipf base plus one topic block per class
    base = 1.0 / np.arange(1, feature_dim + 1)
    base = base[rng.permutation(feature_dim)]
    base /= base.sum()
    class_word_p = np.empty((num_classes, feature_dim))
    for c in range(num_classes):
        topic = np.zeros(feature_dim)
        start = (c * topic_stride) % max(feature_dim - topic_block, 1)
        weights = 1.0 / np.arange(1, topic_block + 1)
        topic[start:start + topic_block] = weights / weights.sum()
        class_word_p[c] = (1.0 - topic_weight) * base + topic_weight * topic

    features = np.zeros((num_nodes, feature_dim), dtype=np.float32)
    for i in range(num_nodes):
        count = max(1, int(rng.poisson(mean_words)))
        word_p = base if rng.random() < off_topic_rate else class_word_p[labels[i]]
        words = rng.choice(feature_dim, size=count, p=word_p)
        features[i, np.unique(words)] = 1.0

    if label_noise > 0:
        flip = np.flatnonzero(rng.random(num_nodes) < label_noise)
        labels = labels.copy()
        labels[flip] = rng.integers(0, num_classes, size=flip.size)

    return from_edges(num_nodes, edges, features, labels, num_classes)
