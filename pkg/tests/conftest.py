import numpy as np
import pytest

from dnsel import karate_club, save_container
from dnsel.synth import synthetic_citation_benchmark

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def karate():
    return karate_club()


@pytest.fixture(scope="session")
def benchmark_graph():
    """The citation-scale synthetic benchmark used by the acceptance suite."""
    return synthetic_citation_benchmark()


@pytest.fixture(scope="session")
def benchmark_container(benchmark_graph, tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "citation.bin"
    save_container(benchmark_graph, path)
    return path


@pytest.fixture()
def tiny_benchmark():
    """A fast, small cousin of the citation benchmark for protocol tests."""
    return synthetic_citation_benchmark(
        seed=3, class_sizes=(40, 35, 25), feature_dim=64, num_edges=180,
        community_scale=15, topic_block=24, topic_stride=16, mean_words=8.0)


def make_path_graph(rhos=None):
    """3-node path helper shared by a few golf tests."""
    from dnsel import from_edges

    features = np.zeros((3, 2), dtype=np.float32)
    return from_edges(3, np.array([[0, 1], [1, 2]]), features)
