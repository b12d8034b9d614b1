"""Tests for connected-component labeling and cluster statistics."""

import numpy as np
import pytest

from ksrg.components import (
    ClusterStats,
    UnionFind,
    cluster_stats,
    component_labels,
    origin_not_in_giant,
)
from ksrg.model import ModelParams
from ksrg.sampler import SpatialGraph, sample_graph

from oracles import bfs_component_sizes


def toy_graph(num_vertices, edges, palm_origin=None):
    params = ModelParams(d=1, tau=2.5, alpha=2.0, sigma=1.0, beta=1.0, p=0.5)
    return SpatialGraph(
        volume_n=float(num_vertices),
        positions=np.zeros((num_vertices, 1)),
        marks=np.ones(num_vertices),
        edges=np.asarray(edges, dtype=np.int64).reshape(-1, 2),
        seed=0,
        params=params,
        palm_origin=palm_origin,
        vertex_ids=np.arange(num_vertices, dtype=np.int64),
    )


def test_union_find_basic():
    uf = UnionFind(6)
    uf.union(0, 1)
    uf.union(1, 2)
    uf.union(4, 5)
    assert uf.find(0) == uf.find(2)
    assert uf.find(3) != uf.find(0)
    assert uf.find(4) == uf.find(5)


def test_labels_first_occurrence_order():
    labels = component_labels(5, [(3, 4), (0, 2)])
    # vertex 0's component gets label 0, vertex 1's label 1, ...
    assert labels.tolist() == [0, 1, 0, 2, 2]


def test_labels_empty_edges():
    labels = component_labels(4, np.empty((0, 2), dtype=np.int64))
    assert labels.tolist() == [0, 1, 2, 3]


def test_engines_agree():
    rng = np.random.default_rng(0)
    for _ in range(30):
        m = int(rng.integers(2, 120))
        k = int(rng.integers(0, 3 * m))
        edges = rng.integers(0, m, size=(k, 2))
        edges = edges[edges[:, 0] != edges[:, 1]]
        a = component_labels(m, edges, engine="union_find")
        b = component_labels(m, edges, engine="scipy")
        assert np.array_equal(a, b)


def test_against_bfs_oracle_random_graphs():
    rng = np.random.default_rng(42)
    for _ in range(60):
        m = int(rng.integers(1, 200))
        k = int(rng.integers(0, 2 * m))
        edges = rng.integers(0, m, size=(k, 2))
        edges = edges[edges[:, 0] != edges[:, 1]]
        labels = component_labels(m, edges)
        sizes = np.sort(np.bincount(labels))[::-1].tolist()
        assert sizes == bfs_component_sizes(m, edges)


def test_cluster_stats_fields():
    g = toy_graph(7, [(0, 1), (1, 2), (3, 4)], palm_origin=5)
    stats = cluster_stats(g)
    assert stats.sizes_desc == (3, 2, 1, 1)
    assert stats.largest == 3
    assert stats.second_largest == 2
    assert stats.num_components == 4
    assert stats.origin_cluster == 1


def test_cluster_stats_no_palm():
    stats = cluster_stats(toy_graph(3, [(0, 1)]))
    assert stats.origin_cluster == 0
    assert stats.second_largest == 1


def test_cluster_stats_single_component():
    stats = cluster_stats(toy_graph(4, [(0, 1), (1, 2), (2, 3)]))
    assert stats.sizes_desc == (4,)
    assert stats.second_largest == 0


def test_cluster_stats_validates_order():
    with pytest.raises(ValueError):
        ClusterStats(
            sizes_desc=(1, 3),
            largest=3,
            second_largest=1,
            origin_cluster=0,
            num_components=2,
        )


def test_second_largest_drops_when_merged():
    before = cluster_stats(toy_graph(6, [(0, 1), (1, 2), (3, 4)]))
    after = cluster_stats(toy_graph(6, [(0, 1), (1, 2), (3, 4), (2, 3)]))
    assert before.second_largest == 2
    assert after.largest == 5
    assert after.second_largest == 1


def test_origin_not_in_giant_strict():
    # origin in the unique largest component
    g = toy_graph(5, [(0, 1), (1, 2)], palm_origin=0)
    assert origin_not_in_giant(g) is False
    # origin isolated
    g = toy_graph(5, [(0, 1), (1, 2)], palm_origin=4)
    assert origin_not_in_giant(g) is True
    # tie: origin cluster size equals the maximum, counts as "in"
    g = toy_graph(6, [(0, 1), (1, 2), (3, 4), (4, 5)], palm_origin=3)
    assert origin_not_in_giant(g) is False


def test_origin_not_in_giant_requires_palm():
    with pytest.raises(ValueError):
        origin_not_in_giant(toy_graph(3, [(0, 1)]))


def test_sampled_graph_pipeline():
    params = ModelParams(d=2, tau=2.5, alpha=2.0, sigma=1.0, beta=1.0, p=0.7)
    g = sample_graph(params, 200.0, seed=3, palm=True)
    stats = cluster_stats(g)
    labels = component_labels(g.num_vertices, g.edges)
    assert sum(stats.sizes_desc) == g.num_vertices
    assert stats.largest == np.bincount(labels).max()
    assert np.sort(np.bincount(labels))[::-1].tolist() == list(stats.sizes_desc)
