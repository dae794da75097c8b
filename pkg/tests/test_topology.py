import numpy as np
import pytest

from ticopd.topology import (
    Graph,
    build_graph,
    incidence,
    laplacian,
    neighbor_sets,
    spectral_info,
)


def test_graph_canonicalizes_edges():
    g = Graph(3, ((2, 0), (1, 0)))
    assert g.edges == ((0, 1), (0, 2))


def test_graph_rejects_self_loops():
    with pytest.raises(ValueError):
        Graph(3, ((0, 0), (0, 1), (1, 2)))


def test_graph_rejects_duplicate_edges():
    with pytest.raises(ValueError):
        Graph(3, ((0, 1), (1, 0), (1, 2)))


def test_graph_rejects_out_of_range():
    with pytest.raises(ValueError):
        Graph(3, ((0, 3), (0, 1), (1, 2)))


def test_graph_rejects_disconnected():
    with pytest.raises(ValueError):
        Graph(4, ((0, 1), (2, 3)))


def test_ring_structure():
    g = build_graph("ring", 5)
    assert g.n == 5 and g.m == 5
    degrees = neighbor_sets(g)[1]
    assert (degrees == 2).all()


def test_path_and_star_and_complete():
    p = build_graph("path", 4)
    assert p.m == 3
    s = build_graph("star", 5)
    assert s.m == 4
    assert neighbor_sets(s)[1][0] == 4
    k = build_graph("complete", 6)
    assert k.m == 15


def test_erdos_renyi_deterministic_and_connected():
    a = build_graph("erdos_renyi", 12, p=0.3, seed=5)
    b = build_graph("erdos_renyi", 12, p=0.3, seed=5)
    assert a.edges == b.edges
    c = build_graph("erdos_renyi", 12, p=0.3, seed=6)
    assert a.edges != c.edges


def test_erdos_renyi_needs_probability():
    with pytest.raises(ValueError):
        build_graph("erdos_renyi", 8, seed=0)


def test_unknown_kind():
    with pytest.raises(ValueError):
        build_graph("torus", 8)


def test_incidence_matches_laplacian():
    for kind, n in [("ring", 6), ("path", 5), ("star", 7), ("complete", 5)]:
        g = build_graph(kind, n)
        A = incidence(g)
        assert A.shape == (g.m, g.n)
        np.testing.assert_array_equal(A.T @ A, laplacian(g))


def test_laplacian_rows_sum_to_zero():
    g = build_graph("ring", 7)
    L = laplacian(g)
    np.testing.assert_array_equal(L.sum(axis=1), np.zeros(7))
    np.testing.assert_array_equal(L, L.T)


def test_ring4_eigenvalues():
    g = build_graph("ring", 4)
    info = spectral_info(g)
    np.testing.assert_allclose(sorted(info.eigenvalues), [0.0, 2.0, 2.0, 4.0], atol=1e-12)
    assert info.rho2 == pytest.approx(2.0, abs=1e-12)
    assert info.rho1 == pytest.approx(4.0, abs=1e-12)
    assert info.M == info.rho1


def test_complete3_eigenvalues():
    info = spectral_info(build_graph("complete", 3))
    np.testing.assert_allclose(sorted(info.eigenvalues), [0.0, 3.0, 3.0], atol=1e-12)


def test_path2_eigenvalues():
    info = spectral_info(build_graph("path", 2))
    np.testing.assert_allclose(sorted(info.eigenvalues), [0.0, 2.0], atol=1e-12)


def test_pinv_is_centering_inverse():
    for kind, n in [("ring", 8), ("star", 6), ("erdos_renyi", 10)]:
        g = build_graph(kind, n, p=0.4, seed=1)
        info = spectral_info(g)
        K = np.eye(n) - np.full((n, n), 1.0 / n)
        np.testing.assert_allclose(info.laplacian_pinv @ laplacian(g), K, atol=1e-10)
        # symmetric and annihilates the all-ones direction
        np.testing.assert_allclose(info.laplacian_pinv, info.laplacian_pinv.T, atol=1e-12)
        np.testing.assert_allclose(info.laplacian_pinv @ np.ones(n), np.zeros(n), atol=1e-10)


def test_neighbor_sets_sorted():
    g = Graph(4, ((3, 1), (1, 0), (2, 1)))
    neighbors, degrees = neighbor_sets(g)
    assert neighbors[1] == [0, 2, 3]
    assert degrees.tolist() == [1, 3, 1, 1]
