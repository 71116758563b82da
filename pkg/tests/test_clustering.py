import numpy as np
import pytest

from gwgl.clustering import ClusteringConfig, build_similarity_graph, \
    cluster_predictors, eigengap_select, normalized_laplacian, select_knn_k, \
    select_sigma
from gwgl.data import SyntheticSpec, generate_synthetic, standardize
from gwgl.groups import validate_groups


class TestSelectKnnK:
    def test_two_points(self):
        assert select_knn_k(np.array([[0.0], [1.0]])) == 1

    def test_collinear_chain(self):
        # the union rule chains equally spaced points at k=1
        assert select_knn_k(np.array([[0.0], [1.0], [2.0]])) == 1

    def test_two_separated_triples(self):
        pts = np.array([[0.0], [0.1], [0.2], [50.0], [50.1], [50.2]])
        assert select_knn_k(pts) == 3

    def test_single_point_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            select_knn_k(np.array([[0.0]]))


class TestSelectSigma:
    def test_two_points(self):
        assert select_sigma(np.array([[0.0], [3.0]]), 1) == pytest.approx(3.0)

    def test_equally_spaced(self):
        assert select_sigma(np.array([[0.0], [1.0], [2.0]]), 1) \
            == pytest.approx(1.0)

    def test_matches_brute_force_sort(self):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((20, 3))
        k = 3
        dists = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        kth = []
        for i in range(20):
            row = np.sort(np.delete(dists[i], i))
            kth.append(row[k - 1])
        assert select_sigma(pts, k) == pytest.approx(float(np.mean(kth)),
                                                     abs=1e-12)


class TestSimilarityGraph:
    def test_gaussian_weight_at_scale(self):
        pts = np.array([[0.0], [1.0]])
        g = build_similarity_graph(pts, ClusteringConfig(
            k_neighbors=1, sigma=np.sqrt(0.5)))  # d^2 = 2 sigma^2
        assert g.weights[0, 1] == pytest.approx(np.exp(-1.0), abs=1e-12)

    def test_identical_neighbors_weight_one(self):
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]])
        g = build_similarity_graph(pts, ClusteringConfig(k_neighbors=1,
                                                         sigma=1.0))
        assert g.weights[0, 1] == pytest.approx(1.0)

    def test_non_neighbors_zero(self):
        pts = np.array([[0.0], [0.1], [9.0], [9.1]])
        g = build_similarity_graph(pts, ClusteringConfig(k_neighbors=1,
                                                         sigma=1.0))
        assert g.weights[0, 2] == 0.0
        assert np.all(np.diag(g.weights) == 0.0)
        assert np.array_equal(g.weights, g.weights.T)

    def test_identical_points_sigma_error(self):
        pts = np.zeros((4, 2))
        with pytest.raises(ValueError, match="sigma"):
            build_similarity_graph(pts, ClusteringConfig())


class TestEigengap:
    def test_clear_gap(self):
        assert eigengap_select([0.0, 0.001, 0.002, 0.9, 1.1]) == 3

    def test_all_equal_tie_breaks_small(self):
        assert eigengap_select([0.5, 0.5, 0.5, 0.5]) == 1

    def test_two_values(self):
        assert eigengap_select([0.0, 1.0]) == 1

    def test_needs_two(self):
        with pytest.raises(ValueError):
            eigengap_select([0.3])


def planted_design(rng, sizes, rho, n):
    spec = SyntheticSpec(group_sizes=sizes, rho_w=rho, sigma2=1.0,
                         n_samples=n, seed=int(rng.integers(2 ** 31)))
    return standardize(generate_synthetic(spec))


class TestClusterPredictors:
    def test_each_predictor_its_own_group(self):
        rng = np.random.default_rng(2)
        ds = planted_design(rng, (2, 2), 0.5, 40)
        s = cluster_predictors(ds.X, ClusteringConfig(n_clusters=4))
        assert s.sizes == (1, 1, 1, 1)

    def test_single_cluster(self):
        rng = np.random.default_rng(3)
        ds = planted_design(rng, (2, 2), 0.5, 40)
        s = cluster_predictors(ds.X, ClusteringConfig(n_clusters=1))
        assert s.sizes == (4,)
        assert validate_groups(s, 4)

    def test_recovers_planted_blocks(self):
        hits = 0
        for seed in range(10):
            spec = SyntheticSpec(group_sizes=(4, 4), rho_w=0.95, sigma2=1.0,
                                 n_samples=120, seed=seed)
            ds = standardize(generate_synthetic(spec))
            s = cluster_predictors(ds.X, ClusteringConfig(n_clusters=2,
                                                          seed=seed))
            parts = {frozenset(g) for g in s.groups}
            if parts == {frozenset(range(4)), frozenset(range(4, 8))}:
                hits += 1
        assert hits >= 9

    def test_output_validates(self):
        rng = np.random.default_rng(5)
        ds = planted_design(rng, (3, 3, 2), 0.7, 60)
        s = cluster_predictors(ds.X, ClusteringConfig(n_clusters="auto",
                                                      seed=1))
        assert validate_groups(s, 8)

    def test_permutation_invariance(self):
        spec = SyntheticSpec(group_sizes=(4, 4), rho_w=0.9, sigma2=1.0,
                             n_samples=100, seed=11)
        ds = standardize(generate_synthetic(spec))
        cfg = ClusteringConfig(n_clusters=2, seed=4)
        base = cluster_predictors(ds.X, cfg)
        perm = np.random.default_rng(9).permutation(8)
        permuted = cluster_predictors(ds.X[:, perm], cfg)
        mapped = {frozenset(int(perm[i]) for i in g) for g in permuted.groups}
        assert mapped == {frozenset(g) for g in base.groups}

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(6)
        ds = planted_design(rng, (3, 3), 0.6, 50)
        cfg = ClusteringConfig(n_clusters=2, seed=12)
        a = cluster_predictors(ds.X, cfg)
        b = cluster_predictors(ds.X, cfg)
        assert a == b


class TestLaplacianSpectrum:
    def test_eigenvalue_range_and_component_count(self):
        # k=1 on two far clusters leaves the graph disconnected
        pts = np.vstack([np.random.default_rng(7).normal(0, 0.1, (5, 2)),
                         np.random.default_rng(8).normal(50, 0.1, (4, 2))])
        g = build_similarity_graph(pts, ClusteringConfig(k_neighbors=2,
                                                         sigma=1.0))
        L = normalized_laplacian(g.weights)
        ev = np.linalg.eigvalsh(L)
        assert ev.min() >= -1e-10
        assert ev.max() <= 2.0 + 1e-10
        # count components by BFS on the weight support
        adj = g.weights > 0
        seen = np.zeros(9, dtype=bool)
        comps = 0
        for start in range(9):
            if seen[start]:
                continue
            comps += 1
            stack = [start]
            seen[start] = True
            while stack:
                i = stack.pop()
                for j in np.nonzero(adj[i])[0]:
                    if not seen[j]:
                        seen[j] = True
                        stack.append(j)
        assert np.sum(ev < 1e-10) == comps
