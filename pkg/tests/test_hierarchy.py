import json

import numpy as np
import pytest

from matamg import (
    AmgConfig,
    CoarseningStagnation,
    SparseMatrix,
    build_hierarchy,
    estimate_spectral_radius,
    one_norm_diagonal,
    operator_complexity,
    smooth_prolongator,
    two_domain_problem,
)
from matamg.aggregation import Aggregation, tentative_prolongator
from matamg.hierarchy import Hierarchy, Level
from matamg.sparse import identity
from matamg.strength import AuxiliaryData


def lap1d(n):
    return SparseMatrix.from_dense(2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))


class TestConfig:
    def test_defaults(self):
        c = AmgConfig()
        assert (c.max_levels, c.max_coarse_size, c.power_iterations) == (10, 5000, 10)
        assert c.omega_sym == 4.0 / 3.0
        assert (c.chebyshev_degree, c.chebyshev_eig_ratio) == (2, 20.0)

    def test_alias(self):
        assert AmgConfig(soc_kind="material").soc_kind == "material_dlap"

    @pytest.mark.parametrize("kw", [{"theta": 1.2}, {"max_levels": 0}, {"soc_kind": "x"}, {"drop_kind": "x"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            AmgConfig(**kw)


class TestSpectralRadius:
    def test_identity(self):
        assert estimate_spectral_radius(identity(5), np.ones(5)) == pytest.approx(1.0, rel=1e-15)

    def test_diagonal(self):
        A = SparseMatrix.from_dense(np.diag([1.0, 2.0, 4.0]))
        lam = estimate_spectral_radius(A, np.ones(3), iters=60)
        assert lam == pytest.approx(4.0, rel=1e-10)
        assert estimate_spectral_radius(A, np.ones(3)) <= 4.0

    def test_rejects_nonpositive_scaling(self):
        with pytest.raises(ValueError):
            estimate_spectral_radius(identity(2), np.array([1.0, 0.0]))

    @staticmethod
    def _random_spd(rng, n=10):
        B = rng.standard_normal((n, n))
        S = 0.5 * (B + B.T)
        np.fill_diagonal(S, 0.0)
        return S + np.diag(np.abs(S).sum(axis=1) + rng.random(n))

    @staticmethod
    def _ratio(dense, d, iters=10):
        lam = estimate_spectral_radius(SparseMatrix.from_dense(dense), d, iters)
        return lam / np.linalg.eigvals(dense / d[:, None]).real.max()

    def test_random_spd_vs_dense_oracle(self):
        dense = self._random_spd(np.random.default_rng(0))
        assert self._ratio(dense, np.abs(dense).sum(axis=1)) == pytest.approx(1.0, abs=0.1)

    def test_filtered_operator_vs_dense_oracle(self):
        from matamg import drop_pointwise, filter_matrix, soc_material_dlap, symmetrize_mask

        p = two_domain_problem(16, 1e4)
        aux = AuxiliaryData(p.coords, p.node_materials)
        A_F = filter_matrix(p.A, symmetrize_mask(drop_pointwise(soc_material_dlap(p.A, aux), 0.08)))
        assert self._ratio(A_F.to_dense(), one_norm_diagonal(A_F)) == pytest.approx(1.0, abs=0.1)

    def test_rate_over_random_instances(self):
        # ten plain power steps miss by more than 10% when the top two
        # eigenvalues nearly coincide; that happens for roughly 5% of draws
        rng = np.random.default_rng(2024)
        hits = [abs(self._ratio(m, np.abs(m).sum(axis=1)) - 1.0) <= 0.1
                for m in (self._random_spd(rng) for _ in range(300))]
        assert np.mean(hits) >= 0.9

    def test_never_overestimates(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            m = self._random_spd(rng)
            assert self._ratio(m, np.abs(m).sum(axis=1)) <= 1.0 + 1e-12

    def test_more_iterations_converge(self):
        dense = self._random_spd(np.random.default_rng(3))
        assert self._ratio(dense, np.diag(dense).copy(), 200) == pytest.approx(1.0, rel=1e-6)


class TestSmoothProlongator:
    def test_omega_zero(self):
        P_hat = SparseMatrix.from_dense(np.ones((3, 1)))
        assert smooth_prolongator(lap1d(3), np.ones(3), P_hat, 0.0, 1.0) is P_hat

    def test_nonpositive_lambda(self):
        P_hat = SparseMatrix.from_dense(np.ones((3, 1)))
        assert smooth_prolongator(lap1d(3), np.ones(3), P_hat, 4 / 3, 0.0) is P_hat
        assert smooth_prolongator(lap1d(3), np.ones(3), P_hat, 4 / 3, np.inf) is P_hat

    def test_dense_oracle_chain(self):
        A_F = lap1d(3)
        d = one_norm_diagonal(A_F)
        np.testing.assert_array_equal(d, [3.0, 4.0, 3.0])
        lam = estimate_spectral_radius(A_F, d)
        P_hat = SparseMatrix.from_dense(np.ones((3, 1)))
        P = smooth_prolongator(A_F, d, P_hat, 4 / 3, lam).to_dense()
        dense = (np.eye(3) - (4 / 3) / lam * np.diag(1 / d) @ A_F.to_dense()) @ np.ones((3, 1))
        np.testing.assert_allclose(P, dense, rtol=1e-14)
        # the rows are 1 - w/3, 1, 1 - w/3 by hand
        w = (4 / 3) / lam
        np.testing.assert_allclose(P.ravel(), [1 - w / 3, 1.0, 1 - w / 3], rtol=1e-14)

    def test_constant_preserved_on_zero_sum_rows(self):
        n = 12
        A = lap1d(n).to_dense()
        A[0, 0] = A[-1, -1] = 1.0  # Neumann ends: every row sums to zero
        A_F = SparseMatrix.from_dense(A)
        agg = Aggregation(np.repeat(np.arange(4), 3), 4, np.array([1, 4, 7, 10]))
        P_hat = tentative_prolongator(agg, n)
        d = one_norm_diagonal(A_F)
        P = smooth_prolongator(A_F, d, P_hat, 4 / 3, estimate_spectral_radius(A_F, d))
        np.testing.assert_allclose(P @ np.ones(4), np.ones(n), rtol=0, atol=1e-10)

    def test_pattern_bound(self):
        A_F = lap1d(9)
        agg = Aggregation(np.repeat(np.arange(3), 3), 3, np.array([1, 4, 7]))
        P_hat = tentative_prolongator(agg, 9)
        P = smooth_prolongator(A_F, one_norm_diagonal(A_F), P_hat, 4 / 3, 1.0)
        allowed = (np.abs(P_hat.to_dense()) + np.abs(A_F.to_dense()) @ np.abs(P_hat.to_dense())) > 0
        assert not np.any((P.to_dense() != 0) & ~allowed)


class TestOperatorComplexity:
    def _fake(self, nnzs):
        levels = []
        for k in nnzs:
            A = SparseMatrix.from_coo(np.zeros(k, int), np.arange(k), np.ones(k), (1, k))
            levels.append(Level(A, None, None))
        return Hierarchy(levels, AmgConfig())

    def test_single(self):
        assert operator_complexity(self._fake([100])) == 1.0

    def test_two_levels(self):
        assert operator_complexity(self._fake([100, 30])) == pytest.approx(1.3, rel=1e-15)


@pytest.fixture(scope="module")
def h_1e4():
    return build_hierarchy(two_domain_problem(32, 1e4), AmgConfig(theta=0.08, max_coarse_size=50))


class TestBuildHierarchy:
    def test_small_problem_one_level(self):
        p = two_domain_problem(4, 1.0)
        h = build_hierarchy(p, AmgConfig())
        assert h.n_levels == 1 and h.operator_complexity == 1.0 and h.status == "ok"

    def test_two_domain_structure(self):
        h = build_hierarchy(two_domain_problem(32, 1.0), AmgConfig(theta=0.08, max_coarse_size=50))
        sizes = [lev.n for lev in h.levels]
        assert len(sizes) >= 2 and all(a > b for a, b in zip(sizes, sizes[1:]))
        assert h.levels[-1].n <= 50
        for fine, coarse in zip(h.levels, h.levels[1:]):
            assert fine.P.n_rows == fine.n and fine.P.n_cols == coarse.n
            assert len(coarse.aux) == coarse.n

    def test_coarse_operators_symmetric(self, h_1e4):
        for lev in h_1e4.levels:
            A = lev.A.to_scipy()
            assert abs(A - A.T).max() <= 1e-10 * abs(A).max()

    def test_near_null_space_propagates(self, h_1e4):
        checked = 0
        for fine, coarse in zip(h_1e4.levels, h_1e4.levels[1:]):
            tol_f = 1e-12 * np.abs(fine.diag).max()
            z = fine.A @ (fine.P @ np.ones(fine.P.n_cols))
            Pc = fine.P.to_scipy().tocsc()
            clean = np.array([np.all(np.abs(z[Pc.indices[Pc.indptr[j]:Pc.indptr[j + 1]]]) <= tol_f)
                              for j in range(coarse.n)])
            rs = coarse.A @ np.ones(coarse.n)
            assert np.all(np.abs(rs[clean]) <= 1e-8 * np.abs(coarse.diag).max())
            checked += clean.sum()
        assert checked > 0

    def test_deterministic(self):
        p = two_domain_problem(16, 1e4)
        cfg = AmgConfig(theta=0.08, max_coarse_size=20)
        a, b = build_hierarchy(p, cfg), build_hierarchy(p, cfg)
        assert a.n_levels == b.n_levels
        for la, lb in zip(a.levels, b.levels):
            assert la.A.same_pattern(lb.A)
            np.testing.assert_array_equal(la.A.values, lb.A.values)
            assert la.lambda_smoother == lb.lambda_smoother

    def test_summary_json(self, h_1e4):
        d = json.loads(h_1e4.to_json())
        assert [lv["n"] for lv in d["levels"]] == [lev.n for lev in h_1e4.levels]
        assert d["operator_complexity"] == h_1e4.operator_complexity
        assert d["levels"][0]["aggregates"] == h_1e4.levels[1].n

    def test_stagnation_flagged(self):
        # theta = 1 drops everything: all singletons
        p = two_domain_problem(8, 1.0)
        h = build_hierarchy(p, AmgConfig(theta=1.0, max_coarse_size=10))
        assert h.status == "stagnated" and h.failed and h.n_levels == 1
        assert h.levels[0].P is None and h.coarse_solver is not None
        with pytest.raises(CoarseningStagnation):
            build_hierarchy(p, AmgConfig(theta=1.0, max_coarse_size=10), strict=True)

    def test_max_levels_flagged(self):
        h = build_hierarchy(two_domain_problem(32, 1.0), AmgConfig(max_levels=2, max_coarse_size=10))
        assert h.n_levels == 2 and h.status == "max_levels"

    def test_bare_matrix_needs_aux(self):
        p = two_domain_problem(4, 1.0)
        with pytest.raises(ValueError):
            build_hierarchy(p.A)
        aux = AuxiliaryData(p.coords, p.node_materials)
        assert build_hierarchy(p.A, aux=aux).n_levels == 1
