import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randsum.dist import geometric, pmf_new, point_mass, uniform
from randsum.errors import SupportExceedsK
from randsum.limit import (
    apply,
    build_operator,
    fixed_point,
    residual_fixed_point_equation,
)
from randsum.process import ProcessSpec, evolve

from oracles import extinction_probability

COIN = uniform(0, 1)
SUPER = pmf_new(0, [0.25, 0, 0.75])


class TestBuild:
    def test_identity_law_gives_identity_matrix(self):
        M = build_operator(point_mass(1), 4)
        assert np.array_equal(M.entries, np.eye(5))
        assert np.all(M.column_deficits == 0)

    def test_coin_column(self):
        M = build_operator(COIN, 4)
        assert list(M.entries[:, 2]) == [0.25, 0.5, 0.25, 0, 0]
        assert list(M.entries[:, 0]) == [1, 0, 0, 0, 0]

    def test_geometric_deficits_increase(self):
        M = build_operator(geometric(0.5, 3), 3)
        d = M.column_deficits
        assert d[0] == 0
        assert all(b > a for a, b in zip(d[1:], d[2:]))

    def test_columns_account_for_all_mass(self):
        M = build_operator(geometric(0.7, 30), 30)
        np.testing.assert_allclose(M.entries.sum(axis=0) + M.column_deficits, 1.0, atol=1e-12)
        assert np.all((M.entries >= 0) & (M.entries <= 1))

    @pytest.mark.parametrize("weights", [[0.5, 0.5], [0.2, 0.3, 0.5], [0.1, 0.0, 0.6, 0.3]])
    def test_stochastic_when_columns_fit(self, weights):
        xi = pmf_new(0, weights)
        K = 24
        M = build_operator(xi, K)
        sums = M.entries.sum(axis=0)
        assert np.all(sums <= 1 + 1e-12)
        for k in range(K + 1):
            if k * xi.support_end <= K:
                assert sums[k] == pytest.approx(1.0, abs=1e-12)

    def test_lazy_matches_dense(self):
        xi = pmf_new(0, [0.3, 0.3, 0.4])
        dense = build_operator(xi, 40)
        lazy = build_operator(xi, 40, dense_limit=10)
        assert not lazy.is_dense and dense.is_dense
        np.testing.assert_array_equal(np.column_stack(list(lazy.columns())), dense.entries)
        np.testing.assert_array_equal(lazy.diagonal(), np.diag(dense.entries))
        f = pmf_new(0, np.arange(1, 41, dtype=float))
        a, b = apply(dense, f), apply(lazy, f)
        np.testing.assert_allclose(a.probs, b.probs, rtol=0, atol=1e-15)
        assert a.mass_deficit == pytest.approx(b.mass_deficit, abs=1e-15)

    def test_matrix_is_read_only(self):
        M = build_operator(COIN, 4)
        with pytest.raises(ValueError):
            M.entries[0, 0] = 0.5

    def test_bad_order(self):
        with pytest.raises(ValueError):
            build_operator(COIN, 0)


class TestApply:
    def test_identity(self):
        M = build_operator(point_mass(1), 6)
        f = pmf_new(1, [0.2, 0.3, 0.5])
        g = apply(M, f)
        assert g.offset == f.offset and list(g.probs) == list(f.probs)

    def test_coin(self):
        g = apply(build_operator(COIN, 4), point_mass(2))
        assert list(g.probs) == [0.25, 0.5, 0.25]

    def test_support_beyond_K(self):
        with pytest.raises(SupportExceedsK):
            apply(build_operator(COIN, 4), point_mass(5))

    def test_deficit_adds_up(self):
        M = build_operator(point_mass(2), 6)
        g = apply(M, pmf_new(2, [1, 1]))
        # 2 -> 4 stays, 3 -> 6 stays
        assert g.mass_deficit == 0.0
        g = apply(M, pmf_new(3, [1, 1]))
        # 3 -> 6 stays, 4 -> 8 escapes
        assert g.mass_deficit == 0.5 and g.pmf_at(6) == 0.5

    @pytest.mark.parametrize(
        "x0, xi, K",
        [(2, COIN, 10), (1, SUPER, 60), (3, pmf_new(0, [0.2, 0.3, 0.5]), 80), (1, geometric(0.5, 40), 40)],
    )
    def test_matches_evolve(self, x0, xi, K):
        M = build_operator(xi, K)
        laws = evolve(ProcessSpec(x0, xi, K), 20)
        f = point_mass(x0)
        for n in range(1, 21):
            f = apply(M, f)
            want = laws[n].dense(K + 1)
            np.testing.assert_allclose(f.dense(K + 1), want, rtol=0, atol=1e-12)
            assert f.mass_deficit == pytest.approx(laws[n].mass_deficit, abs=1e-12)


class TestResidual:
    def test_zero_is_fixed(self):
        for xi in [COIN, SUPER, geometric(0.5, 30)]:
            assert residual_fixed_point_equation(build_operator(xi, 30), point_mass(0)) == 0.0

    def test_identity(self):
        assert residual_fixed_point_equation(build_operator(point_mass(1), 6), point_mass(3)) == 0.0

    def test_non_fixed_law(self):
        M = build_operator(COIN, 10)
        f1 = apply(M, point_mass(2))
        assert residual_fixed_point_equation(M, f1) > 0.1

    @settings(max_examples=30)
    @given(st.lists(st.floats(0, 1), min_size=2, max_size=6).filter(lambda w: sum(w) > 1e-3))
    def test_equals_sup_norm_of_step(self, weights):
        M = build_operator(pmf_new(0, [0.4, 0.35, 0.25]), 12)
        f = pmf_new(0, weights)
        expected = np.max(np.abs(apply(M, f).dense(13) - f.dense(13)))
        assert residual_fixed_point_equation(M, f) == pytest.approx(expected, abs=1e-14)

    def test_support_beyond_K(self):
        with pytest.raises(SupportExceedsK):
            residual_fixed_point_equation(build_operator(COIN, 4), point_mass(9))


class TestFixedPoint:
    def test_identity_operator(self):
        res = fixed_point(build_operator(point_mass(1), 6), point_mass(3))
        assert res.iterations == 1 and res.converged
        assert res.residual == 0.0
        assert res.f_star.pmf_at(3) == 1.0

    def test_subcritical_goes_extinct(self):
        res = fixed_point(build_operator(COIN, 50), point_mass(2), tol=1e-12)
        assert res.converged
        assert res.residual < 1e-10
        assert res.f_star.pmf_at(0) == pytest.approx(1.0, abs=1e-11)

    def test_subcritical_matches_long_evolution(self):
        f200 = evolve(ProcessSpec(2, COIN, 50), 200)[200]
        res = fixed_point(build_operator(COIN, 50), point_mass(2))
        assert f200.pmf_at(0) == pytest.approx(res.f_star.pmf_at(0), abs=1e-12)

    def test_supercritical_raw_mass_at_zero(self):
        res = fixed_point(build_operator(SUPER, 100), point_mass(1))
        q = extinction_probability({0: 0.25, 2: 0.75})
        assert q == pytest.approx(1 / 3, abs=1e-12)
        assert res.converged
        assert res.mass_at_zero_raw == pytest.approx(q, abs=1e-3)
        assert res.f_star.pmf_at(0) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize(
        "xi, K, f0",
        [(COIN, 50, point_mass(2)), (SUPER, 100, point_mass(1)), (pmf_new(0, [0.3, 0.4, 0.3]), 80, point_mass(1))],
    )
    def test_diagnostics(self, xi, K, f0):
        res = fixed_point(build_operator(xi, K), f0, tol=1e-12)
        assert res.residual >= 0
        assert res.iterations <= 10_000
        if res.converged:
            assert res.residual < 10 * 1e-12
        raw = res.raw_step_changes[10:]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(raw, raw[1:]))
        assert 0 < res.spectral_estimate <= 1 + 1e-12

    def test_iteration_limit_is_flagged(self):
        res = fixed_point(build_operator(pmf_new(0, [0.3, 0.4, 0.3]), 80), point_mass(1), max_iter=3)
        assert not res.converged and res.iterations == 3
        assert len(res.step_changes) == 3

    def test_tolerance_must_be_positive(self):
        with pytest.raises(ValueError):
            fixed_point(build_operator(COIN, 4), point_mass(1), tol=0)
