import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stockrationing import (
    InconsistentTermination,
    IndexOutOfRange,
    Policy,
    SystemParams,
    average_profit,
    realization_factor_closed_form,
    realization_factors_from_potential,
    realization_factors_recurrence,
    solve_poisson,
    solve_poisson_normalized,
    stationary_distribution,
    thomas_solve,
)
from stockrationing.poisson import _reduced_system

from conftest import dense_potential, random_params, random_policy


def stable_random_params(rng, **kw):
    """Instances where the forward recurrence is a contraction (lam >= mu1+mu2)."""
    while True:
        p = random_params(rng, **kw)
        if p.lam >= p.mu1 + p.mu2:
            return p


class TestThomasSolve:
    def test_against_dense_solve(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            p = random_params(rng, k_max=8, n_max=30)
            pol = random_policy(rng, p.threshold)
            sub, diag, sup = _reduced_system(p, pol)
            n = len(diag)
            dense = np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)
            rhs = rng.normal(size=n)
            np.testing.assert_allclose(
                thomas_solve(sub, diag, sup, rhs), np.linalg.solve(dense, rhs),
                rtol=1e-8, atol=1e-10,
            )

    def test_pivoting_fallback_on_degenerate_elimination(self):
        # strong upward drift: the plain elimination pivots collapse to zero
        from stockrationing import SystemParams

        p = SystemParams(lam=7.26, mu1=0.23, mu2=0.5, capacity=25, threshold=12,
                         c_hold=3, c_lost1=4, c_lost2=1, c_buy=3, c_opp=4, price=2,
                         penalty=1)
        pol = Policy((1, 0, 1, 0, 1, 0, 0, 0, 0, 1, 0, 0))
        sub, diag, sup = _reduced_system(p, pol)
        rhs = np.ones(len(diag))
        x = thomas_solve(sub, diag, sup, rhs)
        dense = np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)
        resid = dense @ x - rhs
        assert np.max(np.abs(resid)) < 1e-7 * max(1.0, np.max(np.abs(x)))


class TestSolvePoisson:
    @given(
        im=st.floats(-20, 20, allow_nan=False),
        xi=st.floats(-20, 20, allow_nan=False),
        bits=st.lists(st.integers(0, 1), min_size=4, max_size=4),
    )
    @settings(max_examples=40, deadline=None)
    def test_free_constants_never_move_realization_factors(self, im, xi, bits):
        p = SystemParams(lam=2.0, mu1=1.5, mu2=1.0, capacity=8, threshold=4,
                         c_hold=1, c_lost1=3, c_lost2=1, c_buy=2, c_opp=1,
                         price=5, penalty=2)
        pol = Policy(tuple(bits))
        base = realization_factors_from_potential(solve_poisson(p, pol))
        moved = realization_factors_from_potential(solve_poisson(p, pol, im=im, xi_shift=xi))
        np.testing.assert_allclose(moved.g_diff, base.g_diff, atol=1e-9)

    def test_special_solution_starts_at_zero(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            p = random_params(rng)
            sol = solve_poisson(p, random_policy(rng, p.threshold))
            assert sol.g[0] == 0.0

    def test_unit_instance_differences(self, unit_params):
        sol = solve_poisson(unit_params, Policy((0,)))
        assert sol.g[0] - sol.g[1] == pytest.approx(-14.6, abs=1e-12)
        assert sol.g[1] - sol.g[2] == pytest.approx(-11.2, abs=1e-12)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(15):
            p = random_params(rng, k_max=8, n_max=30)
            pol = random_policy(rng, p.threshold)
            sol = solve_poisson(p, pol)
            oracle = dense_potential(p, pol)
            scale = max(1.0, np.max(np.abs(oracle)))
            np.testing.assert_allclose(sol.g, oracle, atol=1e-8 * scale)

    def test_uniform_shift_constant(self):
        rng = np.random.default_rng(13)
        p = random_params(rng)
        pol = random_policy(rng, p.threshold)
        base = solve_poisson(p, pol)
        shifted = solve_poisson(p, pol, xi_shift=2.5)
        np.testing.assert_allclose(shifted.g - base.g, 2.5, atol=1e-12)

    def test_g0_direction_is_uniform(self):
        # the g(0)-direction vector of the general solution is the ones vector
        rng = np.random.default_rng(14)
        p = random_params(rng)
        pol = random_policy(rng, p.threshold)
        base = solve_poisson(p, pol)
        moved = solve_poisson(p, pol, im=-3.0)
        np.testing.assert_allclose(moved.g - base.g, -3.0, atol=1e-12)

    def test_residual_small_at_n200(self):
        rng = np.random.default_rng(15)
        for _ in range(40):
            p = random_params(rng, k_max=200, n_max=200)
            pol = random_policy(rng, p.threshold)
            sol = solve_poisson(p, pol)
            g_scale = np.max(np.abs(sol.g[:-1] - sol.g[1:])) + 1.0
            rate = p.lam + p.mu1 + p.mu2
            assert sol.residual <= max(1e-9, 50 * np.finfo(float).eps * g_scale * rate)


class TestSolvePoissonNormalized:
    def test_stationary_mean_equals_eta(self):
        rng = np.random.default_rng(16)
        for _ in range(10):
            p = random_params(rng, k_max=8, n_max=30)
            pol = random_policy(rng, p.threshold)
            sol = solve_poisson_normalized(p, pol)
            pi = stationary_distribution(p, pol).pi
            assert float(pi @ sol.g) == pytest.approx(sol.eta, abs=1e-9 * max(1, abs(sol.eta)))

    def test_same_realization_factors_as_special_route(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            p = random_params(rng, k_max=8, n_max=30)
            pol = random_policy(rng, p.threshold)
            g1 = realization_factors_from_potential(solve_poisson(p, pol)).g_diff
            g2 = realization_factors_from_potential(solve_poisson_normalized(p, pol)).g_diff
            scale = max(1.0, np.max(np.abs(g1)))
            np.testing.assert_allclose(g1, g2, atol=1e-9 * scale)

    def test_differs_from_special_by_constant_shift(self):
        rng = np.random.default_rng(18)
        p = random_params(rng, k_max=6, n_max=20)
        pol = random_policy(rng, p.threshold)
        diff = solve_poisson_normalized(p, pol).g - solve_poisson(p, pol).g
        assert np.max(diff) - np.min(diff) < 1e-9 * max(1.0, np.max(np.abs(diff)))


class TestRealizationFactors:
    def test_from_potential_shape_and_shift_invariance(self, unit_params):
        sol0 = solve_poisson(unit_params, Policy((0,)))
        sol1 = solve_poisson(unit_params, Policy((0,)), im=4.0, xi_shift=-2.0)
        f0 = realization_factors_from_potential(sol0)
        f1 = realization_factors_from_potential(sol1)
        assert len(f0.g_diff) == unit_params.capacity
        np.testing.assert_allclose(f0.g_diff, f1.g_diff, atol=1e-12)

    def test_unit_instance_values(self, unit_params):
        fac = realization_factors_from_potential(solve_poisson(unit_params, Policy((0,))))
        np.testing.assert_allclose(fac.g_diff, [-14.6, -11.2], atol=1e-12)

    def test_recurrence_hand_values(self, unit_params):
        fac = realization_factors_recurrence(unit_params, Policy((0,)))
        np.testing.assert_allclose(fac.g_diff, [-14.6, -11.2], atol=1e-12)

    def test_recurrence_rejects_wrong_eta(self, unit_params):
        with pytest.raises(InconsistentTermination):
            realization_factors_recurrence(unit_params, Policy((0,)), eta=7.0)

    def test_terminal_identity(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            p = stable_random_params(rng, k_max=6, n_max=15)
            pol = random_policy(rng, p.threshold)
            fac = realization_factors_recurrence(p, pol)
            eta = average_profit(p, pol)
            from stockrationing import reward_structure, service_rates

            f = reward_structure(p, pol).f_values
            v = service_rates(p, pol)
            assert v[-1] * fac.g_diff[-1] == pytest.approx(
                eta - f[-1], abs=1e-8 * max(1, abs(eta))
            )

    def test_closed_form_first_state(self, unit_params):
        eta = average_profit(unit_params, Policy((0,)))
        g1 = realization_factor_closed_form(unit_params, Policy((0,)), eta, 1)
        assert g1 == pytest.approx((-10.0 - eta) / 1.0, abs=1e-12)

    def test_closed_form_index_bounds(self, unit_params):
        eta = average_profit(unit_params, Policy((0,)))
        for i in (0, 3):
            with pytest.raises(IndexOutOfRange):
                realization_factor_closed_form(unit_params, Policy((0,)), eta, i)

    def test_triple_agreement_contraction_lane(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            p = stable_random_params(rng, k_max=12, n_max=50)
            pol = random_policy(rng, p.threshold)
            eta = average_profit(p, pol)
            g1 = realization_factors_from_potential(solve_poisson(p, pol)).g_diff
            g2 = realization_factors_recurrence(p, pol, eta).g_diff
            g3 = np.array([
                realization_factor_closed_form(p, pol, eta, i)
                for i in range(1, p.capacity + 1)
            ])
            np.testing.assert_allclose(g1, g2, atol=1e-9)
            np.testing.assert_allclose(g2, g3, atol=1e-9)
            np.testing.assert_allclose(g1, g3, atol=1e-9)

    def test_triple_agreement_bounded_amplification_lane(self):
        # expanding drift allowed but with the error amplification
        # (max rate ratio)^N kept under the tolerance budget
        rng = np.random.default_rng(21)
        done = 0
        while done < 20:
            p = random_params(rng, k_max=8, n_max=30)
            amp = ((p.mu1 + p.mu2) / p.lam) ** p.capacity
            if amp > 1e3:
                continue
            done += 1
            pol = random_policy(rng, p.threshold)
            eta = average_profit(p, pol)
            g1 = realization_factors_from_potential(solve_poisson(p, pol)).g_diff
            g2 = realization_factors_recurrence(p, pol, eta).g_diff
            g3 = np.array([
                realization_factor_closed_form(p, pol, eta, i)
                for i in range(1, p.capacity + 1)
            ])
            np.testing.assert_allclose(g1, g2, atol=1e-9)
            np.testing.assert_allclose(g2, g3, atol=1e-9)
