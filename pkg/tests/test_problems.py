import numpy as np
import pytest

from rbrdo import (AsoslParams, Candidate, RandomVariableSpec, RngStream,
                   UsageError, asosl_mpp, evaluate_rbrdo)
from rbrdo.problems import (benchmark, catalyst, get_deterministic, get_rbrdo,
                            heat_exchanger, list_problems, reactor)

from oracles import catalyst_reference_state


class TestRegistry:
    def test_names(self):
        assert list_problems() == ["benchmark", "catalyst", "heat-exchanger",
                                   "reactor"]

    def test_unknown(self):
        with pytest.raises(UsageError):
            get_deterministic("nope")

    def test_factories(self):
        for name in list_problems():
            assert get_deterministic(name).name.startswith(name)
            assert get_rbrdo(name).name == name


class TestBenchmark:
    D_DET = np.array([3.113885, 2.062648])

    def test_objective_at_published_optimum(self):
        det = benchmark.deterministic()
        assert abs(det.objective(self.D_DET) - 5.176532) < 1e-5

    def test_first_two_constraints_active(self):
        m = benchmark.margins(self.D_DET)
        assert abs(m[0]) < 1e-3 and abs(m[1]) < 1e-3
        assert m[2] > 1.0  # third constraint inactive

    def test_published_optimum_feasible(self):
        det = benchmark.deterministic()
        assert det.violation(self.D_DET) < 1e-3

    def test_margins_vectorized(self):
        pts = np.array([self.D_DET, [4.0, 4.0]])
        m = benchmark.margins(pts)
        assert m.shape == (2, 3)
        assert np.allclose(m[0], benchmark.margins(self.D_DET))

    def test_alternate_variant_differs(self):
        std = benchmark.rbrdo("standard")
        alt = benchmark.rbrdo("alternate")
        x = np.array([4.0, 4.0])
        g_std = std.constraints[1].g(x, x)
        g_alt = alt.constraints[1].g(x, x)
        assert not np.isclose(g_std, g_alt)
        with pytest.raises(UsageError):
            benchmark.rbrdo("bogus")


class TestHeatExchanger:
    def _reduced_optimum(self):
        # chain the three active margins from the published areas
        a1, a2, a3 = 579.31, 1359.97, 5109.97
        t1 = (300.0 * a1 + 250000.0 / 3.0) / (a1 + 2500.0 / 3.0)
        t2 = (400.0 * a2 + 1250.0 * t1) / (a2 + 1250.0)
        return np.array([a1, a2, a3, t1, t2])

    def test_margins_active_at_optimum(self):
        d = self._reduced_optimum()
        m = heat_exchanger.margins(d, heat_exchanger.MU)
        scale = np.array([1e5, 1e5, 1e6])  # typical term magnitudes
        assert np.all(np.abs(m) / scale < 1e-4)

    def test_total_area(self):
        det = heat_exchanger.deterministic()
        assert abs(det.objective(self._reduced_optimum()) - 7049.25) < 0.01

    def test_full_form_consistent_at_optimum(self):
        d = self._reduced_optimum()
        t12 = 400.0 - d[3]
        t22 = 400.0 + d[3] - d[4]
        t32 = 100.0 + d[4]
        z = np.concatenate([d, [t12, t22, t32]])
        full = heat_exchanger.full_deterministic()
        assert abs(full.objective(z) - 7049.25) < 0.01
        assert full.violation(z) < 10.0  # published rounding, scale ~1e5

    def test_random_vars_table(self):
        assert np.allclose(heat_exchanger.SIGMA / heat_exchanger.MU, 0.05)
        expected_sigma = [125.0 / 3.0, 15.0, 12500.0 / 3.0, 20.0, 62.5,
                          62500.0, 125.0, 5.0]
        assert np.allclose(heat_exchanger.SIGMA, expected_sigma)

    def test_reliability_active_at_max_beta_row(self):
        # the published max-reliability compromise sits where the margins
        # just stay positive on the beta=3 sphere
        prob = heat_exchanger.rbrdo()
        d = np.array([551.11, 1279.83, 8822.10, 153.48, 246.37])
        sol = evaluate_rbrdo(Candidate(d, 3.0), prob, RngStream(0))
        assert sol.feasible
        assert abs(sol.objectives[0] - 10653.04) < 0.01


class TestReactor:
    def test_global_optimum_value(self):
        f = reactor.concentration(np.array([0.771, 0.517]), reactor.MU)
        assert abs(f - 0.389) < 1e-3

    def test_local_optima(self):
        f1 = reactor.concentration(np.array([0.390, 0.390]), reactor.MU)
        f2 = reactor.concentration(np.array([1.0, 0.393]), reactor.MU)
        assert abs(f1 - 0.375) < 1e-3
        assert abs(f2 - 0.388) < 1e-3

    def test_residence_times_at_optimum(self):
        v1, v2 = reactor.residence_times(np.array([0.771, 0.517]))
        assert abs(v1 - 3.037) < 0.01
        assert abs(v2 - 5.096) < 0.01

    def test_budget_active_at_optimum(self):
        m = reactor.time_budget_margin(np.array([0.771, 0.517]), reactor.MU)
        assert abs(m) < 1e-2

    def test_reduced_matches_equality_elimination(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            d1 = rng.uniform(0.05, 1.0)
            d2 = rng.uniform(0.05, d1)
            d = np.array([d1, d2])
            assert np.isclose(reactor.concentration(d, reactor.MU),
                              reactor.full_form_objective(d),
                              rtol=1e-12, atol=1e-14)

    def test_rate_constant_scale_invariance(self):
        rng = np.random.default_rng(1)
        d = np.array([0.7, 0.4])
        base = reactor.concentration(d, reactor.MU)
        for _ in range(20):
            c = rng.uniform(0.1, 10.0)
            assert np.isclose(reactor.concentration(d, c * reactor.MU), base,
                              rtol=1e-12)

    def test_domain_guard(self):
        assert reactor.domain_guard(np.array([0.4, 0.6])) == pytest.approx(2e5)
        assert reactor.domain_guard(np.array([0.6, 0.4])) == 0.0
        det = reactor.deterministic()
        assert det.violation(np.array([0.4, 0.6])) > 1e5
        assert det.objective(np.array([0.4, 0.6])) == 0.0

    def test_sigma_table(self):
        assert np.allclose(reactor.SIGMA / reactor.MU, 0.15)


class TestCatalystSimulator:
    def test_zero_control_freezes_state(self):
        ctl = catalyst.CatalystControl(np.zeros(3), 0.2, 0.8)
        y = catalyst.catalyst_simulate(ctl)
        assert np.allclose(y, [1.0, 0.0], atol=1e-14)
        assert catalyst.conversion(ctl) == pytest.approx(0.0, abs=1e-14)

    def test_published_optimum_value(self):
        ctl = catalyst.CatalystControl(np.array([1.0, 0.2248, 0.0]),
                                       0.1338, 0.7237)
        assert abs(catalyst.conversion(ctl) - 0.048065) < 5e-5

    def test_rk4_matches_closed_form(self):
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(25):
            v = rng.uniform(0.0, 1.0, size=3)
            t1 = rng.uniform(0.0, 0.5)
            t2 = rng.uniform(0.5, 1.0)
            ctl = catalyst.CatalystControl(v, t1, t2)
            y_rk4 = catalyst.catalyst_simulate(ctl, method="rk4")
            y_cf = catalyst.catalyst_simulate(ctl, method="closed_form")
            worst = max(worst, np.abs(y_rk4 - y_cf).max())
        assert worst <= 1e-8

    def test_closed_form_matches_independent_eig(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            v = rng.uniform(0.01, 1.0, size=3)
            t1, t2 = rng.uniform(0.1, 0.5), rng.uniform(0.55, 0.95)
            ctl = catalyst.CatalystControl(v, t1, t2)
            y = catalyst.catalyst_simulate(ctl, method="closed_form")
            ref = catalyst_reference_state(v, t1, t2)
            assert np.allclose(y, ref, atol=1e-12)

    def test_grid_refinement_invariance(self):
        ctl = catalyst.CatalystControl(np.array([0.9, 0.3, 0.05]), 0.15, 0.7)
        base = catalyst.conversion(ctl, h=1e-3)
        finer = catalyst.conversion(ctl, h=2.5e-4)
        assert abs(base - finer) <= 1e-8

    def test_batched_values(self):
        ctl = catalyst.CatalystControl(np.array([0.5, 0.5, 0.5]), 0.2, 0.8)
        vals = np.array([[0.5, 0.5, 0.5], [1.0, 0.2, 0.0]])
        y = catalyst.catalyst_simulate(ctl, values=vals)
        assert y.shape == (2, 2)
        single = catalyst.catalyst_simulate(
            catalyst.CatalystControl(vals[1], 0.2, 0.8))
        assert np.allclose(y[1], single)

    def test_control_validation(self):
        with pytest.raises(UsageError):
            catalyst.CatalystControl(np.zeros(3), 0.6, 0.8)
        with pytest.raises(UsageError):
            catalyst.CatalystControl(np.zeros(3), 0.2, 0.4)
        with pytest.raises(UsageError):
            catalyst.catalyst_simulate(
                catalyst.CatalystControl(np.zeros(3), 0.2, 0.8),
                method="euler")


class TestCatalystReliability:
    def test_linear_margin_closed_form(self):
        # margin x_i on the beta sphere: min = mu_i (1 - 0.1 beta)
        prob = catalyst.rbrdo()
        d = np.array([0.5, 0.3, 0.2, 0.15, 0.7])
        mu, sigma = prob.random_vars(d)
        rvs = [RandomVariableSpec(m, s) for m, s in zip(mu, sigma)]
        for i, pf in enumerate(prob.constraints):
            res = asosl_mpp(pf, rvs, d, AsoslParams(beta_t=2.0))
            assert res.converged
            assert abs(res.g_star - d[i] * 0.8) < 1e-6

    def test_published_compromise_points(self):
        prob = catalyst.rbrdo()
        rows = [
            (np.array([0.9984, 0.2695, 0.0004, 0.1669, 0.7341]), 0.0476),
            (np.array([0.9982, 0.2601, 0.0002, 0.1728, 0.7242]), 0.0474),
        ]
        for d, f_expected in rows:
            sol = evaluate_rbrdo(Candidate(d, 1.6), prob, RngStream(0))
            assert sol.feasible
            assert abs(sol.objectives[0] - f_expected) < 5e-4
