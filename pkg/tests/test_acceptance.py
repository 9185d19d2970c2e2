"""Acceptance suite: one test per release criterion, with a PASS line each.

The heavy multi-objective sweeps are shared module-scoped fixtures; the
whole module runs in roughly 20-30 minutes on a desktop-class machine.
Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import time

import numpy as np
import pytest

from rbrdo import (AsoslParams, Candidate, DeParams, Dominance, ModeParams,
                   PerformanceFunction, RandomVariableSpec, RngStream,
                   RobustnessSpec, Sense, asosl_mpp, build_mo_problem,
                   build_rbdo_evaluator, de_minimize, dominates,
                   effective_mean, evaluate_rbrdo, fit_front, mode_optimize,
                   penalty_robust, second_order_step_bound, sweep_robustness)
from rbrdo.problems import benchmark, catalyst, heat_exchanger, reactor

from oracles import min_on_circle, quadratic_effective_mean


def ok(criterion, detail):
    print(f"PASS {criterion}: {detail}")


def matched_pair_fraction(lo, hi, window=0.05, minimize=True):
    """Cross pairs within a beta window; fraction where the noisier front
    is worse with respect to the first objective's sense."""
    total = worse = 0
    for ob in hi:
        for oa in lo:
            if abs(oa[1] - ob[1]) <= window:
                total += 1
                worse += (ob[0] > oa[0]) if minimize else (ob[0] < oa[0])
    assert total > 0, "no matched pairs in the beta window"
    return worse / total, total


@pytest.fixture(scope="module")
def benchmark_sweep():
    prob = benchmark.rbrdo()
    params = ModeParams(seed=2024, generations=500)
    t0 = time.perf_counter()
    archives, errors = sweep_robustness(prob, [0.0, 0.05, 0.1], params,
                                        samples=50)
    assert not errors
    return archives, (time.perf_counter() - t0) / 3.0


@pytest.fixture(scope="module")
def heat_sweep():
    prob = heat_exchanger.rbrdo()
    params = ModeParams(seed=77, generations=500)
    archives, errors = sweep_robustness(prob, [0.0, 0.05, 0.1], params,
                                        samples=50)
    assert not errors
    return archives


@pytest.fixture(scope="module")
def reactor_sweep():
    prob = reactor.rbrdo()
    params = ModeParams(seed=99, generations=500)
    archives, errors = sweep_robustness(prob, [0.0, 0.05, 0.1], params,
                                        samples=50)
    assert not errors
    return archives


@pytest.fixture(scope="module")
def catalyst_sweep():
    prob = catalyst.rbrdo()
    params = ModeParams(seed=12, generations=500)
    archives, errors = sweep_robustness(prob, [0.0, 0.2], params, samples=50)
    assert not errors
    return archives


def test_criterion_01_benchmark_deterministic():
    det = benchmark.deterministic()
    target_d = np.array([3.113885, 2.062648])
    hits = 0
    times = []
    for seed in range(10):
        t0 = time.perf_counter()
        best = de_minimize(det.evaluator(), det.bounds,
                           DeParams(seed=seed, generations=100),
                           sense=det.sense)
        times.append(time.perf_counter() - t0)
        if (abs(best.objectives[0] - 5.176532) <= 1e-3
                and np.all(np.abs(best.decision - target_d) <= 1e-2)):
            hits += 1
    assert hits >= 9
    assert max(times) <= 1.0
    ok("criterion-1", f"{hits}/10 seeds at f=5.176532±1e-3, "
                      f"max {max(times):.2f}s/seed")


def test_criterion_02_benchmark_rbdo():
    prob = benchmark.rbrdo()
    evaluator, bounds, sense = build_rbdo_evaluator(prob, 3.0)
    t0 = time.perf_counter()
    best = de_minimize(evaluator, bounds, DeParams(seed=3, generations=100),
                       sense=sense)
    elapsed = time.perf_counter() - t0
    assert elapsed <= 30.0
    assert abs(best.objectives[0] - 6.720532) <= 0.02
    assert np.all(np.abs(best.decision
                         - np.array([3.440563, 3.279963])) <= 0.05)
    rvs = [RandomVariableSpec(m, 0.3) for m in best.decision]
    g = [asosl_mpp(pf, rvs, best.decision, AsoslParams(beta_t=3.0)).g_star
         for pf in prob.constraints]
    assert abs(g[0]) <= 1e-2 and abs(g[1]) <= 1e-2
    assert abs(g[2] - 0.5118) <= 0.02
    ok("criterion-2", f"f={best.objectives[0]:.6f} d={best.decision.round(4)} "
                      f"g*=({g[0]:.4f},{g[1]:.4f},{g[2]:.4f}) {elapsed:.1f}s")


def test_criterion_03_asosl_oracle_equivalence():
    prob = benchmark.rbrdo()
    sigma = np.array([0.3, 0.3])
    rng = np.random.default_rng(31)
    worst = 0.0
    max_iters = 0
    for _ in range(100):
        d = rng.uniform(1.0, 10.0, size=2)
        beta = rng.uniform(1.0, 3.0)
        rvs = [RandomVariableSpec(m, 0.3) for m in d]
        for pf in prob.constraints:
            res = asosl_mpp(pf, rvs, d, AsoslParams(beta_t=beta))
            ref, _ = min_on_circle(lambda x, pf=pf: pf.g(d, x), d, sigma,
                                   beta, n_points=1_000_000)
            err = abs(res.g_star - ref)
            worst = max(worst, err)
            max_iters = max(max_iters, res.iterations)
            assert res.iterations <= 200
            assert err <= 1e-4
    ok("criterion-3", f"300 searches, worst |g*-oracle|={worst:.2e}, "
                      f"max iterations={max_iters}")


def test_criterion_04_linear_closed_form():
    rng = np.random.default_rng(41)
    worst_u = worst_g = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 9))
        a = rng.normal(size=n)
        while np.linalg.norm(a) < 1e-6:
            a = rng.normal(size=n)
        c = 3.0 * rng.normal()
        beta = rng.uniform(0.5, 5.0)
        pf = PerformanceFunction(
            g=lambda d, x, a=a, c=c: c + np.asarray(x) @ a,
            grad_x=lambda d, x, a=a: np.broadcast_to(a, np.shape(x)).copy())
        res = asosl_mpp(pf, [RandomVariableSpec(0.0, 1.0)] * n, np.zeros(1),
                        AsoslParams(beta_t=beta))
        u_expect = -beta * a / np.linalg.norm(a)
        g_expect = c - beta * np.linalg.norm(a)
        assert res.converged
        eu = np.linalg.norm(res.u_star - u_expect) / max(
            1.0, np.linalg.norm(u_expect))
        eg = abs(res.g_star - g_expect) / max(1.0, abs(g_expect))
        worst_u, worst_g = max(worst_u, eu), max(worst_g, eg)
        assert eu <= 1e-6 and eg <= 1e-6
    ok("criterion-4", f"200 linear searches up to 8-D, rel errors "
                      f"u*<={worst_u:.1e} g*<={worst_g:.1e}")


def test_criterion_05_benchmark_front_ordering(benchmark_sweep):
    archives, per_level = benchmark_sweep
    objs = {lv: a.objective_matrix() for lv, a in archives.items()}
    for lv, o in objs.items():
        assert len(o) >= 30, f"delta={lv} front too small ({len(o)})"
    frac1, n1 = matched_pair_fraction(objs[0.0], objs[0.05])
    frac2, n2 = matched_pair_fraction(objs[0.05], objs[0.1])
    assert frac1 >= 0.9 and frac2 >= 0.9
    assert per_level <= 600.0
    ok("criterion-5", f"members={[len(objs[lv]) for lv in (0.0, 0.05, 0.1)]}, "
                      f"noisier-is-worse fractions {frac1:.3f} ({n1} pairs), "
                      f"{frac2:.3f} ({n2} pairs), {per_level:.0f}s/level")


def test_criterion_06_heat_exchanger_deterministic():
    det = heat_exchanger.deterministic()
    best_val = np.inf
    for seed in range(10):
        best = de_minimize(det.evaluator(), det.bounds,
                           DeParams(seed=seed, generations=100),
                           sense=det.sense)
        if best.constraint_violation == 0.0:
            best_val = min(best_val, best.objectives[0])
    assert best_val <= 7120.0
    ok("criterion-6", f"best-of-10 A_T={best_val:.2f} <= 7120")


def test_criterion_07_heat_exchanger_fronts(heat_sweep):
    objs = {lv: a.objective_matrix() for lv, a in heat_sweep.items()}
    top = objs[0.0][objs[0.0][:, 1] >= 2.9]
    assert len(top) > 0
    a_t = top[:, 0].min()
    assert abs(a_t - 10653.04) / 10653.04 <= 0.10
    frac1, n1 = matched_pair_fraction(objs[0.0], objs[0.05])
    frac2, n2 = matched_pair_fraction(objs[0.05], objs[0.1])
    assert frac1 >= 0.9 and frac2 >= 0.9
    ok("criterion-7", f"delta=0 max-beta end A_T={a_t:.1f} (target 10653.04"
                      f"±10%), ordering fractions {frac1:.3f}/{frac2:.3f}")


def test_criterion_08_reactor_multistart():
    det = reactor.deterministic()
    rows = np.array([[0.390, 0.390], [1.0, 0.393], [0.771, 0.517]])
    row_f = np.array([0.375, 0.388, 0.389])
    basins = set()
    best_f = -np.inf
    for seed in range(20):
        best = de_minimize(det.evaluator(), det.bounds,
                           DeParams(seed=seed, generations=100),
                           sense=det.sense)
        f = best.objectives[0]
        best_f = max(best_f, f)
        b = int(np.argmin(np.linalg.norm(rows - best.decision, axis=1)))
        if abs(f - row_f[b]) <= 0.002:
            basins.add(b)
    assert abs(best_f - 0.389) <= 0.002
    assert len(basins) >= 2
    ok("criterion-8", f"best f={best_f:.5f}, basins found "
                      f"{sorted(rows[list(basins)].tolist())}")


def test_criterion_09_reactor_dispersion(reactor_sweep):
    """Quadratic-fit dispersion ordering across noise levels.

    KNOWN PARTIAL FAILURE, kept as stated rather than weakened: the exact
    zero-noise front follows the single-reactor branch, whose f(beta) drop
    accelerates super-quadratically toward beta = 5, leaving ~3e-3 RMS of
    quadratic model bias. That bias exceeds the entire dispersion of the
    flatter delta=0.05 front in every seed tried, so the first pair of the
    strict R^2/SQR orderings inverts structurally. The delta=0 bound and
    the 0.05 vs 0.1 ordering hold. See the run log line for the measured
    values.
    """
    # dispersion statistics compare equal-sized fronts (the published
    # residual dof implies ~50-point fits): each archive is thinned to 50
    # beta-stratified members before fitting
    reports = {}
    for lv, archive in reactor_sweep.items():
        o = archive.objective_matrix()
        order = np.argsort(o[:, 1], kind="stable")
        keep = order[np.unique(np.round(
            np.linspace(0, len(order) - 1, 50)).astype(int))]
        reports[lv] = fit_front(o[keep, 1], o[keep, 0])
    r2 = [reports[lv].r2 for lv in (0.0, 0.05, 0.1)]
    sqr = [reports[lv].sqr for lv in (0.0, 0.05, 0.1)]
    print(f"criterion-9 measurements: R2={[f'{v:.5f}' for v in r2]}, "
          f"SQR={[f'{v:.3e}' for v in sqr]}, "
          f"RMS={[f'{reports[lv].rms:.3e}' for lv in (0.0, 0.05, 0.1)]}")
    assert r2[0] >= 0.99
    assert r2[1] > r2[2] and sqr[1] < sqr[2]  # the noise-driven pair holds
    assert r2[0] > r2[1] > r2[2]
    assert sqr[0] < sqr[1] < sqr[2]
    ok("criterion-9", f"R2={[f'{v:.4f}' for v in r2]}, "
                      f"SQR={[f'{v:.2e}' for v in sqr]}")


def test_criterion_10_catalyst_deterministic():
    det = catalyst.deterministic()
    best = de_minimize(det.evaluator(), det.bounds,
                       DeParams(seed=0, generations=100), sense=det.sense)
    d = best.decision
    assert abs(best.objectives[0] - 0.048065) <= 5e-4
    assert 0.20 <= d[1] <= 0.25
    assert 0.12 <= d[3] <= 0.15
    assert 0.70 <= d[4] <= 0.75
    ok("criterion-10", f"f={best.objectives[0]:.6f} v1={d[1]:.4f} "
                       f"t=({d[3]:.4f},{d[4]:.4f})")


def test_criterion_11_catalyst_integrator():
    rng = np.random.default_rng(111)
    worst = 0.0
    for _ in range(40):
        v = rng.uniform(0.0, 1.0, size=3)
        ctl = catalyst.CatalystControl(v, rng.uniform(0.0, 0.5),
                                       rng.uniform(0.5, 1.0))
        y_rk4 = catalyst.catalyst_simulate(ctl, method="rk4", h=1e-3)
        y_ref = catalyst.catalyst_simulate(ctl, method="closed_form")
        worst = max(worst, float(np.abs(y_rk4 - y_ref).max()))
    assert worst <= 1e-8
    # observed convergence order across h in {4e-3, 2e-3, 1e-3}
    ctl = catalyst.CatalystControl(np.array([0.9, 0.3, 0.1]), 0.15, 0.7)
    ref = catalyst.catalyst_simulate(ctl, method="closed_form")
    errs = [np.abs(catalyst.catalyst_simulate(ctl, method="rk4", h=h)
                   - ref).max() for h in (4e-3, 2e-3, 1e-3)]
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 3.9
    ok("criterion-11", f"max |rk4-closed|={worst:.2e}, observed order "
                       f"{min(orders):.2f}")


def test_criterion_12_catalyst_insensitivity(catalyst_sweep):
    objs = {lv: a.objective_matrix() for lv, a in catalyst_sweep.items()}
    near0 = objs[0.0][np.abs(objs[0.0][:, 1] - 1.6) <= 0.1]
    near2 = objs[0.2][np.abs(objs[0.2][:, 1] - 1.6) <= 0.1]
    assert len(near0) and len(near2)
    f0, f2 = near0[:, 0].mean(), near2[:, 0].mean()
    assert abs(f0 - f2) <= 0.002
    # the published pair at this reliability level: 0.0476 vs 0.0474
    assert abs(f0 - 0.0476) <= 0.002
    assert abs(f2 - 0.0474) <= 0.002
    ok("criterion-12", f"f(beta~1.6): delta=0 -> {f0:.4f}, "
                       f"delta=0.2 -> {f2:.4f}, gap {abs(f0-f2):.2e}")


def test_criterion_13_property_suites():
    rng = np.random.default_rng(13)
    senses = (Sense.MINIMIZE, Sense.MINIMIZE)

    # dominance partial-order laws over 10^4 random triples
    from rbrdo import EvaluatedSolution
    def sol(o):
        return EvaluatedSolution(np.zeros(1), np.asarray(o, dtype=float))
    triples = rng.integers(0, 4, size=(10_000, 3, 2)).astype(float)
    for oa, ob, oc in triples:
        a, b, c = sol(oa), sol(ob), sol(oc)
        assert dominates(a, a, senses) is Dominance.NO_DOMINANCE
        ab = dominates(a, b, senses)
        if ab is Dominance.A_DOMINATES:
            assert dominates(b, a, senses) is Dominance.B_DOMINATES
            if dominates(b, c, senses) is Dominance.A_DOMINATES:
                assert dominates(a, c, senses) is Dominance.A_DOMINATES

    # archive insertion order independence
    from rbrdo import ParetoArchive
    pop = [sol(row) for row in rng.integers(0, 6, size=(40, 2))]
    reference = None
    for perm_seed in range(4):
        archive = ParetoArchive(senses)
        for idx in np.random.default_rng(perm_seed).permutation(len(pop)):
            archive.insert(pop[idx])
        got = sorted(tuple(m.objectives) for m in archive)
        reference = got if reference is None else reference
        assert got == reference

    # sphere invariant on ASOSL traces
    prob = benchmark.rbrdo()
    for seed in range(10):
        d = np.random.default_rng(seed).uniform(1.5, 8.0, size=2)
        rvs = [RandomVariableSpec(m, 0.3) for m in d]
        for pf in prob.constraints:
            res = asosl_mpp(pf, rvs, d, AsoslParams(beta_t=2.0))
            for _, u, *_ in res.trace:
                assert abs(np.linalg.norm(u) - 2.0) <= 1e-10 * 2.0

    # step-bound positivity sweep (both branches)
    for _ in range(2000):
        dvec = rng.normal(size=3) * rng.uniform(0.1, 10.0)
        tau = rng.uniform(0.01, 5.0)
        g_prev = 10.0 * rng.normal()
        g_curr = g_prev + rng.normal() * rng.uniform(0.1, 50.0)
        t_bar = second_order_step_bound(g_prev, g_curr, dvec, tau,
                                        delta_eta=rng.uniform(0.1, 2.0))
        assert t_bar > 0.0

    # effective-mean analytic oracles
    quad = effective_mean(
        lambda x: x[0] ** 2, np.array([2.0]),
        RobustnessSpec(strategy="effective_mean", delta=np.array([0.1]),
                       samples=10_000), RngStream(5))
    assert abs(quad[0] - quadratic_effective_mean(2.0, 0.1)) < 0.04
    lin = effective_mean(
        lambda x: 3.0 * x[0], np.array([2.0]),
        RobustnessSpec(strategy="effective_mean", delta=np.array([0.1]),
                       samples=10_000), RngStream(6))
    assert abs(lin[0] - 6.0) < 0.01

    # penalty nonnegativity (worsens the minimized objective)
    pen = penalty_robust(
        lambda x: x[0] ** 2 + 1.0, np.array([1.5]),
        RobustnessSpec(strategy="penalty", delta=np.array([0.2]),
                       samples=2000), RngStream(7), (Sense.MINIMIZE,))
    assert pen[0] >= 1.5 ** 2 + 1.0

    # seeded bitwise reproducibility of a full (small) uncertain run
    spec = RobustnessSpec(strategy="effective_mean", delta=np.full(2, 0.05),
                          samples=20)
    evaluator, bounds, mo_senses = build_mo_problem(prob, robustness=spec)
    params = ModeParams(seed=1313, NP=12, generations=8, R=2)
    a = mode_optimize(evaluator, bounds, mo_senses, params)
    b = mode_optimize(evaluator, bounds, mo_senses, params)
    assert np.array_equal(a.objective_matrix(), b.objective_matrix())
    assert np.array_equal(a.decision_matrix(), b.decision_matrix())

    ok("criterion-13", "dominance laws, archive order-independence, sphere "
                       "invariant, step-bound positivity, effective-mean "
                       "oracles, penalty sign, bitwise reproducibility")
