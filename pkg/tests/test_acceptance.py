"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
numbers before asserting, so ``pytest -v`` output doubles as the
acceptance report.  Run ``python3 tests/test_acceptance.py`` for the
report alone.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import chisquare

from csmalab.analysis import (
    arborescence_stationary,
    build_generator,
    capacity_membership,
    capacity_oracle,
    maximize_F,
    product_form_deviation,
    ray_boundary,
    reversibility_check,
    service_rate,
    stationary_exact,
)
from csmalab.analysis.gibbs import ChannelAverage
from csmalab.channel import ChannelModel, ChannelStateSpace, varying_speed
from csmalab.experiments import (
    c4_reference_channel,
    run_figure_complete_graph,
    run_figure_random_topology,
    run_theorem6_sweep,
)
from csmalab.graph import (
    complete_graph,
    cycle_graph,
    empty_graph,
    enumerate_independent_sets,
    path_graph,
    petersen_graph,
    star_graph,
)
from csmalab.policy import DynamicPolicySpec, make_exp_policy, make_table_policy, make_ucsma_policy
from csmalab.sim import SimConfig, rate_stability_stats, simulate

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        return ok
    return emit


# -- 1 ------------------------------------------------------------------------

def sparse_rates(rng, m):
    # random rate matrix: a directed ring keeps it irreducible, other pairs appear with probability 1/3
    R = rng.exponential(size=(m, m)) * (rng.random((m, m)) < 1 / 3)
    R[np.arange(m), (np.arange(m) + 1) % m] += rng.exponential(size=m)
    np.fill_diagonal(R, 0.0)
    return R


def small_instances(count, seed=0):
    """Random (graph, channel, policy) triples whose joint chain has at most 12 states.

    Single-link channels are sparse: explicit tree enumeration on a dense
    12-state chain visits ~1e8 arborescences.
    """
    rng = np.random.default_rng(seed)
    shapes = [("single", 1), ("k2", 2), ("k3-static", 3), ("path3-static", 3),
              ("empty3-static", 3), ("empty2-static", 2), ("single-joint", 1)]
    out = []
    for t in range(count):
        name, n = shapes[t % len(shapes)]
        if name == "single":
            m = int(rng.integers(2, 7))
            levels = np.sort(rng.uniform(0.05, 0.95, m - 1)).tolist() + [1.0]
            ch = ChannelModel.iid(levels, 1, sparse_rates(rng, m))
            g = complete_graph(1)
        elif name == "single-joint":
            m = int(rng.integers(2, 7))
            levels = np.sort(rng.uniform(0.05, 0.95, m - 1)).tolist() + [1.0]
            ch = ChannelModel(ChannelStateSpace(levels, 1), joint_rates=sparse_rates(rng, m))
            g = complete_graph(1)
        elif name == "k2":
            ch = ChannelModel.two_level(2, rng.uniform(0.1, 0.9), rng.uniform(0.1, 3), rng.uniform(0.1, 3))
            g = complete_graph(2)
        else:
            ch = ChannelModel.static(n)
            g = {"k3-static": complete_graph, "path3-static": path_graph,
                 "empty3-static": empty_graph, "empty2-static": empty_graph}[name](n)
        if t % 2:
            pol = make_exp_policy(rng.uniform(-3, 3, n), rng.uniform(0.1, 10), ch.space)
        else:
            shape = (n, ch.space.m)
            pol = make_table_policy(rng.uniform(0.05, 5, shape), rng.uniform(0.05, 5, shape), ch.space)
        out.append((g, ch, pol))
    return out


def test_c1_oracle_equivalence(report):
    insts = small_instances(28)
    t0 = time.perf_counter()
    worst, sizes = 0.0, []
    for g, ch, pol in insts:
        q = build_generator(g, ch, pol)
        sizes.append(q.n_states)
        a, b = stationary_exact(q), arborescence_stationary(q)
        worst = max(worst, float(np.max(np.abs(a.vector - b.vector))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 10 and max(sizes) <= 12 and len(insts) >= 20
    report("C1 oracle equivalence", ok,
           f"{len(insts)} instances, states {min(sizes)}..{max(sizes)}, max |diff| {worst:.2e}, {elapsed:.2f} s")
    assert ok


# -- 2 ------------------------------------------------------------------------

def test_c2_product_form(report):
    rng = np.random.default_rng(2)
    graphs = [complete_graph(5), cycle_graph(5), path_graph(6), petersen_graph(), star_graph(6),
              empty_graph(7), cycle_graph(8)]
    worst, largest = 0.0, 0
    for g in graphs:
        ch = ChannelModel.static(g.n)
        R, S = rng.uniform(0.1, 10, g.n), rng.uniform(0.1, 10, g.n)
        q = build_generator(g, ch, make_ucsma_policy(R, S, ch.space))
        assert q.n_states <= 192
        largest = max(largest, q.n_states)
        d = stationary_exact(q)
        logw = d.family.sets @ np.log(R / S)
        closed = np.exp(logw - logw.max())
        closed /= closed.sum()
        worst = max(worst, float(np.max(np.abs(d.vector - closed))))
    ok = worst <= 1e-10
    report("C2 product form", ok, f"{len(graphs)} static U-CSMA instances (up to {largest} states), "
                                  f"max |diff| {worst:.2e}")
    assert ok


# -- 3 ------------------------------------------------------------------------

def test_c3_non_reversibility(report):
    rng = np.random.default_rng(3)
    makers = [complete_graph, path_graph, empty_graph]
    min_exp, max_u = np.inf, 0.0
    for t in range(120):
        n = int(rng.integers(1, 4))
        g = makers[t % 3](n)
        ch = ChannelModel.two_level(n, rng.uniform(0.1, 0.9), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0))
        r = rng.uniform(-3, 3, n)
        i = int(rng.integers(n))
        r[i] = math.copysign(max(abs(r[i]), 0.1), r[i])
        q = build_generator(g, ch, make_exp_policy(r, rng.uniform(1, 10), ch.space))
        min_exp = min(min_exp, reversibility_check(q, stationary_exact(q))[1])
        qu = build_generator(g, ch, make_ucsma_policy(rng.uniform(0.1, 10, n), rng.uniform(0.1, 10, n), ch.space))
        max_u = max(max_u, reversibility_check(qu, stationary_exact(qu))[1])
    ok = min_exp >= 1e-3 and max_u <= 1e-10
    report("C3 non-reversibility", ok,
           f"EXP min violation {min_exp:.2e} (need >= 1e-3), U-CSMA max violation {max_u:.2e} (need <= 1e-10)")
    assert ok


# -- 4 ------------------------------------------------------------------------

def test_c4_product_form_direction(report):
    t0 = time.perf_counter()
    ch = ChannelModel.two_level(2)  # levels {0.5, 1}, unit switching rates
    psi = varying_speed(ch)
    r = np.ones(2)
    devs, mins = [], []
    for scale in (1, 10, 100, 1000):
        pol = make_exp_policy(r, float(scale), ch.space)
        devs.append(product_form_deviation(stationary_exact(build_generator(complete_graph(2), ch, pol)), r))
        mins.append(pol.min_rate())
    elapsed = time.perf_counter() - t0
    decreasing = all(b < a for a, b in zip(devs, devs[1:]))
    fast = [d for d, m in zip(devs, mins) if m >= 100 * psi]
    ok = decreasing and fast and max(fast) < 0.05 and elapsed < 5
    report("C4 product-form direction", ok,
           "deviation " + ", ".join(f"{d:.3g}" for d in devs)
           + f"; at min rate >= 100 psi: {max(fast) if fast else float('nan'):.3g}; {elapsed:.2f} s")
    assert ok


# -- 5 ------------------------------------------------------------------------

def test_c5_design_pipeline(report):
    rng = np.random.default_rng(5)
    instances = [(path_graph(3), ChannelModel.two_level(3, 0.5, 0.01)),
                 (complete_graph(3), ChannelModel.two_level(3, 0.5, 0.01))]
    worst_grad, worst_gap, worst_sim = 0.0, np.inf, np.inf
    t0 = time.perf_counter()
    for t in range(10):
        g, ch = instances[t % 2]
        fam = enumerate_independent_sets(g)
        oracle = capacity_oracle(g, ch)
        d = rng.dirichlet(np.ones(g.n))
        lam = d * ray_boundary(oracle, d) * rng.uniform(0.3, 0.9)
        assert capacity_membership(oracle, lam * 1.05).inside
        avg = ChannelAverage(ch, fam)
        r = maximize_F(lam * 1.05, None, fam, tol=1e-8, avg=avg)
        worst_grad = max(worst_grad, float(np.max(np.abs(avg.gradient(r, lam * 1.05)))))
        worst_gap = min(worst_gap, float(np.min(service_rate(r, ch, fam) - lam)))
        # every rate at least 100 psi so the chain sits in the product-form regime
        R = 100 * varying_speed(ch) * math.exp(max(float(r.max()), 0.0))
        tr = simulate(SimConfig(g, ch, make_exp_policy(r, R, ch.space), horizon=1e6, seed=t, n_samples=10))
        worst_sim = min(worst_sim, float(np.min(tr.final()["Dhat_over_t"] / lam)))
    elapsed = time.perf_counter() - t0
    ok = worst_grad <= 1e-8 and worst_gap >= -1e-6 and worst_sim >= 0.98
    report("C5 design pipeline", ok,
           f"10 targets, max |grad F| {worst_grad:.1e}, min service - lam {worst_gap:.3g}, "
           f"min simulated Dhat/T / lam {worst_sim:.4f} (need >= 0.98), {elapsed:.1f} s")
    assert ok


# -- 6 ------------------------------------------------------------------------

def _figure_checks(res, col):
    ratios = res.column("R_over_psi", policy="A-CSMA")
    a = res.column(col, policy="A-CSMA")
    u = res.column(col, policy="U-CSMA")
    have = ~np.isnan(a)
    u_ok = abs(u[have][-1] - 0.762) <= 0.03
    high = have & (ratios >= 100)
    a_ok = bool(np.all(a[high] >= 0.95))
    dom_ok = bool(np.all(a[have] >= u[have] - 0.02))
    pairs = ", ".join(f"{x:g}:{p:.3f}/{q:.3f}" for x, p, q in zip(ratios[have], a[have], u[have]))
    return u_ok, a_ok, dom_ok, pairs


def test_c6_complete_graph_figure(report):
    t0 = time.perf_counter()
    ex = run_figure_complete_graph(grid=(0.01, 0.1, 1.0, 10.0, 100.0, 300.0, 1000.0))
    t_exact = time.perf_counter() - t0
    t0 = time.perf_counter()
    sim = run_figure_complete_graph(grid=(100.0, 1000.0), exact=False, simulate_points=True)
    t_sim = time.perf_counter() - t0
    e = _figure_checks(ex, "fraction_exact")
    s = _figure_checks(sim, "fraction_sim")
    ok = all(e) and all(s) and t_exact < 60 and t_sim < 600
    report("C6 complete-graph figure", ok,
           f"exact R/psi:A/U [{e[3]}] U~0.762 {e[0]}, A>=0.95 at R/psi>=100 {e[1]}, A>=U-0.02 {e[2]} "
           f"({t_exact:.1f} s); simulated [{s[3]}] U~0.762 {s[0]}, A>=0.95 {s[1]}, A>=U-0.02 {s[2]} ({t_sim:.1f} s)")
    assert ok


# -- 7 ------------------------------------------------------------------------

def test_c7_limited_backoff(report):
    c4 = run_theorem6_sweep(cycle_graph(4), c4_reference_channel(), phi_over_psi=(0.01,))
    k5 = run_theorem6_sweep(complete_graph(5), ChannelModel.two_level(5), phi_over_psi=(0.01,))
    f4, f5 = c4.rows[0]["fraction"], k5.rows[0]["fraction"]
    ok = f4 >= 0.47 and f5 >= 0.72
    report("C7 limited backoff", ok,
           f"C4 fraction {f4:.4f} (alpha {c4.rows[0]['alpha']:.3f}, need >= 0.47), "
           f"K5 fraction {f5:.4f} (alpha {k5.rows[0]['alpha']:.3f}, need >= 0.72), phi = 0.01 psi")
    assert ok


# -- 8 ------------------------------------------------------------------------

def test_c8_rate_based_convergence(report):
    t0 = time.perf_counter()
    one = simulate(SimConfig(complete_graph(1), ChannelModel.static(1), DynamicPolicySpec("rate-based"),
                             arrival_rates=0.75, arrival_kind="fluid", horizon=1e5, seed=0))
    two = simulate(SimConfig(complete_graph(2), ChannelModel.static(2), DynamicPolicySpec("rate-based"),
                             arrival_rates=0.45, arrival_kind="fluid", horizon=1e5, seed=0))
    elapsed = time.perf_counter() - t0
    e1 = abs(one.frames.r[-1, 0] - math.log(3))
    e2 = float(np.max(np.abs(two.frames.r[-1] - math.log(4.5))))
    ok = e1 < 0.1 and e2 < 0.15 and elapsed < 300
    report("C8 rate-based convergence", ok,
           f"single link r(J)={one.frames.r[-1, 0]:.4f} after J={len(one.frames)} frames "
           f"(|err| {e1:.3f}, need < 0.1); K2 r(J)={np.round(two.frames.r[-1], 4).tolist()} "
           f"(|err| {e2:.3f}, need < 0.15); {elapsed:.1f} s")
    assert ok


# -- 9 ------------------------------------------------------------------------

def test_c9_queue_based_stability(report):
    g, ch = complete_graph(2), ChannelModel.two_level(2)
    b = ray_boundary(capacity_oracle(g, ch), np.ones(2))
    stats = {}
    # a stable queue still wanders by a few hundred units, so the final decile
    # must be long for its least-squares slope to resolve 1e-3
    for load, horizon in ((0.8, 1e7), (1.2, 1e6)):
        tr = simulate(SimConfig(g, ch, DynamicPolicySpec("queue-based"), arrival_rates=load * b,
                                horizon=horizon, seed=1))
        stats[load] = rate_stability_stats(tr)
    slope = float(np.max(stats[0.8].final_slope))
    growth = float(np.min(stats[1.2].Q_over_t))
    k2_ok = slope < 1e-3 and growth > 0.05

    res = run_figure_random_topology()
    crit = res.summary["critical_arrival"]
    order_ok = all(crit["x"] > crit[k] for k in ("x^5", "x^(1/5)", "1"))
    u_ok = 0.02 <= crit["1"] <= 0.06
    ok = k2_ok and order_ok and u_ok
    report("C9 queue-based stability", ok,
           f"K2 boundary {b:.4f}: slope at 0.8x {slope:.2e} (need < 1e-3), Q/T at 1.2x {growth:.3f} "
           f"(need > 0.05); random topology ({res.params['n_links']} links) critical arrivals {crit}, "
           f"x beats all {order_ok}, U-CSMA divergence in [0.02, 0.06] {u_ok}")
    assert ok


# -- 10 -----------------------------------------------------------------------

def _chi_square(g, ch, pol, seed, spacing=20.0):
    q = build_generator(g, ch, pol)
    d = stationary_exact(q)
    rate = pol.min_rate()
    tr = simulate(SimConfig(g, ch, pol, horizon=1e6 / rate, seed=seed, n_samples=1,
                            snapshot_interval=spacing / rate))
    s = np.searchsorted(d.family.codes, tr.snap_schedules)
    obs = np.bincount(s * q.n_channel + tr.snap_channels, minlength=q.n_states).astype(float)
    exp = d.vector * obs.sum()
    # pool the smallest cells until each pooled cell expects at least 5
    o_cells, e_cells, ao, ae = [], [], 0.0, 0.0
    for k in np.argsort(exp):
        ao, ae = ao + obs[k], ae + exp[k]
        if ae >= 5:
            o_cells.append(ao)
            e_cells.append(ae)
            ao = ae = 0.0
    o_cells[-1] += ao
    e_cells[-1] += ae
    return float(chisquare(o_cells, e_cells).pvalue), q.n_states


def test_c10_simulator_law(report):
    cases = []
    ch3 = ChannelModel.two_level(3)
    cases.append(("K3 EXP", complete_graph(3), ch3, make_exp_policy(np.ones(3), 2.0, ch3.space)))
    ch5 = ChannelModel.two_level(5)
    cases.append(("K5 EXP", complete_graph(5), ch5, make_exp_policy(np.full(5, 2.0), 1.0, ch5.space)))
    ch4 = ChannelModel.two_level(4, 0.3, 0.5, 1.0)
    cases.append(("C4 U-CSMA", cycle_graph(4), ch4, make_ucsma_policy(1.0, 0.5, ch4.space)))
    out = [(name,) + _chi_square(g, ch, pol, seed=0) for name, g, ch, pol in cases]
    ok = all(p > 0.01 for _, p, _ in out)
    report("C10 simulator law", ok, ", ".join(f"{n} ({k} states) p={p:.3f}" for n, p, k in out))
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
