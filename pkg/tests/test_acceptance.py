"""The nine acceptance criteria, each at its stated tolerance and time budget.

Every test logs one PASS/FAIL line that is echoed in the pytest terminal summary.
"""
from __future__ import annotations

import os
import time

import numpy as np
import pytest

from entflow.protocols import engineered_chain, swap_protocol
from entflow.rate_eqs import (
    a_recursion, lower_bound_curves, saturated_curves, saturated_levels, scaling_experiment, upper_bound_curves,
)
from entflow.verify import run_campaign

SEED = 2026
JOBS = max(1, min(4, os.cpu_count() or 1))


def _record(log, n, ok, detail, elapsed, budget):
    ok = ok and elapsed < budget
    log(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.1f}s / {budget:.0f}s budget)")
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def test_criterion_1_f1_analytic(acceptance_log):
    t0 = time.perf_counter()
    sat = saturated_curves(2)
    t = np.linspace(0, np.pi / 4, 2001)
    err = float(np.max(np.abs(sat.at(t)[0] - np.sin(t + np.pi / 4) ** 2)))
    dt = time.perf_counter() - t0
    assert _record(acceptance_log, 1, err <= 1e-6, f"sup error {err:.2e} <= 1e-6", dt, 1)


def test_criterion_2_recursion_asymptote(acceptance_log):
    t0 = time.perf_counter()
    a = a_recursion(1.0, 1000)
    dev = abs((a[999] - a[998]) - 1)
    dt = time.perf_counter() - t0
    assert _record(acceptance_log, 2, dev < 1e-3, f"|a_1000 - a_999 - 1| = {dev:.4e} < 1e-3", dt, 1)


def test_criterion_3_scaling_sandwich(acceptance_log):
    t0 = time.perf_counter()
    rows = scaling_experiment(range(10, 101, 10))
    slack = min(min(r.T_numeric - r.T_lower, r.T_upper - r.T_numeric) for r in rows)
    last = rows[-1]
    exact = last.T_lower == pytest.approx(5.0, abs=1e-12) and last.T_upper == pytest.approx(np.sqrt(50), abs=1e-12)
    dt = time.perf_counter() - t0
    ok = slack >= -1e-3 and exact
    assert _record(acceptance_log, 3, ok, f"min slack {slack:.3e}, L=100 T={last.T_numeric:.5f} in [5, {np.sqrt(50):.5f}]",
                   dt, 120)


def test_criterion_4_curve_ordering_and_sandwich(acceptance_log):
    t0 = time.perf_counter()
    K = 50
    sat = saturated_curves(100)
    _, up = upper_bound_curves(K, 1e-6, grid=sat.t)
    low = lower_bound_curves(K, grid=sat.t)
    order = float(np.min(sat.curves[:-1] - sat.curves[1:]))
    lo = float(np.min(sat.curve(K) - low.curve(K)))
    hi = float(np.min(up.curve(K) - sat.curve(K)))
    dt = time.perf_counter() - t0
    ok = min(order, lo, hi) >= -1e-6
    assert _record(acceptance_log, 4, ok, f"ordering slack {order:.2e}, l_50 slack {lo:.2e}, u_50 slack {hi:.2e}",
                   dt, 120)


def test_criterion_5_lemma_campaigns(acceptance_log):
    t0 = time.perf_counter()
    lem = run_campaign("lemma1", 10_000, SEED, JOBS)
    fh = run_campaign("fan_hoffman", 10_000, SEED, JOBS)
    dt = time.perf_counter() - t0
    ok = lem.passed and fh.passed and min(lem.worst_slack, fh.worst_slack) >= -1e-10
    detail = (f"lemma1 {len(lem.failures)} failures (worst slack {lem.worst_slack:.2e}), "
              f"fan_hoffman {len(fh.failures)} failures (worst {fh.worst_slack:.2e})")
    assert _record(acceptance_log, 5, ok, detail, dt, 60)


def test_criterion_6_three_qubit_campaign(acceptance_log):
    t0 = time.perf_counter()
    rep = run_campaign("three_qubit", 1000, SEED, JOBS)
    dt = time.perf_counter() - t0
    exact = [r for r in rep.reports if not r.diagnostics["guard"]]
    agree = all(r.diagnostics["fd_agree"] for r in exact)
    bound = min(r.slack for r in rep.reports)
    ok = agree and bound >= -1e-8 and rep.passed
    detail = (f"{len(exact)} exact/FD comparisons agree={agree}, {1000 - len(exact)} guard points, "
              f"worst bound slack {bound:.2e}")
    assert _record(acceptance_log, 6, ok, detail, dt, 300)


def test_criterion_7_tripartite_and_network(acceptance_log):
    t0 = time.perf_counter()
    tri = run_campaign("tripartite", 300, SEED, JOBS)
    net = run_campaign("rate_eq", 200, SEED, JOBS)
    dt = time.perf_counter() - t0
    audited = sum("audit" in r.diagnostics for r in net.reports)
    ok = tri.passed and net.passed
    detail = (f"tripartite {len(tri.failures)}/300 failures (worst {tri.worst_slack:.2e}); "
              f"rate_eq {len(net.failures)}/{len(net.reports)} failures (worst {net.worst_slack:.2e}, {audited} audited)")
    assert _record(acceptance_log, 7, ok, detail, dt, 1800)


def test_criterion_8_optimizer_oracle(acceptance_log):
    t0 = time.perf_counter()
    rep = run_campaign("oracle", 500, SEED, JOBS)
    dt = time.perf_counter() - t0
    worst = max(r.lhs for r in rep.reports)
    assert _record(acceptance_log, 8, rep.passed, f"max |F_opt - F_closed| = {worst:.2e} <= 1e-6", dt, 120)


def test_criterion_9_protocol_envelopes(acceptance_log):
    t0 = time.perf_counter()
    swap = swap_protocol(8, seed=SEED)
    eng = engineered_chain(9, seed=SEED)
    dt = time.perf_counter() - t0
    parts = []
    ok = True
    for run in (swap, eng):
        env = run.envelope_check(2e-3)
        good = env.passed and run.end_fraction >= 0.99 and run.T_ent >= run.bound_lower
        ok &= good
        parts.append(f"{run.protocol} L={run.L}: envelope slack {env.slack:.1e}, F_end {run.end_fraction:.4f}, "
                     f"T {run.T_ent:.3f} >= {run.bound_lower:.3f}")
    times = [eng.time_to(k, 0.9) for k in range(1, eng.K + 1)]
    order = eng.K == 4 and None not in times and bool(np.all(np.diff(times) > 0))
    ok &= order
    parts.append("engineered times-to-0.9 " + ", ".join(f"{x:.2f}" if x is not None else "never" for x in times))
    assert _record(acceptance_log, 9, ok, "; ".join(parts), dt, 600)
