"""Acceptance criteria 1-11; each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` (the lines also
appear in the terminal summary without ``-s``).
"""

import json
import math
import time

import numpy as np
import pytest

from fracsolve import oracle
from fracsolve.cli import main
from fracsolve.operators import GridFn, GridPolicy, make_grid, rl_derivative, rl_integral
from fracsolve.thermistor import (
    CaputoSpec,
    RLSpec,
    TSSpec,
    caputo_envelope_check,
    caputo_local_radius,
    caputo_two_route_gap,
    continue_caputo,
    gronwall_envelope,
    solve_caputo_local,
    solve_rl,
    solve_ts,
    uniqueness_threshold_rl,
    uniqueness_threshold_ts,
)
from fracsolve.timescale import TimeScale
from fracsolve.volterra import abel_first_kind_convolution, abel_second_kind

pytestmark = pytest.mark.acceptance


def sigmoid(u):
    return 1.0 + 1.0 / (1.0 + u**2)


def ones(s, u):
    return np.ones(np.broadcast_shapes(np.shape(s), np.shape(u)))


def test_criterion_01_operator_accuracy(record_criterion):
    t = make_grid(1.0, GridPolicy(2048, 2.0))
    worst = 0.0
    start = time.perf_counter()
    for mu in (0, 1, 2):
        for alpha in (0.1, 0.3, 0.49):
            got = rl_integral(GridFn(t, t**mu), alpha).values
            exact = np.array([oracle.power_law_rl_integral(mu, alpha, x).value for x in t])
            worst = max(worst, float(np.max(np.abs(got - exact)) / np.max(np.abs(exact))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed < 5.0
    record_criterion(1, "operator accuracy vs power law", ok, f"rel sup err {worst:.2e}, {elapsed:.2f} s")
    assert worst <= 1e-3
    assert elapsed < 5.0


def test_criterion_02_inverse_property(record_criterion):
    polys = {
        "1": lambda t: np.ones_like(t),
        "t": lambda t: t,
        "t^2": lambda t: t**2,
        "t^3": lambda t: t**3,
        "1+t-2t^2+t^3/2": lambda t: 1.0 + t - 2.0 * t**2 + 0.5 * t**3,
    }
    worst, where = 0.0, ""
    for gam, alphas in ((2.0, (0.1, 0.25, 0.5, 0.75, 0.9)), (1.0, (0.5,))):
        t = make_grid(1.0, GridPolicy(2048, gam))
        for alpha in alphas:
            for name, p in polys.items():
                g = GridFn(t, p(t))
                back = rl_derivative(rl_integral(g, alpha), alpha)
                err = float(np.max(np.abs(back.values[1:-1] - g.values[1:-1])))
                if err > worst:
                    worst, where = err, f"g={name}, alpha={alpha}, gamma={gam}"
    ok = worst <= 1e-3
    record_criterion(2, "D^a I^a g = g at interior nodes", ok, f"max err {worst:.2e} at {where}")
    assert ok


def test_criterion_03_rl_closed_form(record_criterion):
    spec = RLSpec(0.25, 0.1, 1.0, np.ones_like, 1.0, 1.0, 0.0)
    rep, _ = solve_rl(spec, tol=1e-10)
    t = rep.solution.nodes
    exact = 0.1 * t**0.5 / math.gamma(1.5)
    err = float(np.max(np.abs(rep.solution.values - exact)))
    ok = rep.converged and err <= 1e-4 and rep.iterations <= 3
    record_criterion(3, "RL constant-f closed form", ok, f"sup err {err:.2e}, {rep.iterations} iterations")
    assert ok


def test_criterion_04_uniqueness_threshold(record_criterion):
    base = RLSpec(0.25, 1.0, 1.0, sigmoid, 1.0, 2.0, 0.65)
    lam = 0.9 * uniqueness_threshold_rl(base)
    spec = RLSpec(0.25, lam, 1.0, sigmoid, 1.0, 2.0, 0.65)
    tol = 1e-10
    r0, _ = solve_rl(spec, tol=tol, initial=0.0)
    r5, _ = solve_rl(spec, tol=tol, initial=5.0)
    gap = float(np.max(np.abs(r0.solution.values - r5.solution.values)))
    factor = max(r0.contraction_factor, r5.contraction_factor)
    ok = r0.converged and r5.converged and gap <= 10 * tol and factor < 1.0
    record_criterion(4, "double-run uniqueness at 0.9 lambda*", ok, f"gap {gap:.2e}, factor {factor:.3g}")
    assert ok


def _rl_matrix():
    # (alpha, lam, f, c1, c2, Lf, h, N)
    cases = []
    for alpha in (0.1, 0.25, 0.4):
        for N in (1.0, 2.0):
            cases.append((alpha, 0.1, np.ones_like, 1.0, 1.0, 0.0, lambda t: np.zeros_like(t), N))
            cases.append((alpha, 0.3, lambda u: np.full_like(u, 2.0), 2.0, 2.0, 0.0, lambda t: np.ones_like(t), N))
            thr = uniqueness_threshold_rl(RLSpec(alpha, 1.0, 1.0, sigmoid, 1.0, 2.0, 0.65, N=N))
            for frac in (0.5, 0.9):
                cases.append((alpha, frac * thr, sigmoid, 1.0, 2.0, 0.65, lambda t: np.zeros_like(t), N))
            cases.append((alpha, 0.05, sigmoid, 1.0, 2.0, 0.65, lambda t: 0.5 * np.sin(t) ** 2, N))
    return cases


def test_criterion_05_a_priori_bound(record_criterion):
    runs, failures, tightest = 0, [], 0.0
    for alpha, lam, f, c1, c2, lf, h, N in _rl_matrix():
        spec = RLSpec(alpha, lam, 1.0, f, c1, c2, lf, h=h, N=N, grid=GridPolicy(512, 1.0 / (2 * alpha)))
        rep, bnd = solve_rl(spec, tol=1e-10)
        if not rep.converged:
            continue
        runs += 1
        tightest = max(tightest, bnd.realized / bnd.bound)
        if not bnd.realized <= bnd.bound * (1.0 + 1e-6):
            failures.append((alpha, lam, N, bnd.realized, bnd.bound))
    ok = runs > 0 and not failures
    record_criterion(5, "weighted-norm a priori bound", ok, f"{runs} converged runs, max realized/bound {tightest:.3f}")
    assert runs >= 20
    assert not failures, failures


def test_criterion_06_continuation_coherence(record_criterion):
    tol = 1e-10
    spec = CaputoSpec(0.25, 1.0, 1.0, ones, 1.0, 1.0, 0.0, M=1.0, T=10.0, grid=GridPolicy(1024, 2.0))
    h = caputo_local_radius(spec)
    local = solve_caputo_local(spec, tol)
    continued = continue_caputo(local, spec, tol)
    assert continued.solution.nodes[-1] == pytest.approx(2 * h)
    # direct solve on the same nodes
    direct = solve_caputo_local(spec, tol, nodes=continued.solution.nodes)
    gap_shared = caputo_two_route_gap(direct, continued)
    # direct solve on an independent graded grid over [0, 2h], compared on [h, 2h]
    own = solve_caputo_local(spec, tol, nodes=make_grid(2 * h, GridPolicy(1024, 2.0)))
    t = continued.solution.nodes
    late = t >= h
    gap_own = float(np.max(np.abs(np.interp(t[late], own.solution.nodes, own.solution.values) - continued.solution.values[late])))
    limit = 5 * tol + 1e-3
    ok = direct.converged and continued.converged and gap_shared <= limit and gap_own <= limit
    record_criterion(6, "Caputo direct vs continued on [0, 2h]", ok,
                     f"shared-node gap {gap_shared:.2e}, independent-grid gap {gap_own:.2e}")
    assert ok


# truncated-series oracle: E_{1/2}(0.1 Gamma(1/2) sqrt(t)), 60 terms
ENVELOPE_FROZEN = {0.25: 1.108410152459373, 0.5: 1.1587436461083251, 1.0: 1.236156519201175}


def test_criterion_07_gronwall_envelope(record_criterion):
    t = make_grid(1.0, GridPolicy(1024, 2.0))
    env = gronwall_envelope(GridFn(t, np.ones_like(t)), 0.1, 0.5)
    err = max(abs(np.interp(x, t, env.values) - v) for x, v in ENVELOPE_FROZEN.items())

    # every converged, certified Caputo run stays below its envelope
    certified, violations = 0, []
    f = lambda s, u: 1.0 + np.exp(-u)  # noqa: E731
    for lam in (1e-6, 1e-4, 1e-3):
        for alpha in (0.25, 0.4):
            spec = CaputoSpec(alpha, lam, 1.0, f, 1.0, 2.0, 1.0, M=2.0, T=10.0, grid=GridPolicy(256, 1.0))
            rep = solve_caputo_local(spec, 1e-10)
            for _ in range(3):
                rep = continue_caputo(rep, spec, 1e-10)
            assert rep.converged
            check = caputo_envelope_check(rep, spec, 1e-10)
            if check.envelope is None:
                continue
            certified += 1
            if not check.holds:
                violations.append((lam, alpha))
    ok = err <= 1e-4 and certified > 0 and not violations
    record_criterion(7, "Gronwall envelope vs series; Caputo runs dominated", ok,
                     f"series err {err:.2e}, {certified} certified runs, {len(violations)} violations")
    assert err <= 1e-4
    assert certified >= 3
    assert not violations


def test_criterion_08_timescale_reductions(record_criterion):
    policy = GridPolicy(512, 2.0)
    lam = 0.9 * uniqueness_threshold_rl(RLSpec(0.25, 1.0, 1.0, sigmoid, 1.0, 2.0, 0.65))
    rl, _ = solve_rl(RLSpec(0.25, lam, 1.0, sigmoid, 1.0, 2.0, 0.65, grid=policy), tol=1e-12)
    ts, _ = solve_ts(TSSpec(TimeScale.interval(0.0, 1.0), 0.25, lam, sigmoid, 1.0, 2.0, 0.65, grid=policy), tol=1e-12)
    assert np.array_equal(rl.solution.nodes, ts.solution.nodes)
    gap = float(np.max(np.abs(rl.solution.values - ts.solution.values)))

    tol = 1e-12
    pts = [0.0, 0.25, 0.5, 0.75, 1.0]
    disc = TimeScale.points(pts)
    rep, _ = solve_ts(TSSpec(disc, 0.25, 0.05, sigmoid, 1.0, 2.0, 0.65), tol=tol)
    u = rep.solution.values
    fu = sigmoid(u)
    denom = sum(fu[k] * (pts[k + 1] - pts[k]) for k in range(4)) ** 2
    resid = max(
        abs(u[i] - 0.05 / denom * oracle.discrete_ts_sum(pts[: i + 1], list(fu[: i + 1]), 0.5, pts[i]).value)
        for i in range(5)
    )
    ok = gap <= 1e-4 and resid <= tol
    record_criterion(8, "time-scale reductions (interval, 5-point scale)", ok,
                     f"interval gap {gap:.2e}, discrete residual {resid:.2e}")
    assert gap <= 1e-4
    assert resid <= tol


def test_criterion_09_threshold_formulas(record_criterion):
    rl = uniqueness_threshold_rl(RLSpec(0.25, 0.1, 1.0, np.ones_like, 1.0, 1.0, 1.0, N=1.0))
    ts = uniqueness_threshold_ts(TSSpec(TimeScale.interval(0.0, 1.0), 0.25, 0.1, np.ones_like, 1.0, 1.0, 1.0))
    e_rl = abs(rl - 1.0 / (1.0 + 2.0 * math.e)) / (1.0 / (1.0 + 2.0 * math.e))
    e_ts = abs(ts - math.gamma(1.5) / 3.0) / (math.gamma(1.5) / 3.0)
    ok = e_rl <= 1e-9 and e_ts <= 1e-9
    record_criterion(9, "threshold formulas", ok, f"rl {rl:.9f} (rel {e_rl:.1e}), ts {ts:.9f} (rel {e_ts:.1e})")
    assert ok


def test_criterion_10_abel_round_trips(record_criterion):
    start = time.perf_counter()
    t = make_grid(1.0, GridPolicy(2048, 2.0))
    alpha = 0.4
    # forward map of g(s) = s by the power-law oracle: I^(1-alpha) s
    forward = np.array([oracle.power_law_rl_integral(1.0, 1.0 - alpha, x).value for x in t])
    g1 = abel_first_kind_convolution(GridFn(t, forward), alpha)
    e1 = float(np.max(np.abs(g1.values - t)) / np.max(t))

    # second kind, k = 1/Gamma(1-alpha): f = g + I^(1-alpha) g
    k = 1.0 / math.gamma(1.0 - alpha)
    rep = abel_second_kind(GridFn(t, t + forward), lambda x, s: np.full(np.broadcast(x, s).shape, k), alpha, tol=1e-12)
    e2 = float(np.max(np.abs(rep.solution.values - t)) / np.max(t))
    elapsed = time.perf_counter() - start
    ok = e1 <= 1e-3 and e2 <= 1e-3 and rep.converged and elapsed < 10.0
    record_criterion(10, "Abel first/second kind round trips", ok,
                     f"first {e1:.2e}, second {e2:.2e}, {elapsed:.2f} s")
    assert ok


def _write(path, data):
    path.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(path)


def test_criterion_11_cli_contract(tmp_path, record_criterion):
    good = {"kind": "rl", "alpha": 0.25, "lambda": 0.1, "T": 1.0, "N": 1.0, "f": "1", "h": "0",
            "c1": 1.0, "c2": 1.0, "Lf": 0.0, "grid": {"n": 1024, "gamma": 2.0}, "tol": 1e-8,
            "max_iter": 200, "out": {"csv": "u.csv", "report": "report.json"}}
    cfg = _write(tmp_path / "good.json", good)
    codes = [main(["run", cfg])]
    first = (tmp_path / "u.csv").read_bytes()
    codes.append(main(["run", cfg]))
    second = (tmp_path / "u.csv").read_bytes()
    identical = first == second
    report = json.loads((tmp_path / "report.json").read_text())

    bad = {"kind": "rl", "alpha": 0.25, "lambda": 5.0, "f": "exp(4*u)", "c1": 1.0, "c2": 2.0, "Lf": 5.0,
           "grid": {"n": 256}, "out": {"csv": "d.csv", "report": "d.json"}}
    div_code = main(["run", _write(tmp_path / "div.json", bad)])
    div_report = json.loads((tmp_path / "d.json").read_text())
    malformed = main(["run", _write(tmp_path / "broken.json", '{"kind": "rl", "alpha": 0.25,')])

    ok = (codes == [0, 0] and identical and report["converged"] and div_code == 2
          and not div_report["converged"] and len(div_report["differences"]) > 0 and malformed == 1)
    record_criterion(11, "CLI determinism and exit codes", ok,
                     f"convergent {codes}, byte-identical {identical}, divergent {div_code}, malformed {malformed}")
    assert codes == [0, 0]
    assert identical
    assert div_code == 2 and len(div_report["differences"]) > 0
    assert malformed == 1
