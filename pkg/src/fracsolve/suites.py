"""Oracle-comparison suites run by ``fracsolve verify``."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from . import oracle
from .operators import GridFn, GridPolicy, make_grid, rl_derivative, rl_integral
from .thermistor import (
    RLSpec,
    TSSpec,
    gronwall_envelope,
    solve_rl,
    solve_ts,
    uniqueness_threshold_rl,
    uniqueness_threshold_ts,
)
from .timescale import TimeScale, TsGridFn, delta_integral, ts_frac_integral
from .volterra import VolterraProblem, abel_first_kind_convolution, abel_second_kind, picard_solve


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def _rel(err: float, tol: float, label: str) -> tuple[bool, str]:
    return err <= tol, f"{label} {err:.3e} (tol {tol:.0e})"


def operators_suite() -> list[Check]:
    out = []
    t = make_grid(1.0, GridPolicy(2048, 2.0))
    for mu in (0, 1, 2):
        for a in (0.1, 0.3, 0.49):
            got = rl_integral(GridFn(t, t**mu), a).values
            exact = np.array([oracle.power_law_rl_integral(mu, a, x).value for x in t])
            ok, msg = _rel(float(np.max(np.abs(got - exact)) / np.max(np.abs(exact))), 1e-3, "rel sup err")
            out.append(Check(f"I^{a} t^{mu} power law", ok, msg))
    for a in (0.25, 0.5, 0.75):
        g = GridFn(t, 1.0 + t - 2.0 * t**2 + 0.5 * t**3)
        back = rl_derivative(rl_integral(g, a), a)
        err = float(np.max(np.abs(back.values[1:-1] - g.values[1:-1])))
        ok, msg = _rel(err, 1e-3, "sup err")
        out.append(Check(f"D^{a} I^{a} g = g (cubic)", ok, msg))
    return out


def volterra_suite() -> list[Check]:
    out = []
    p = VolterraProblem(0.5, 1.0, lambda s, u: u, 1.0, GridPolicy(1024, 2.0))
    rep = picard_solve(p, tol=1e-12)
    exact = np.array([oracle.mittag_leffler(0.5, x**0.5, 80).value for x in rep.solution.nodes])
    ok, msg = _rel(float(np.max(np.abs(rep.solution.values - exact))), 1e-4, "sup err")
    out.append(Check("u = 1 + I^0.5 u vs Mittag-Leffler series", ok and rep.converged, msg))

    t = make_grid(1.0, GridPolicy(2048, 2.0))
    alpha = 0.4
    f = GridFn(t, np.array([oracle.power_law_rl_integral(1.0, 1.0 - alpha, x).value for x in t]))
    g = abel_first_kind_convolution(f, alpha)
    ok, msg = _rel(float(np.max(np.abs(g.values - t)) / np.max(t)), 1e-3, "rel sup err")
    out.append(Check("first-kind Abel round trip g(s)=s", ok, msg))

    k = 1.0 / math.gamma(1.0 - alpha)
    f2 = GridFn(t, t + np.array([oracle.power_law_rl_integral(1.0, 1.0 - alpha, x).value for x in t]))
    rep2 = abel_second_kind(f2, lambda x, s: np.full(np.broadcast(x, s).shape, k), alpha, tol=1e-12)
    ok, msg = _rel(float(np.max(np.abs(rep2.solution.values - t)) / np.max(t)), 1e-3, "rel sup err")
    out.append(Check("second-kind Abel manufactured g(s)=s", ok and rep2.converged, msg))
    return out


def thermistor_suite() -> list[Check]:
    out = []
    one = np.ones_like
    spec = RLSpec(0.25, 0.1, 1.0, one, 1.0, 1.0, 0.0, grid=GridPolicy(2048, 2.0))
    rep, bnd = solve_rl(spec)
    exact = 0.1 * rep.solution.nodes**0.5 / math.gamma(1.5)
    ok, msg = _rel(float(np.max(np.abs(rep.solution.values - exact))), 1e-4, "sup err")
    out.append(Check("RL closed form, constant f", ok and rep.iterations <= 3, msg + f", {rep.iterations} iterations"))

    base = RLSpec(0.25, 0.1, 1.0, one, 1.0, 1.0, 1.0)
    err = abs(uniqueness_threshold_rl(base) - 1.0 / (1.0 + 2.0 * math.e)) / (1.0 / (1.0 + 2.0 * math.e))
    out.append(Check("RL uniqueness threshold formula", err <= 1e-9, f"rel err {err:.1e}"))
    ts_base = TSSpec(TimeScale.interval(0.0, 1.0), 0.25, 0.1, one, 1.0, 1.0, 1.0)
    err = abs(uniqueness_threshold_ts(ts_base) - math.gamma(1.5) / 3.0) / (math.gamma(1.5) / 3.0)
    out.append(Check("time-scale uniqueness threshold formula", err <= 1e-9, f"rel err {err:.1e}"))

    def sig(u):
        return 1.0 + 1.0 / (1.0 + u**2)

    probe = RLSpec(0.25, 1.0, 1.0, sig, 1.0, 2.0, 0.65, grid=GridPolicy(1024, 2.0))
    lam = 0.9 * uniqueness_threshold_rl(probe)
    spec = RLSpec(0.25, lam, 1.0, sig, 1.0, 2.0, 0.65, grid=GridPolicy(1024, 2.0))
    tol = 1e-10
    r0, b0 = solve_rl(spec, tol=tol)
    r5, _ = solve_rl(spec, tol=tol, initial=5.0)
    gap = float(np.max(np.abs(r0.solution.values - r5.solution.values)))
    ok = gap <= 10 * tol and r0.contraction_factor < 1.0 and b0.satisfied
    out.append(Check("double-run uniqueness below threshold", ok, f"gap {gap:.2e}, factor {r0.contraction_factor:.3f}"))

    t = make_grid(1.0, GridPolicy(1024, 2.0))
    env = gronwall_envelope(GridFn(t, np.ones_like(t)), 0.1, 0.5)
    worst = 0.0
    for x in (0.25, 0.5, 1.0):
        i = int(np.argmin(np.abs(t - x)))
        ref = oracle.mittag_leffler(0.5, 0.1 * math.gamma(0.5) * t[i] ** 0.5, 60).value
        worst = max(worst, abs(env.values[i] - ref))
    ok, msg = _rel(worst, 1e-4, "max err")
    out.append(Check("Gronwall envelope vs series", ok, msg))
    return out


def timescale_suite() -> list[Check]:
    out = []
    ts = TimeScale.interval(0.0, 1.0)
    g = TsGridFn.sample(ts, lambda t: 1.0 + t + t**2, GridPolicy(2048, 2.0))
    ref = rl_integral(GridFn(g.nodes, g.values), 0.3)
    idx = np.linspace(1, g.nodes.size - 1, 17).astype(int)
    err = max(abs(ts_frac_integral(g, 0.3, 0.0, g.nodes[i]) - ref.values[i]) / abs(ref.values[i]) for i in idx)
    out.append(Check("R reduction of the fractional delta integral", err <= 1e-6, f"rel err {err:.2e}"))

    pts = [0.0, 0.25, 0.5, 0.75, 1.0]
    disc = TimeScale.points(pts)
    gd = TsGridFn(disc, pts, [1.0, 2.0, -1.0, 0.5, 3.0])
    acc = 0.0
    for k in range(4):
        acc += gd.values[k] * (pts[k + 1] - pts[k])
    out.append(Check("hZ reduction of the delta integral (bitwise)", delta_integral(gd, 0.0, 1.0) == acc, f"{float(acc)!r}"))
    lhs = ts_frac_integral(gd, 0.5, 0.0, 1.0)
    rhs = oracle.discrete_ts_sum(disc, list(gd.values), 0.5, 1.0).value
    out.append(Check("hZ reduction of the fractional integral (bitwise)", lhs == rhs, f"{float(lhs)!r} vs {float(rhs)!r}"))

    def sig(u):
        return 1.0 + 1.0 / (1.0 + u**2)

    spec = TSSpec(disc, 0.25, 0.05, sig, 1.0, 2.0, 0.65)
    rep, _ = solve_ts(spec, tol=1e-12)
    u = rep.solution.values
    fu = sig(u)
    denom = sum(fu[k] * (pts[k + 1] - pts[k]) for k in range(4)) ** 2
    resid = max(abs(u[i] - spec.lam / denom * oracle.discrete_ts_sum(disc, list(fu), 0.5, pts[i]).value) for i in range(5))
    out.append(Check("discrete fixed point satisfies explicit sums", resid <= 1e-12, f"residual {resid:.2e}"))
    return out


SUITES: dict[str, Callable[[], list[Check]]] = {
    "operators": operators_suite,
    "volterra": volterra_suite,
    "thermistor": thermistor_suite,
    "timescale": timescale_suite,
}


def run_suite(name: str) -> list[Check]:
    fns = SUITES.values() if name == "all" else [SUITES[name]]
    return [Check(c.name, bool(c.passed), c.detail) for fn in fns for c in fn()]
