"""Nonlocal fractional thermistor problems.

Three problems are covered, each solved by Picard iteration of its
integral form:

* Riemann-Liouville on ``[0, T]`` with the global denominator
  ``(int_0^T f(u) dx)**2`` (:func:`solve_rl`);
* Caputo on the half axis with the running denominator
  ``(int_0^t f(x, u) dx)**2``, solved locally (:func:`solve_caputo_local`)
  and extended window by window (:func:`continue_caputo`);
* the same nonlocal problem on a time scale (:func:`solve_ts`).

Alongside the solvers sit the closed-form uniqueness thresholds and a priori
bounds, which make the existence theory checkable on concrete data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _backend
from .errors import DivergenceError, DomainError, PreconditionError, SingularityError
from .operators import GridFn, GridPolicy, RLIntegrator, default_grading, gamma, make_grid
from .timescale import TimeScale, TsGridFn, delta_weights, ts_integral_matrix
from .volterra import SolveReport, checked, fixed_point

DENOMINATOR_FLOOR = 1e-30
N_SCAN = (0.5, 1.0, 2.0, 4.0, 8.0)
BOUND_SLACK = 1e-6


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class BoundReport:
    threshold: float
    bound: float
    realized: float
    satisfied: bool


def _trapezoid(values, t) -> float:
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(t)))


def _prefix_trapezoid(values, t) -> np.ndarray:
    out = np.zeros_like(t)
    out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(t))
    return out


def _check_constants(alpha, lam, c1, c2, Lf):
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"thermistor problems need 0 < alpha < 1/2, got {alpha!r}")
    if not lam >= 0.0:
        raise DomainError("lambda must be nonnegative")
    if not 0.0 < c1 <= c2:
        raise DomainError("constants must satisfy 0 < c1 <= c2")
    if not Lf >= 0.0:
        raise DomainError("Lipschitz constant must be nonnegative")


def _spot_check_range(values, c1, c2, label) -> list[str]:
    v = np.asarray(values, dtype=float)
    slack = 1e-9 * max(1.0, c2)
    out = []
    if np.any(v < c1 - slack) or np.any(v > c2 + slack):
        out.append(f"{label}: sampled f in [{v.min():.6g}, {v.max():.6g}] leaves [c1, c2] = [{c1:g}, {c2:g}]")
    return out


def _spot_check_lipschitz(u, fu, Lf, label) -> list[str]:
    q = np.abs(np.diff(fu)) / np.diff(u)
    if q.size and float(q.max()) > Lf * (1.0 + 1e-6) + 1e-12:
        return [f"{label}: sampled difference quotient {q.max():.6g} exceeds L_f = {Lf:g}"]
    return []


@dataclass
class RLSpec:
    """Data of the Riemann-Liouville problem on ``[0, T]``.

    ``f`` maps temperature arrays to conductivity, ``h`` maps time arrays to
    the source. ``c1, c2, Lf`` are the asserted bounds and Lipschitz constant
    of ``f``; ``N`` is the rate of the weighted norm ``sup e^{-Nt}|x(t)|``.
    """

    alpha: float
    lam: float
    T: float
    f: Callable
    c1: float
    c2: float
    Lf: float
    h: Callable = _zero
    N: float = 1.0
    grid: GridPolicy | None = None
    sample_range: tuple = (0.0, 10.0)

    def __post_init__(self):
        _check_constants(self.alpha, self.lam, self.c1, self.c2, self.Lf)
        if not self.T > 0.0:
            raise DomainError("T must be positive")
        if not self.N > 0.0:
            raise DomainError("N must be positive")

    def nodes(self) -> np.ndarray:
        return make_grid(self.T, self.grid or GridPolicy(1024, default_grading(2 * self.alpha)))

    def spot_check(self) -> list[str]:
        u = np.linspace(*self.sample_range, 401)
        fu = np.broadcast_to(np.asarray(self.f(u), dtype=float), u.shape)
        return _spot_check_range(fu, self.c1, self.c2, "H1") + _spot_check_lipschitz(u, fu, self.Lf, "H1")


def uniqueness_threshold_rl(spec: RLSpec, N: float | None = None) -> float:
    """Largest lambda for which the weighted-norm contraction argument closes."""
    N = spec.N if N is None else N
    if spec.Lf == 0.0:
        return math.inf
    c1T = spec.c1 * spec.T
    denom = spec.Lf * (1.0 / c1T**2 + 2.0 * spec.c2**2 * spec.T / c1T**4 * math.exp(N * spec.T))
    return N ** (2.0 * spec.alpha) / denom


def best_weight_rate(spec: RLSpec, candidates=N_SCAN) -> tuple[float, float]:
    """``(N, threshold)`` maximising the uniqueness threshold over ``candidates``."""
    best = max(candidates, key=lambda n: uniqueness_threshold_rl(spec, n))
    return best, uniqueness_threshold_rl(spec, best)


def bound_rl(spec: RLSpec, nodes=None) -> float:
    """A priori bound on the weighted norm of any solution."""
    t = spec.nodes() if nodes is None else nodes
    h_inf = float(np.max(np.abs(np.broadcast_to(spec.h(t), t.shape))))
    f0 = float(np.asarray(spec.f(np.zeros(1)), dtype=float).reshape(-1)[0])
    c1T = spec.c1 * spec.T
    a = spec.alpha
    return (spec.lam / c1T**2 * f0 + h_inf) / spec.N ** (2 * a) * math.exp(
        spec.lam * spec.Lf / (c1T * spec.N**a) ** 2
    )


def weighted_norm(u: GridFn, N: float) -> float:
    return float(np.max(np.exp(-N * u.nodes) * np.abs(u.values)))


def solve_rl(spec: RLSpec, tol: float = 1e-8, max_iter: int = 200, initial=None):
    """Picard iteration of ``u = I^{2 alpha}[lam f(u) / (int_0^T f(u))^2 + h]``.

    Returns ``(SolveReport, BoundReport)``. Stopping uses the weighted norm.
    """
    t = spec.nodes()
    integ = RLIntegrator(t, 2.0 * spec.alpha)
    hv = checked(np.broadcast_to(spec.h(t), t.shape), "source h")
    weight = np.exp(-spec.N * t)

    def op(u):
        fu = checked(np.broadcast_to(spec.f(u), t.shape), "conductivity f")
        denom = _trapezoid(fu, t) ** 2
        if denom < DENOMINATOR_FLOOR:
            raise SingularityError(f"nonlocal denominator {denom:.3g} below floor")
        out = integ.apply(spec.lam * fu / denom + hv)
        out[0] = 0.0
        return out

    u0 = np.zeros(t.shape) if initial is None else np.broadcast_to(np.asarray(initial, dtype=float), t.shape)
    report = fixed_point(op, u0, tol, max_iter, t, weight=weight)
    report.warnings.extend(spec.spot_check())
    report.warnings.extend(_spot_check_range(spec.f(report.solution.values), spec.c1, spec.c2, "iterate"))
    threshold = uniqueness_threshold_rl(spec)
    bound = bound_rl(spec, t)
    realized = weighted_norm(report.solution, spec.N)
    report.info.update(N=spec.N, weighted_norm=realized)
    return report, BoundReport(threshold, bound, realized, realized <= bound * (1.0 + BOUND_SLACK))


@dataclass
class CaputoSpec:
    """Data of the Caputo initial-value problem.

    ``f(s, u)`` is vectorised in both arguments. ``M`` and ``omega`` are the
    growth and Lipschitz-in-time constants, ``b`` the radius of the ball
    around ``u0`` and ``T`` the target horizon of the local solve.
    """

    alpha: float
    lam: float
    u0: float
    f: Callable
    c1: float
    c2: float
    Lf: float
    M: float
    T: float
    omega: float = 2.0
    b: float = 1.0
    grid: GridPolicy | None = None

    def __post_init__(self):
        _check_constants(self.alpha, self.lam, self.c1, self.c2, self.Lf)
        if not self.b > 0.0:
            raise DomainError("ball radius b must be positive")
        if not self.M > 0.0:
            raise DomainError("M must be positive")
        if not self.omega >= 2.0:
            raise DomainError("omega must be at least 2")
        if not self.T > 0.0:
            raise DomainError("T must be positive")

    @property
    def policy(self) -> GridPolicy:
        return self.grid or GridPolicy(1024, default_grading(2 * self.alpha))

    @property
    def ball_radius(self) -> float:
        return abs(self.u0) + self.b


def caputo_local_radius(spec: CaputoSpec, cap: float | None = None) -> float:
    """Length of the window on which the local existence argument closes."""
    cap = spec.T if cap is None else cap
    if spec.lam == 0.0:
        return cap
    a2 = 2.0 * spec.alpha
    first = (spec.b / (spec.lam * spec.M / (gamma(a2 + 1.0) * spec.c1**2))) ** (1.0 / a2)
    return min(first, cap)


def continuation_window(spec: CaputoSpec) -> float:
    return caputo_local_radius(spec, cap=1.0)


class _CaputoOperator:
    """``u_i = u0 + lam / P_i^2 * I^{2 alpha}[f(., u)](t_i)`` on rows ``first..n``.

    ``P_i`` is the running trapezoid integral of ``f(x, u(x))`` up to
    ``t_i``. Values on ``nodes[:first]`` are frozen history.
    """

    def __init__(self, spec: CaputoSpec, nodes, history=None, nonlocal_override=None):
        self.spec = spec
        self.t = np.asarray(nodes, dtype=float)
        self.history = np.zeros(0) if history is None else np.asarray(history, dtype=float)
        self.first = max(1, self.history.size)
        self.integ = RLIntegrator(self.t, 2.0 * spec.alpha, row_start=self.first)
        self.override = nonlocal_override

    def full(self, v):
        if self.history.size:
            return np.concatenate([self.history, v])
        return np.concatenate([[self.spec.u0], v[1:]])

    def nonlocal_terms(self, u):
        fu = checked(np.broadcast_to(self.spec.f(self.t, u), self.t.shape), "conductivity f")
        prefix = _prefix_trapezoid(fu, self.t)
        if abs(prefix[1]) < DENOMINATOR_FLOOR:
            raise SingularityError(f"prefix integral at t_1 is {prefix[1]:.3g}, below floor")
        return fu, prefix

    def __call__(self, v):
        u = self.full(v)
        if self.override is not None:
            tail = self.spec.u0 + self.override * self.integ.apply(np.ones_like(self.t))
        else:
            fu, prefix = self.nonlocal_terms(u)
            tail = self.spec.u0 + self.spec.lam / prefix[self.first :] ** 2 * self.integ.apply(fu)
        if self.history.size:
            return tail
        return np.concatenate([[self.spec.u0], tail])


def solve_caputo_local(
    spec: CaputoSpec,
    tol: float = 1e-8,
    max_iter: int = 200,
    nodes=None,
    nonlocal_override: float | None = None,
) -> SolveReport:
    """Local solve on ``[0, h]`` with ``h = caputo_local_radius(spec)``.

    ``nodes`` replaces the default graded grid (any grid starting at 0).
    ``nonlocal_override`` swaps ``lam f / P^2`` for a constant, reducing the
    problem to a linear Volterra check.
    """
    if nodes is None:
        nodes = make_grid(caputo_local_radius(spec), spec.policy)
    t = np.asarray(nodes, dtype=float)
    if t[0] != 0.0:
        raise DomainError("local Caputo grid must start at 0")
    op = _CaputoOperator(spec, t, nonlocal_override=nonlocal_override)
    report = fixed_point(op, np.full(t.shape, float(spec.u0)), tol, max_iter, t)
    report.info["breakpoints"] = [0.0, float(t[-1])]
    _attach_caputo_warnings(report, spec)
    return report


def continue_caputo(prev: SolveReport, spec: CaputoSpec, tol: float = 1e-8, max_iter: int = 200, n: int | None = None) -> SolveReport:
    """Extend a converged solution by one continuation window.

    The new values on ``[beta, beta + h']`` solve the Caputo equation with the
    history on ``[0, beta]`` frozen; the result covers ``[0, beta + h']``.
    """
    if not prev.converged:
        raise PreconditionError("continuation requires a converged previous solve")
    t_prev = prev.solution.nodes
    beta = float(t_prev[-1])
    width = continuation_window(spec)
    m = n or spec.policy.n
    new = beta + make_grid(width, GridPolicy(m, 1.0))[1:]
    t = np.concatenate([t_prev, new])
    op = _CaputoOperator(spec, t, history=prev.solution.values)
    start = np.full(new.shape, float(prev.solution.values[-1]))
    step = fixed_point(op, start, tol, max_iter, new)
    values = np.concatenate([prev.solution.values, step.solution.values])
    report = SolveReport(
        GridFn(t, values),
        step.iterations,
        step.differences,
        step.contraction_factor,
        step.residual,
        step.converged,
        info={"breakpoints": list(prev.info.get("breakpoints", [0.0, beta])) + [float(t[-1])], "window": width},
    )
    _attach_caputo_warnings(report, spec)
    return report


def _attach_caputo_warnings(report: SolveReport, spec: CaputoSpec):
    s, u = report.solution.nodes, report.solution.values
    fu = np.broadcast_to(np.asarray(spec.f(s, u), dtype=float), s.shape)
    report.warnings.extend(_spot_check_range(fu, spec.c1, spec.c2, "iterate"))


def caputo_two_route_gap(direct: SolveReport, continued: SolveReport) -> float:
    """Sup-norm gap between two Caputo solutions on their shared nodes."""
    a, b = direct.solution, continued.solution
    common, ia, ib = np.intersect1d(a.nodes, b.nodes, return_indices=True)
    if common.size == 0:
        raise DomainError("the two solutions share no nodes")
    return float(np.max(np.abs(a.values[ia] - b.values[ib])))


def gronwall_envelope(w: GridFn, a: float, alpha: float, tol: float = 1e-13, max_iter: int = 2000) -> GridFn:
    """Smallest supersolution of ``v <= w + a int_0^t v(s) (t - s)^{-alpha} ds``.

    Computed as the limit of the Neumann iteration
    ``v <- w + a Gamma(1 - alpha) I^{1 - alpha} v``; any ``v`` satisfying the
    integral inequality on the grid lies below it.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("Gronwall exponent must lie in (0, 1)")
    if not a >= 0.0:
        raise DomainError("feedback constant a must be nonnegative")
    if np.any(w.values < 0.0):
        raise PreconditionError("forcing w must be nonnegative")
    integ = RLIntegrator(w.nodes, 1.0 - alpha)
    c = a * gamma(1.0 - alpha)
    if c * float(np.max(integ.diagonal)) >= 1.0:
        raise DivergenceError("Neumann series diverges at the grid scale")

    def op(v):
        return w.values + c * integ.apply(v)

    report = fixed_point(op, w.values.copy(), tol, max_iter, w.nodes, growth_limit=None, relative=True)
    if not report.converged:
        raise DivergenceError("Neumann iteration did not settle", report)
    return report.solution


@dataclass(frozen=True)
class EnvelopeCheck:
    feedback: float
    envelope: GridFn | None
    holds: bool


def caputo_envelope_check(report: SolveReport, spec: CaputoSpec, tol: float = 1e-8) -> EnvelopeCheck:
    """Certify a pointwise linear bound on the nonlocal integrand and compare with the envelope.

    The certificate is the smallest ``a`` with
    ``lam |f(s, u(s))| / (Gamma(2 alpha) P(t)^2) <= a |u(s)|`` for all grid
    ``s <= t``; ``P`` is nondecreasing, so ``P(t) >= max(P(s), P(t_1))``.
    With ``w = |u0|`` the solution must stay below ``gronwall_envelope``.
    """
    s, u = report.solution.nodes, report.solution.values
    fu = np.broadcast_to(np.asarray(spec.f(s, u), dtype=float), s.shape)
    if np.any(fu <= 0.0) or np.any(u == 0.0):
        return EnvelopeCheck(math.inf, None, False)
    prefix = _prefix_trapezoid(fu, s)
    prefix = np.maximum(prefix, prefix[1])
    a = float(np.max(spec.lam * fu / (gamma(2 * spec.alpha) * prefix**2 * np.abs(u))))
    try:
        env = gronwall_envelope(GridFn(s, np.full(s.shape, abs(spec.u0))), a, 1.0 - 2.0 * spec.alpha)
    except DivergenceError:
        return EnvelopeCheck(a, None, False)
    slack = 10.0 * max(tol, report.residual) * max(1.0, float(np.max(env.values)))
    return EnvelopeCheck(a, env, bool(np.all(np.abs(u) <= env.values + slack)))


def check_global_growth(spec: CaputoSpec, c3: float, c4: float, c5: float, R: float | None = None, samples: int = 101) -> bool:
    """Sampled check of ``c3 <= |f(s, x)| <= c4 |x| + c5`` on ``[0, T] x [-R, R]``."""
    R = spec.ball_radius if R is None else R
    s = np.linspace(0.0, spec.T, samples)[:, None]
    x = np.linspace(-R, R, samples)[None, :]
    with np.errstate(all="ignore"):
        fx = np.abs(np.broadcast_to(np.asarray(spec.f(s, x), dtype=float), (samples, samples)))
    if not np.all(np.isfinite(fx)):
        return False
    slack = 1e-12
    return bool(np.all(fx >= c3 - slack) and np.all(fx <= c4 * np.abs(x) + c5 + slack))


@dataclass
class TSSpec:
    """Nonlocal problem on a time scale starting at 0; the horizon is its maximum."""

    ts: TimeScale
    alpha: float
    lam: float
    f: Callable
    c1: float
    c2: float
    Lf: float
    grid: GridPolicy | None = None
    sample_range: tuple = (0.0, 10.0)

    def __post_init__(self):
        _check_constants(self.alpha, self.lam, self.c1, self.c2, self.Lf)
        if self.ts.min != 0.0:
            raise DomainError("the time scale must start at t0 = 0")
        if not self.ts.max > 0.0:
            raise DomainError("the time scale must extend beyond 0")

    @property
    def T(self) -> float:
        return self.ts.max

    def sample(self, values=0.0) -> TsGridFn:
        policy = self.grid or GridPolicy(256, default_grading(2 * self.alpha))
        return TsGridFn.sample(self.ts, lambda t: np.broadcast_to(values, t.shape), policy)

    def spot_check(self) -> list[str]:
        u = np.linspace(*self.sample_range, 401)
        fu = np.broadcast_to(np.asarray(self.f(u), dtype=float), u.shape)
        return _spot_check_range(fu, self.c1, self.c2, "H1") + _spot_check_lipschitz(u, fu, self.Lf, "H1")


def uniqueness_threshold_ts(spec: TSSpec) -> float:
    if spec.Lf == 0.0:
        return math.inf
    a, T, c1, c2, L = spec.alpha, spec.T, spec.c1, spec.c2, spec.Lf
    g = gamma(2 * a + 1.0)
    total = T ** (2 * a) * L / ((c1 * T) ** 2 * g) + 2.0 * c2**2 * T ** (2 * (a + 1)) * L / ((c1 * T) ** 4 * g)
    return 1.0 / total


def bound_ts(spec: TSSpec, matrix=None) -> float:
    """``lam c2 / (c1 T)^2 * max_t I^{2 alpha}[1](t)``; follows from ``c1 <= f <= c2`` alone."""
    if matrix is None:
        matrix = ts_integral_matrix(spec.sample(), 2.0 * spec.alpha)
    ones_integral = float(np.max(matrix @ np.ones(matrix.shape[0])))
    return spec.lam * spec.c2 / (spec.c1 * spec.T) ** 2 * ones_integral


def solve_ts(spec: TSSpec, tol: float = 1e-8, max_iter: int = 200, initial=None):
    """Picard iteration of the time-scale operator; returns ``(SolveReport, BoundReport)``.

    The bound reported is :func:`bound_ts` against the sup norm.
    """
    g0 = spec.sample()
    t = g0.nodes
    m = np.ascontiguousarray(ts_integral_matrix(g0, 2.0 * spec.alpha))
    dw = delta_weights(g0)

    def op(u):
        fu = checked(np.broadcast_to(spec.f(u), t.shape), "conductivity f")
        denom = float(np.dot(dw, fu)) ** 2
        if denom < DENOMINATOR_FLOOR:
            raise SingularityError(f"nonlocal denominator {denom:.3g} below floor")
        return spec.lam / denom * _backend.lower_matvec(m, fu)

    u0 = np.zeros(t.shape) if initial is None else np.broadcast_to(np.asarray(initial, dtype=float), t.shape)
    report = fixed_point(op, u0, tol, max_iter, t)
    report.warnings.extend(spec.spot_check())
    report.warnings.extend(_spot_check_range(spec.f(report.solution.values), spec.c1, spec.c2, "iterate"))
    bound = bound_ts(spec, m)
    realized = float(np.max(np.abs(report.solution.values)))
    report.info["timescale"] = spec.ts.to_json()
    return report, BoundReport(uniqueness_threshold_ts(spec), bound, realized, realized <= bound * (1.0 + BOUND_SLACK))
