"""Picard iteration for weakly singular Volterra equations of the second kind.

The engine :func:`fixed_point` is shared by every solver in the package; the
Volterra and Abel front ends below only assemble the operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .errors import ConsistencyError, DivergenceError, DomainError, EvaluationError
from .operators import (
    GridFn,
    GridPolicy,
    RLIntegrator,
    check_order,
    default_grading,
    make_grid,
    rl_derivative,
)

GROWTH_LIMIT = 5


@dataclass
class SolveReport:
    solution: GridFn
    iterations: int
    differences: list
    contraction_factor: float
    residual: float
    converged: bool
    warnings: list = field(default_factory=list)
    info: dict = field(default_factory=dict)


def contraction_factor(differences) -> float:
    """Geometric mean of consecutive difference ratios; 0 once a difference vanishes."""
    ratios = []
    for prev, cur in zip(differences, differences[1:]):
        if prev == 0.0:
            break
        ratios.append(cur / prev)
    if not ratios:
        return 0.0
    if any(r == 0.0 for r in ratios):
        return 0.0
    return float(math.exp(sum(math.log(r) for r in ratios) / len(ratios)))


def fixed_point(
    operator: Callable[[np.ndarray], np.ndarray],
    initial,
    tol: float,
    max_iter: int,
    nodes,
    weight=None,
    growth_limit: int | None = GROWTH_LIMIT,
    relative: bool = False,
) -> SolveReport:
    """Iterate ``u <- operator(u)`` until the (weighted) sup-norm step is <= tol.

    ``weight`` multiplies differences before the sup is taken (the
    exponentially weighted norm uses ``exp(-N t)``). With ``relative`` the
    tolerance scales with ``max(1, |u|_sup)``. Five consecutive growing
    steps, an iterate that overflows, or an :class:`EvaluationError` after
    the first sweep raise :class:`DivergenceError`.
    """
    if not tol > 0.0:
        raise DomainError("tolerance must be positive")
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    w = np.ones(len(nodes)) if weight is None else np.asarray(weight, dtype=float)

    def norm(x):
        return float(np.max(np.abs(x) * w))

    u = np.array(initial, dtype=float)
    diffs: list[float] = []
    streak = 0
    converged = False

    def partial(values):
        return SolveReport(
            GridFn(nodes, np.nan_to_num(values, nan=0.0, posinf=0.0, neginf=0.0)),
            len(diffs),
            list(diffs),
            contraction_factor(diffs),
            float("nan"),
            False,
        )

    for _ in range(max_iter):
        try:
            new = np.asarray(operator(u), dtype=float)
        except EvaluationError as exc:
            if not diffs:
                raise
            # f was fine on earlier iterates, so the iterate ran out of its domain
            report = partial(u)
            report.warnings.append(str(exc))
            raise DivergenceError(f"iterate left the domain of the nonlinearity: {exc}", report) from exc
        if not np.all(np.isfinite(new)):
            report = partial(u)
            report.warnings.append("iterate overflowed")
            raise DivergenceError("fixed-point iterate became non-finite", report)
        d = norm(new - u)
        if diffs and d > diffs[-1]:
            streak += 1
        else:
            streak = 0
        diffs.append(d)
        u = new
        scale = max(1.0, norm(u)) if relative else 1.0
        if d <= tol * scale:
            converged = True
            break
        if growth_limit is not None and streak >= growth_limit:
            raise DivergenceError(
                f"step norm grew for {streak} consecutive iterations", partial(u)
            )

    after = np.asarray(operator(u), dtype=float)
    residual = norm(after - u) if np.all(np.isfinite(after)) else float("inf")
    return SolveReport(
        GridFn(nodes, u),
        len(diffs),
        diffs,
        contraction_factor(diffs),
        residual,
        converged,
    )


def checked(values, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if np.any(np.isnan(arr)):
        raise EvaluationError(f"{what} produced NaN")
    return arr


@dataclass
class VolterraProblem:
    """``u(t) = u0 + I^alpha[F(s, u(s))](t)`` on ``[0, T]``."""

    alpha: float
    u0: float
    F: Callable
    T: float
    grid: GridPolicy | None = None
    nodes: np.ndarray | None = None

    def __post_init__(self):
        self.alpha = check_order(self.alpha)
        if not self.T > 0.0:
            raise DomainError("horizon T must be positive")

    def grid_nodes(self) -> np.ndarray:
        if self.nodes is not None:
            return np.asarray(self.nodes, dtype=float)
        policy = self.grid or GridPolicy(1024, default_grading(self.alpha))
        return make_grid(self.T, policy)


def picard_solve(p: VolterraProblem, tol: float = 1e-10, max_iter: int = 200, initial=None, weight=None) -> SolveReport:
    t = p.grid_nodes()
    integ = RLIntegrator(t, p.alpha)

    def op(u):
        out = p.u0 + integ.apply(checked(np.broadcast_to(p.F(t, u), t.shape), "integrand F"))
        out[0] = p.u0
        return out

    u_init = np.full(t.shape, float(p.u0)) if initial is None else np.broadcast_to(initial, t.shape)
    return fixed_point(op, u_init, tol, max_iter, t, weight=weight)


def abel_second_kind(f: GridFn, k: Callable, alpha: float, tol: float = 1e-10, max_iter: int = 200) -> SolveReport:
    """Solve ``f(x) = int_0^x k(x, s) g(s) / (x - s)**alpha ds + g(x)`` for ``g``."""
    alpha = check_order(alpha)
    x = f.nodes
    raw = _backend.product_weights(x, 1.0 - alpha)
    with np.errstate(all="ignore"):
        kernel = np.broadcast_to(np.asarray(k(x[:, None], x[None, :]), dtype=float), raw.shape)
    lower = np.tri(x.size, dtype=bool)
    if not np.all(np.isfinite(kernel[lower])):
        raise EvaluationError("kernel k is not finite on the triangle 0 <= s <= x <= T")
    a = np.ascontiguousarray(np.where(lower, raw * np.where(lower, kernel, 0.0), 0.0))

    def op(g):
        return f.values - _backend.lower_matvec(a, g)

    return fixed_point(op, f.values.copy(), tol, max_iter, x)


def abel_first_kind_convolution(f: GridFn, alpha: float, slack: float = 1e-10) -> GridFn:
    """Invert ``f = I^(1-alpha) g``, i.e. ``g = D^(1-alpha) f``."""
    alpha = check_order(alpha)
    scale = max(1.0, float(np.max(np.abs(f.values))))
    if abs(f.values[0]) > slack * scale:
        raise ConsistencyError(f"f(0) = {f.values[0]!r} must vanish for a continuous solution")
    return rl_derivative(f, 1.0 - alpha)

