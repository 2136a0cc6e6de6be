"""Riemann-Liouville and Caputo operators on tabulated functions.

All operators use product integration: on every panel the regular factor is
replaced by its linear interpolant and the weakly singular weight
``(t - s)**(alpha - 1)`` is integrated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend, _pykernels
from .errors import DomainError, InputValidationError

gamma = math.gamma


def check_order(alpha: float, upper: float = 1.0) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < upper) or not math.isfinite(alpha):
        raise DomainError(f"fractional order must lie in (0, {upper:g}), got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class GridFn:
    """A real function tabulated on strictly increasing nodes."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.nodes, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or v.ndim != 1:
            raise InputValidationError("nodes and values must be one-dimensional")
        if t.shape != v.shape:
            raise InputValidationError(f"nodes ({t.size}) and values ({v.size}) differ in length")
        if t.size < 2:
            raise InputValidationError("a grid function needs at least 2 nodes")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise InputValidationError("nodes and values must be finite")
        if np.any(np.diff(t) <= 0.0):
            raise InputValidationError("nodes must be strictly increasing")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "nodes", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, nodes, func) -> GridFn:
        t = np.asarray(nodes, dtype=float)
        return cls(t, np.broadcast_to(np.asarray(func(t), dtype=float), t.shape))

    def __len__(self) -> int:
        return self.nodes.size

    def with_values(self, values) -> GridFn:
        return GridFn(self.nodes, values)


@dataclass(frozen=True)
class GridPolicy:
    """``n`` panels with nodes ``T * (j / n) ** gamma``."""

    n: int = 1024
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"grid needs n >= 2 panels, got {self.n!r}")
        if not self.gamma >= 1.0:
            raise DomainError(f"grading exponent must be >= 1, got {self.gamma!r}")


def default_grading(order: float) -> float:
    """Grading exponent that resolves a ``t**(order - 1)`` boundary layer."""
    return max(1.0, 1.0 / order)


def make_grid(T: float, policy: GridPolicy) -> np.ndarray:
    if not (T > 0.0) or not math.isfinite(T):
        raise DomainError(f"horizon must be positive and finite, got {T!r}")
    if policy.n < 2:
        raise DomainError("grid needs n >= 2 panels")
    j = np.arange(policy.n + 1, dtype=float)
    t = T * (j / policy.n) ** policy.gamma
    t[-1] = T
    if np.any(np.diff(t) <= 0.0):
        raise DomainError("grading collapsed adjacent nodes; lower gamma or n")
    return t


def panel_weights(nodes, t: float, alpha: float) -> np.ndarray:
    """Product-integration weights of ``nodes`` for one target ``t >= nodes[-1]``.

    Returned weights integrate the linear interpolant of a function on
    ``[nodes[0], nodes[-1]]`` against ``(t - s)**(alpha - 1)``; no Gamma
    factor is applied.
    """
    x = np.asarray(nodes, dtype=float)
    w = np.zeros(x.size)
    if x.size < 2:
        return w
    d = np.maximum(t - x, 0.0)
    p = d**alpha
    q = d * p
    wl, wr = _pykernels.panel_pair(d[1:], d[:-1], np.diff(x), p[1:], p[:-1], q[1:], q[:-1], alpha)
    w[:-1] += wl
    w[1:] += wr
    return w


@dataclass
class RLIntegrator:
    """Discrete ``I^alpha`` on a fixed node set.

    The weight matrix is built once; :meth:`apply` is a lower-triangular
    mat-vec. ``row_start`` restricts the output to nodes ``row_start..n``,
    which is what a continuation step needs.
    """

    nodes: np.ndarray
    alpha: float
    row_start: int = 0
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.alpha = check_order(self.alpha)
        w = _backend.product_weights(self.nodes, self.alpha, self.row_start)
        self.weights = w / gamma(self.alpha)

    def apply(self, values) -> np.ndarray:
        return _backend.lower_matvec(self.weights, values, self.row_start)

    @property
    def diagonal(self) -> np.ndarray:
        rows = np.arange(self.weights.shape[0])
        return self.weights[rows, rows + self.row_start]


def rl_integral(g: GridFn, alpha: float) -> GridFn:
    """Riemann-Liouville integral of order ``alpha`` sampled on ``g.nodes``."""
    if not isinstance(g, GridFn):
        raise InputValidationError("rl_integral expects a GridFn")
    out = RLIntegrator(g.nodes, alpha).apply(g.values)
    out[0] = 0.0
    return g.with_values(out)


def derivative(g: GridFn) -> GridFn:
    # second-order three-point stencil on nonuniform nodes, one-sided at the ends
    return g.with_values(np.gradient(g.values, g.nodes, edge_order=2))


def rgamma(x: float) -> float:
    """``1 / Gamma(x)``, zero at the poles."""
    if x <= 0.0 and x == math.floor(x):
        return 0.0
    return 1.0 / gamma(x)


def leading_power(g: GridFn) -> tuple[float, float] | None:
    """Fit ``g - g(t_0) ~ c (t - t_0)**beta`` through the first two interior nodes.

    Returns ``(c, beta)`` or None when the data do not look like a power law
    with ``-1 < beta <= 2``. Negative ``beta`` is an integrable singularity at
    ``t_0``; such data carry the placeholder ``g(t_0) = 0``.
    """
    tau = g.nodes[1:3] - g.nodes[0]
    d = g.values[1:3] - g.values[0]
    if not (d[0] * d[1] > 0.0):
        return None
    beta = math.log(d[1] / d[0]) / math.log(tau[1] / tau[0])
    if not (-1.0 < beta <= 2.0) or beta == 0.0:
        return None
    return float(d[0] / tau[0] ** beta), float(beta)


def rl_derivative(g: GridFn, alpha: float) -> GridFn:
    """Riemann-Liouville derivative: differentiate ``I^(1-alpha) g`` numerically.

    The jump ``g(t_0)`` and a fitted leading power ``c (t - t_0)**beta`` are
    differentiated in closed form; only the smoother remainder goes through
    the product rule and the three-point stencil. Without this, data such as
    ``I^alpha 1 ~ t**alpha`` lose O(1) accuracy on the first panels. The value
    at ``t_0`` is the plain one-sided stencil (the exact value may be infinite).
    """
    alpha = check_order(alpha)
    if len(g) < 3:
        raise InputValidationError("numerical differentiation needs at least 3 nodes")
    integ = RLIntegrator(g.nodes, 1.0 - alpha)

    def d_of_i(values):
        out = integ.apply(values)
        out[0] = 0.0
        return np.gradient(out, g.nodes, edge_order=2)

    plain = d_of_i(g.values)
    tau = g.nodes[1:] - g.nodes[0]
    g0 = float(g.values[0])
    rest = g.values - g0
    exact = g0 * tau**-alpha / gamma(1.0 - alpha)
    fit = leading_power(g)
    if fit is not None:
        c, beta = fit
        rest = rest.copy()
        rest[1:] -= c * tau**beta
        exact = exact + c * gamma(beta + 1.0) * rgamma(beta + 1.0 - alpha) * tau ** (beta - alpha)
    out = np.empty_like(plain)
    out[0] = plain[0]
    out[1:] = exact + d_of_i(rest)[1:]
    return g.with_values(out)


def caputo_derivative(g: GridFn, alpha: float) -> GridFn:
    """Caputo derivative, i.e. the RL derivative of ``g - g(t_0)``."""
    return rl_derivative(g.with_values(g.values - g.values[0]), alpha)
