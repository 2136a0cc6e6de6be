"""Delta calculus and fractional operators on finitely represented time scales.

A time scale is stored as an ordered list of closed segments ``[a, b]``;
``a == b`` encodes an isolated point. Functions on a scale are sampled at
every isolated point plus a product-integration grid inside each
nondegenerate segment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, InputValidationError, PreconditionError
from .operators import GridPolicy, check_order, gamma, make_grid, panel_weights


def _slack(t: float) -> float:
    return 1e-12 * max(1.0, abs(t))


@dataclass(frozen=True)
class TimeScale:
    segments: tuple

    def __post_init__(self):
        segs = []
        for seg in self.segments:
            try:
                a, b = (float(x) for x in seg)
            except (TypeError, ValueError) as exc:
                raise InputValidationError(f"segment {seg!r} is not an [a, b] pair") from exc
            if not (math.isfinite(a) and math.isfinite(b)):
                raise InputValidationError("time scale endpoints must be finite")
            if a > b:
                raise InputValidationError(f"segment [{a}, {b}] has a > b")
            segs.append((a, b))
        if not segs:
            raise InputValidationError("a time scale needs at least one segment")
        for (_, b0), (a1, _) in zip(segs, segs[1:]):
            if not b0 < a1:
                raise InputValidationError("segments must be disjoint and strictly ordered")
        object.__setattr__(self, "segments", tuple(segs))

    @classmethod
    def interval(cls, a: float, b: float) -> TimeScale:
        return cls(((a, b),))

    @classmethod
    def points(cls, pts) -> TimeScale:
        return cls(tuple((p, p) for p in pts))

    @classmethod
    def from_json(cls, data) -> TimeScale:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(tuple(seg) for seg in data))

    def to_json(self) -> str:
        return json.dumps([list(seg) for seg in self.segments])

    @property
    def min(self) -> float:
        return self.segments[0][0]

    @property
    def max(self) -> float:
        return self.segments[-1][1]

    @property
    def is_discrete(self) -> bool:
        return all(a == b for a, b in self.segments)

    def locate(self, t: float) -> int:
        """Index of the segment containing ``t``."""
        for i, (a, b) in enumerate(self.segments):
            if a - _slack(a) <= t <= b + _slack(b):
                return i
        raise DomainError(f"{t!r} is not a point of the time scale")

    def __contains__(self, t) -> bool:
        try:
            self.locate(t)
        except DomainError:
            return False
        return True

    def sigma(self, t: float) -> float:
        i = self.locate(t)
        b = self.segments[i][1]
        if t < b - _slack(b) or i == len(self.segments) - 1:
            return float(t)
        return self.segments[i + 1][0]

    def mu(self, t: float) -> float:
        return self.sigma(t) - t

    def grid(self, policy: GridPolicy) -> np.ndarray:
        """Isolated points plus ``policy`` nodes inside each nondegenerate segment."""
        parts = []
        for a, b in self.segments:
            if a == b:
                parts.append(np.array([a]))
            else:
                x = a + make_grid(b - a, policy)
                x[-1] = b
                parts.append(x)
        return np.concatenate(parts)


def sigma(ts: TimeScale, t: float) -> float:
    """Forward jump operator."""
    return ts.sigma(t)


@dataclass(frozen=True)
class TsGridFn:
    ts: TimeScale
    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.nodes, dtype=float)
        v = np.array(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 1:
            raise InputValidationError("nodes and values must be equal-length 1-d arrays")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise InputValidationError("nodes and values must be finite")
        if np.any(np.diff(t) <= 0.0):
            raise InputValidationError("nodes must be strictly increasing")
        seg = np.array([self.ts.locate(x) for x in t])
        for i, (a, b) in enumerate(self.ts.segments):
            mine = t[seg == i]
            if mine.size == 0 or mine[0] != a or mine[-1] != b:
                raise InputValidationError(f"segment {i} endpoints must be sample nodes")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "nodes", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_segment", seg)

    @classmethod
    def sample(cls, ts: TimeScale, func, policy: GridPolicy = GridPolicy(64)) -> TsGridFn:
        t = ts.grid(policy)
        return cls(ts, t, np.broadcast_to(np.asarray(func(t), dtype=float), t.shape))

    def with_values(self, values) -> TsGridFn:
        return TsGridFn(self.ts, self.nodes, values)

    @cached_property
    def gap(self) -> np.ndarray:
        """``gap[k]`` is True when ``(t_k, t_{k+1})`` lies outside the scale."""
        return self._segment[1:] != self._segment[:-1]

    def index(self, t: float) -> int:
        k = int(np.searchsorted(self.nodes, t - _slack(t)))
        if k < self.nodes.size and abs(self.nodes[k] - t) <= _slack(t):
            return k
        if t in self.ts:
            raise DomainError(f"{t!r} lies in the time scale but is not a sample node")
        raise DomainError(f"{t!r} is not a point of the time scale")

    def runs(self, lo: int, hi: int):
        """Yield ``(j0, j1, is_gap)`` blocks covering panels ``lo..hi-1``."""
        k = lo
        while k < hi:
            if self.gap[k]:
                yield k, k + 1, True
                k += 1
            else:
                j = k
                while j < hi and not self.gap[j]:
                    j += 1
                yield k, j, False
                k = j


def _endpoints(g: TsGridFn, a: float, b: float) -> tuple[int, int]:
    ia, ib = g.index(a), g.index(b)
    if ia > ib:
        raise DomainError("integration limits must satisfy a <= b")
    return ia, ib


def delta_integral(g: TsGridFn, a: float, b: float) -> float:
    """Delta integral over ``[a, b)``: trapezoid on segments, ``g * mu`` at gaps."""
    ia, ib = _endpoints(g, a, b)
    t, v = g.nodes, g.values
    acc = 0.0
    for k in range(ia, ib):
        if g.gap[k]:
            acc += v[k] * (t[k + 1] - t[k])
        else:
            acc += 0.5 * (v[k] + v[k + 1]) * (t[k + 1] - t[k])
    return acc


def ts_frac_integral(g: TsGridFn, alpha: float, start: float, t: float) -> float:
    """Fractional delta integral of order ``alpha`` from ``start`` to ``t``.

    Continuous stretches are product-integrated against the exact kernel
    moments; a right-scattered point ``s`` contributes
    ``(t - s)**(alpha - 1) g(s) mu(s) / Gamma(alpha)``.
    """
    alpha = check_order(alpha)
    ia, it = _endpoints(g, start, t)
    x, v = g.nodes, g.values
    tt = x[it]
    gam = gamma(alpha)
    acc = 0.0
    for j0, j1, is_gap in g.runs(ia, it):
        if is_gap:
            mu = x[j1] - x[j0]
            acc += (tt - x[j0]) ** (alpha - 1.0) * v[j0] * mu / gam
        else:
            w = panel_weights(x[j0 : j1 + 1], tt, alpha)
            acc += float(np.dot(w, v[j0 : j1 + 1])) / gam
    return acc


def ts_integral_matrix(g: TsGridFn, alpha: float) -> np.ndarray:
    """Matrix ``M`` with ``M @ values`` = ``ts_frac_integral`` at every node (start = first node)."""
    alpha = check_order(alpha)
    x = g.nodes
    n = x.size
    gam = gamma(alpha)
    m = np.zeros((n, n))
    for i in range(1, n):
        for j0, j1, is_gap in g.runs(0, i):
            if is_gap:
                m[i, j0] += (x[i] - x[j0]) ** (alpha - 1.0) * (x[j1] - x[j0]) / gam
            else:
                m[i, j0 : j1 + 1] += panel_weights(x[j0 : j1 + 1], x[i], alpha) / gam
    return m


def delta_weights(g: TsGridFn) -> np.ndarray:
    """Weights ``w`` with ``w @ values`` equal to the delta integral over the whole sample."""
    x = g.nodes
    w = np.zeros(x.size)
    dx = np.diff(x)
    w[:-1] += np.where(g.gap, dx, 0.5 * dx)
    w[1:] += np.where(g.gap, 0.0, 0.5 * dx)
    return w


def _stencil(x, f, pos: int) -> float:
    # second-order nonuniform three-point formula; pos picks the node in the triple
    return float(np.gradient(np.asarray(f, dtype=float), np.asarray(x, dtype=float), edge_order=2)[pos])


def ts_frac_derivative(g: TsGridFn, alpha: float, start: float, t: float) -> float:
    """Delta derivative of ``ts_frac_integral(g, 1 - alpha, start, .)`` at ``t``."""
    alpha = check_order(alpha)
    ia = g.index(start)
    k = g.index(t)
    if k < ia:
        raise DomainError("t must not precede start")
    x = g.nodes

    def F(j):
        return ts_frac_integral(g, 1.0 - alpha, start, x[j]) if j > ia else 0.0

    n = x.size
    if k < n - 1 and g.gap[k]:
        return (F(k + 1) - F(k)) / (x[k + 1] - x[k])
    left = k - 1 >= ia and not g.gap[k - 1]
    right = k + 1 < n and not g.gap[k]
    if left and right:
        idx = (k - 1, k, k + 1)
        pos = 1
    elif right and k + 2 < n and not g.gap[k + 1]:
        idx = (k, k + 1, k + 2)
        pos = 0
    elif left and k - 2 >= ia and not g.gap[k - 2]:
        idx = (k - 2, k - 1, k)
        pos = 2
    else:
        raise DomainError(f"no three-point stencil available at t={t!r}")
    return _stencil([x[j] for j in idx], [F(j) for j in idx], pos)


def extension_bound_check(g: TsGridFn, a: float, b: float):
    """Compare the delta integral with the Lebesgue integral of the step extension.

    Returns ``(lhs, rhs, holds)``. The extension equals ``g`` on the scale and
    is frozen at ``g(t)`` across every gap ``(t, sigma(t))``.
    """
    ia, ib = _endpoints(g, a, b)
    v = g.values[ia : ib + 1]
    if np.any(np.diff(v) < -_slack(float(np.max(np.abs(v))))):
        raise PreconditionError("extension bound requires g increasing on [a, b]")
    lhs = delta_integral(g, a, b)
    x = g.nodes
    rhs = 0.0
    for k in range(ia, ib):
        width = x[k + 1] - x[k]
        if g.gap[k]:
            rhs += g.values[k] * width
        else:
            # the extension is the sampled function itself; integrate its interpolant
            rhs += width * (g.values[k] + g.values[k + 1]) / 2.0
    holds = lhs <= rhs + _slack(rhs) * max(1, ib - ia)
    return lhs, rhs, bool(holds)
