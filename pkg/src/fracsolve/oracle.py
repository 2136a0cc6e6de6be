"""Reference values computed along routes independent of the solvers.

Nothing here imports the product-integration machinery; tests and the
``verify`` subcommand compare library output against these.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, DomainError


class OracleMethod(enum.Enum):
    POWER_LAW = "power-law"
    ML_SERIES = "ml-series"
    BRUTE_QUADRATURE = "brute-quadrature"
    DISCRETE_SUM = "discrete-sum"


@dataclass(frozen=True)
class OracleResult:
    value: float
    error: float
    method: OracleMethod

    def __post_init__(self):
        if not (self.error >= 0.0 and math.isfinite(self.error)):
            raise ValueError(f"error estimate must be finite and nonnegative, got {self.error!r}")


def power_law_rl_integral(mu: float, alpha: float, t: float) -> OracleResult:
    """``I^alpha t^mu = Gamma(mu+1)/Gamma(mu+alpha+1) t^(mu+alpha)``."""
    if t < 0.0:
        raise DomainError("power-law identity needs t >= 0")
    value = math.gamma(mu + 1.0) / math.gamma(mu + alpha + 1.0) * t ** (mu + alpha)
    return OracleResult(value, 0.0, OracleMethod.POWER_LAW)


def mittag_leffler(alpha: float, z: float, terms: int = 60, beta: float = 1.0) -> OracleResult:
    """Truncated series ``sum_{k<terms} z^k / Gamma(alpha k + beta)``.

    The error estimate is the magnitude of the first omitted term; a tail that
    is still growing at the cutoff raises :class:`AccuracyError`.
    """
    if terms < 10:
        raise DomainError("at least 10 series terms are required")
    total = 0.0
    prev = None
    for k in range(terms):
        term = z**k / math.gamma(alpha * k + beta)
        total += term
        prev = term
    omitted = z**terms / math.gamma(alpha * terms + beta)
    if abs(omitted) > abs(prev) and omitted != 0.0:
        raise AccuracyError(f"series tail still growing after {terms} terms at z={z!r}")
    return OracleResult(total, abs(omitted), OracleMethod.ML_SERIES)


def _midpoint(f, a, b, panels, chunk=1 << 18):
    h = (b - a) / panels
    total = 0.0
    for start in range(0, panels, chunk):
        k = np.arange(start, min(start + chunk, panels), dtype=float)
        total += float(np.sum(f(a + (k + 0.5) * h)))
    return total * h


def brute_quadrature(f, a: float, b: float, panels: int = 10**6) -> OracleResult:
    """Composite midpoint rule; never samples the endpoints.

    ``f`` must accept a numpy array. The error estimate compares against the
    rule at half the panel count.
    """
    if panels < 10**4:
        raise DomainError("brute quadrature needs at least 10**4 panels")
    fine = _midpoint(f, a, b, panels)
    coarse = _midpoint(f, a, b, panels // 2)
    return OracleResult(fine, abs(fine - coarse), OracleMethod.BRUTE_QUADRATURE)


def discrete_ts_sum(ts, g, alpha: float, t: float) -> OracleResult:
    """Fractional integral on a purely discrete scale as an explicit sum.

    ``ts`` is a :class:`~fracsolve.timescale.TimeScale` (only its
    ``segments`` are read) or a sorted sequence of points. ``g`` maps each
    point to its value (callable or sequence aligned with the points).
    """
    segments = getattr(ts, "segments", None)
    if segments is None:
        segments = [(float(p), float(p)) for p in ts]
    points = []
    for a, b in segments:
        if a < b and a < t:
            raise DomainError("discrete sum needs isolated points below t")
        points.append(a)
    values = [g(s) for s in points] if callable(g) else list(g)
    acc = 0.0
    for k, s in enumerate(points[:-1]):
        if s >= t:
            break
        mu = points[k + 1] - s
        acc += (t - s) ** (alpha - 1.0) * values[k] * mu / math.gamma(alpha)
    return OracleResult(acc, 0.0, OracleMethod.DISCRETE_SUM)
