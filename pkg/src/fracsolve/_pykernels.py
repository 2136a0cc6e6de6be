"""Pure numpy implementation of the hot kernels.

Mirrors ``_kernels.pyx`` signature for signature. Used when the compiled
extension is unavailable or ``FRACSOLVE_PURE_PYTHON`` is set.
"""

import numpy as np


SERIES_RATIO = 0.125
SERIES_TERMS = 18


def series_coefficients(alpha, terms=SERIES_TERMS):
    """Taylor coefficients of ``(1 - y)**(alpha - 1)``, all nonnegative."""
    c = np.empty(terms)
    c[0] = 1.0
    for k in range(terms - 1):
        c[k + 1] = c[k] * (k + 1.0 - alpha) / (k + 1.0)
    return c


def _horner(coef, x):
    """``sum_k coef[k] x**k`` evaluated in place (one temporary)."""
    acc = np.full_like(x, coef[-1])
    for ck in coef[-2::-1]:
        acc *= x
        acc += ck
    return acc


def panel_pair(a, b, h, pa, pb, qa, qb, alpha):
    """Left/right weights of panels ``[t - b, t - a]`` with ``h = b - a``.

    ``pa = a**alpha``, ``qa = a**(alpha + 1)`` and likewise for ``b``. Short
    panels far from the target (``h / b`` small) switch to a series in
    ``h / b`` because the closed-form moment differences cancel there.
    """
    a, b, h, pa, pb, qa, qb = np.broadcast_arrays(a, b, h, pa, pb, qa, qb)
    wl = np.zeros(b.shape)
    wr = np.zeros(b.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = h / b
    small = np.isfinite(r) & (r < SERIES_RATIO)
    big = ~small
    if np.any(big):
        ab, bb, hb = a[big], b[big], h[big]
        with np.errstate(divide="ignore", invalid="ignore"):
            m0 = (pb[big] - pa[big]) / alpha
            m1 = (qb[big] - qa[big]) / (alpha + 1.0)
            wl[big] = (m1 - ab * m0) / hb
            wr[big] = (bb * m0 - m1) / hb
    if np.any(small):
        c = series_coefficients(alpha)
        k = np.arange(SERIES_TERMS, dtype=float)
        rs = r[small]
        scale = qb[small] / h[small] * rs * rs
        wl[small] = scale * _horner(c / ((k + 1.0) * (k + 2.0)), rs)
        wr[small] = scale * _horner(c / (k + 2.0), rs)
    return wl, wr


ROW_BLOCK = 128


def product_weights(nodes, alpha, row_start=0):
    """Product-integration weights for the kernel ``(t_i - s)**(alpha - 1)``.

    Row ``r`` holds the weights for target node ``i = row_start + r`` so that
    ``sum_j W[r, j] * g[j]`` integrates the piecewise-linear interpolant of
    ``g`` against the kernel over ``[t_0, t_i]``. The ``1/Gamma(alpha)``
    factor is not included.
    """
    t = np.ascontiguousarray(nodes, dtype=float)
    n1 = t.shape[0]
    w = np.zeros((n1 - row_start, n1))
    dt = np.diff(t)
    # blocks of rows only touch columns up to their last target node
    for r0 in range(0, n1 - row_start, ROW_BLOCK):
        r1 = min(r0 + ROW_BLOCK, n1 - row_start)
        cols = row_start + r1
        d = t[row_start + r0 : row_start + r1, None] - t[None, :cols]
        np.maximum(d, 0.0, out=d)
        p = d**alpha
        q = d * p
        a, b = d[:, 1:], d[:, :-1]
        wl, wr = panel_pair(a, b, dt[: cols - 1], p[:, 1:], p[:, :-1], q[:, 1:], q[:, :-1], alpha)
        # panels at or beyond the target carry b == 0 and contribute nothing
        dead = b <= 0.0
        wl[dead] = 0.0
        wr[dead] = 0.0
        w[r0:r1, : cols - 1] += wl
        w[r0:r1, 1:cols] += wr
    return w


def lower_matvec(weights, values, row_start=0):
    """``out[r] = sum_{j <= row_start + r} weights[r, j] * values[j]``."""
    w = np.asarray(weights, dtype=float)
    g = np.asarray(values, dtype=float)
    # weights above the diagonal are exactly zero, so a full row sum is safe;
    # multiply-then-sum keeps the reduction single threaded and deterministic
    return (w * g[None, :]).sum(axis=1)
