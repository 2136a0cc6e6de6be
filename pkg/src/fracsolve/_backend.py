"""Select the compiled kernels when available, else the numpy fallback.

Set ``FRACSOLVE_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("FRACSOLVE_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def product_weights(nodes, alpha, row_start=0):
    return _impl.product_weights(np.ascontiguousarray(nodes, dtype=float), float(alpha), int(row_start))


def lower_matvec(weights, values, row_start=0):
    return _impl.lower_matvec(
        np.ascontiguousarray(weights, dtype=float),
        np.ascontiguousarray(values, dtype=float),
        int(row_start),
    )
