"""Compare the compiled and numpy product-integration kernels.

    python3 benchmarks/bench_kernels.py [--sizes 256 1024 2048] [--repeat 3]

Reports the best wall time of the weight build and of one mat-vec per
backend, plus the largest relative disagreement between the two.
"""

import argparse
import time

import numpy as np

from fracsolve import _pykernels
from fracsolve.operators import GridPolicy, make_grid

try:
    from fracsolve import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 2048])
    parser.add_argument("--alpha", type=float, default=0.3)
    parser.add_argument("--gamma", type=float, default=2.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = {"numpy": _pykernels}
    if _kernels is not None:
        backends["cython"] = _kernels
    else:
        print("compiled extension not available; timing the numpy fallback only")

    print(f"{'n':>6} {'backend':>8} {'weights [s]':>12} {'matvec [ms]':>12}")
    for n in args.sizes:
        t = make_grid(1.0, GridPolicy(n, args.gamma))
        g = np.cos(t)
        results = {}
        for name, mod in backends.items():
            tw, w = best_of(lambda: mod.product_weights(t, args.alpha, 0), args.repeat)
            tm, y = best_of(lambda: mod.lower_matvec(w, g, 0), max(args.repeat, 5))
            results[name] = (w, y)
            print(f"{n:>6} {name:>8} {tw:>12.4f} {tm * 1e3:>12.3f}")
        if len(results) == 2:
            (w0, y0), (w1, y1) = results.values()
            dw = np.max(np.abs(w0 - w1) / np.maximum(np.abs(w1), 1e-300))
            dy = np.max(np.abs(y0 - y1) / np.maximum(np.abs(y1), 1e-300))
            print(f"{'':>6} max rel disagreement: weights {dw:.1e}, matvec {dy:.1e}")


if __name__ == "__main__":
    main()
