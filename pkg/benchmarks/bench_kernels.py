"""Compare the compiled and pure-Python quadrature kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--sizes 30,100,1000,10000]

Each row times a full table build (ranks 1..min(N, 30)) and checks that both
kernels return the same values.
"""

import argparse
import time

from sric import _kernels_py
from sric.order_stats import DEFAULT_TOL, MAX_PANELS, _df_constants
from sric.special_functions import log_rank_coefficient

try:
    from sric import _kernels
except ImportError:
    _kernels = None


def table(kernel, N, r_max, df=1, tol=DEFAULT_TOL):
    lognorm, lg_s, lg_s1 = _df_constants(df)
    out = []
    for r in range(1, r_max + 1):
        v, _, _, _ = kernel.expected_order_stat(N, r, df, log_rank_coefficient(N, r), lognorm, lg_s, lg_s1, tol, MAX_PANELS, 0.0)
        out.append(v)
    return out


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sizes", default="10,30,100,1000,10000")
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernel not built; only the Python kernel is available")
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'N':>7} {'ranks':>5} {'python s':>10} {'cython s':>10} {'speedup':>8}  identical")
    for N in sizes:
        r_max = min(N, 30)
        t_py, v_py = best_of(lambda: table(_kernels_py, N, r_max), args.repeat)
        if _kernels is None:
            print(f"{N:>7} {r_max:>5} {t_py:>10.4f} {'-':>10} {'-':>8}  -")
            continue
        t_c, v_c = best_of(lambda: table(_kernels, N, r_max), args.repeat)
        print(f"{N:>7} {r_max:>5} {t_py:>10.4f} {t_c:>10.4f} {t_py / t_c:>7.1f}x  {v_py == v_c}")


if __name__ == "__main__":
    main()
