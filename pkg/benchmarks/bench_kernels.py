"""Compare the numba and numpy/scipy backends of the two hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 100000]

Numba timings exclude the first (compiling) call, which is reported separately.
"""

import argparse
import time

import numpy as np

from hypckn._accel import HAVE_NUMBA
from hypckn.geometry import Params
from hypckn.kernels import integrate_radial, scan_factors
from hypckn.solver import ShootOptions, shoot_dirichlet


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=100_000, help="radii per scan")
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba not importable; nothing to compare")
        return 1

    r = np.linspace(1e-4, 0.999, args.n)
    scan = {b: (lambda b=b: scan_factors(r, 3, 1.0, 0.5, 7.0, use_numba=b)) for b in (True, False)}
    ta, tb = scan[True](), scan[False]()
    gap = max(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(y))) for x, y in zip(ta, tb))

    t_out = np.linspace(0.01, 3.0, 512)
    ode = {b: (lambda b=b: integrate_radial(1e-6, 4.96, 0.0, 3.0, 3, 0.0, 0.0, 0.0, 4.0,
                                            t_out=t_out, stop_at_zero=True, use_numba=b))
           for b in (True, False)}

    P = Params(N=3, alpha=0.0, beta=0.0, lam=0.0, q=4.0)
    shoot = {b: (lambda b=b: shoot_dirichlet(P, 3.0, ShootOptions(use_numba=b))) for b in (True, False)}

    rows = []
    for name, pair, rep in (("scan_factors", scan, args.repeat), ("integrate_radial", ode, args.repeat),
                            ("shoot_dirichlet", shoot, max(1, args.repeat // 5))):
        t0 = time.perf_counter()
        pair[True]()
        first = time.perf_counter() - t0
        tn = best_of(pair[True], rep)
        tp = best_of(pair[False], rep)
        rows.append((name, first, tn, tp))

    print(f"scan backends max relative gap: {gap:.2e}")
    print(f"{'kernel':<18}{'numba 1st':>12}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, first, tn, tp in rows:
        print(f"{name:<18}{first:>12.4f}{tn:>12.4f}{tp:>12.4f}{tp / tn:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
