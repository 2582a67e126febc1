"""Time the numba kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

The first numba call of each kernel includes JIT compilation (or a cache load)
and is reported separately. Outputs of the two backends are compared on every
case. Orbits of the hyperbolic map separate at rate lambda^n from rounding
differences, so torus orbits are compared on the circle and Lyapunov sums as
the mean exponent over all orbits.
"""
import argparse
import json
import time

import numpy as np

from abctorus import kernels
from abctorus.torus_maps import cat_shear, fiber_map


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rng):
    F, S = cat_shear(0.05), fiber_map(0.2, 0.1)
    X = rng.random((20000, 2))
    V = rng.random((256, 256, 2))
    return {
        "apply_jac 2e4 pts": lambda b: kernels.apply_jac(F.program, X, b)[0],
        "orbit_displacements 2e3 x 1e3": lambda b: kernels.orbit_displacements(S.program, X[:2000], [1000], b)[0],
        "torus_orbit 2e3 x 20": lambda b: kernels.torus_orbit(F.program, X[:2000], 20, b)[0],
        "lyapunov 64 x 2000": lambda b: kernels.lyapunov(F.program, X[:64], [1.0, 0.4], 50, 2000, b)[0].mean() / 2000,
        "bilinear 256^2 grid, 2e4 pts": lambda b: kernels.bilinear(V, X, b),
        "circle_orbit 64 x 1e4": lambda b: kernels.circle_orbit(0.4, [1.0], [0.05], [0.0], X[:64, 0], 10000, b)[0],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write the table as JSON")
    args = ap.parse_args(argv)
    if kernels.numba_impl is None:
        raise SystemExit("numba backend unavailable (ABC_DISABLE_NUMBA=1 or numba missing)")
    rows = []
    print(f"{'kernel':34s} {'numpy s':>10s} {'numba s':>10s} {'jit s':>8s} {'speedup':>8s} {'max diff':>9s}")
    for name, fn in cases(np.random.default_rng(0)).items():
        t0 = time.perf_counter()
        fn("numba")
        first = time.perf_counter() - t0
        t_nb, y_nb = best_of(lambda: fn("numba"), args.repeat)
        t_np, y_np = best_of(lambda: fn("numpy"), args.repeat)
        d = np.asarray(y_nb) - np.asarray(y_np)
        if name.startswith("torus_orbit"):
            d = np.mod(d + 0.5, 1.0) - 0.5
        diff = float(np.max(np.abs(d)))
        rows.append({"kernel": name, "numpy_s": t_np, "numba_s": t_nb, "first_call_s": first,
                     "speedup": t_np / t_nb, "max_abs_diff": diff})
        print(f"{name:34s} {t_np:10.4f} {t_nb:10.4f} {first:8.2f} {t_np / t_nb:8.1f} {diff:9.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
