"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

import argparse
import json
import timeit

import numpy as np

from ahlab import _pykernels
from ahlab.manifolds import make_almost_kahler_torus

try:
    from ahlab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(points, lattice):
    m = make_almost_kahler_torus(6, 1, 0.1)
    g, _ = m.fields(m.sample(points, 0), 2, 0)
    ginv = np.ascontiguousarray(np.linalg.inv(g.val))
    dg, d2g = np.ascontiguousarray(g.d1), np.ascontiguousarray(g.d2)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((lattice,) * 6)
    N = u.size
    a = rng.standard_normal((N, 6, 6))
    du = rng.standard_normal((6, N))
    return {
        "christoffel_riemann": lambda k: k.christoffel_riemann(ginv, dg, d2g),
        "fd4_axis": lambda k: k.fd4_axis(u, 3, 0.1),
        "metric_flux": lambda k: k.metric_flux(a, du),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=4096)
    parser.add_argument("--lattice", type=int, default=8)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="write the timings to this file")
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled extension not built; timing the fallback only")
    rows = []
    for name, fn in cases(args.points, args.lattice).items():
        row = {"kernel": name}
        for label, mod in (("python", _pykernels), ("compiled", _ckernels)):
            if mod is None:
                continue
            fn(mod)  # warm up
            row[label] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        if "compiled" in row:
            row["speedup"] = row["python"] / row["compiled"]
        rows.append(row)
        cols = "  ".join(f"{k}={v:.4f}" for k, v in row.items() if k != "kernel")
        print(f"{name:22s} {cols}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
