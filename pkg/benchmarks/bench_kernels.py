"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import timeit

import numpy as np

from vbrelax import _fallback

try:
    from vbrelax import _kernels
except ImportError:
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    tau = np.geomspace(0.1, 140, 64)
    w = np.full(tau.size, 1 / 0.08**2)
    y = np.exp(-105.3e-3 * tau) + 0.08 * rng.standard_normal(tau.size)
    return {
        "rk4_populations (20k steps)": lambda m: m.rk4_populations(0.0, 1.0, 0.0, 35.1, 99.8, 50.0, 20_000),
        "exp_chi2 (64 pts)": lambda m: m.exp_chi2(tau, y, w, 1.0, math.log(105.3), 0.0),
        "exp_normal_equations (64 pts)": lambda m: m.exp_normal_equations(tau, y, w, 1.0, math.log(105.3), 0.0, True),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = {"python": _fallback}
    if _kernels is not None:
        impls["cython"] = _kernels
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':32s}" + "".join(f"{k:>14s}" for k in impls) + ("     speedup" if len(impls) == 2 else ""))
    for name, fn in cases().items():
        times = {}
        for label, mod in impls.items():
            number = 3 if label == "python" and name.startswith("rk4") else 200
            best = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat))
            times[label] = best / number
        row = f"{name:32s}" + "".join(f"{t * 1e6:12.1f}us" for t in times.values())
        if len(times) == 2:
            row += f"{times['python'] / times['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
