"""Compare the compiled and pure-Python summation kernels.

    python benchmarks/bench_kernels.py [--sizes 1000 100000 1000000] [--repeat 5]

Reports the best wall time per call for each kernel and backend, the
speed-up, and whether both backends return bit-identical results. A final
row times a full Epps-curve measurement in each backend (run in a
subprocess, since the backend is fixed at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from eppsdecomp import _pykernels

try:
    from eppsdecomp import _ckernels
except ImportError:
    _ckernels = None

_CURVE_SNIPPET = """
import time
from eppsdecomp import correlator, simulator
a, b = simulator.simulate_pair(simulator.SimConfig(23_400 * 20, 1 / 60, seed=1))
t = time.perf_counter()
correlator.epps_curve(a, b, correlator.parse_grid("60:9000:60"))
print(time.perf_counter() - t)
"""


def _best(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def _curve_time(pure: bool) -> float:
    env = dict(os.environ)
    if pure:
        env["EPPSDECOMP_PURE_PYTHON"] = "1"
    else:
        env.pop("EPPSDECOMP_PURE_PYTHON", None)
    out = subprocess.run([sys.executable, "-c", _CURVE_SNIPPET], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[1_000, 100_000, 1_000_000])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-curve", action="store_true")
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; only the Python backend is available")
        return 1

    rng = np.random.default_rng(0)
    print(f"{'kernel':<13}{'n':>10}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}  identical")
    for n in args.sizes:
        a, b = rng.normal(size=n), rng.normal(size=n)
        for name, call in (
            ("exact_sum", lambda m: m.exact_sum(a)),
            ("exact_dot", lambda m: m.exact_dot(a, b)),
            ("pair_moments", lambda m: tuple(m.pair_moments(a, b))),
        ):
            tp = _best(lambda: call(_pykernels), args.repeat)
            tc = _best(lambda: call(_ckernels), args.repeat)
            same = call(_pykernels) == call(_ckernels)
            print(f"{name:<13}{n:>10}{tp * 1e3:>14.3f}{tc * 1e3:>14.3f}{tp / tc:>9.1f}x  {same}")

    if not args.skip_curve:
        tp, tc = _curve_time(True), _curve_time(False)
        print(f"\nepps_curve, 20 simulated days, 150 scales: python {tp:.2f} s, cython {tc:.2f} s ({tp / tc:.1f}x)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
