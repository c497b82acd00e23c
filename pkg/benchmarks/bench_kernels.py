"""Time the compiled and pure-Python spectral-moment kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from qtoken import kernels
from qtoken.scenario import Scenario
from qtoken.spectra import spectral_moments


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    sc = Scenario()
    p, s = sc.cavity_params(), sc.spectrum()
    ref = spectral_moments(p, s, backend="python").as_array()
    print(f"active backend: {kernels.BACKEND}")

    timings = {}
    for name, backend in (("python", "python"), ("default", None)):
        t = timeit.Timer(lambda: spectral_moments(p, s, backend=backend))
        best = min(t.repeat(repeat=3, number=args.repeat)) / args.repeat
        timings[name] = best
        diff = np.max(np.abs(spectral_moments(p, s, backend=backend).as_array() - ref))
        print(f"{name:>8}: {best * 1e3:8.3f} ms per call   max |diff| vs python {diff:.2e}")
    if kernels.BACKEND == "compiled":
        print(f"speed-up: {timings['python'] / timings['default']:.1f}x")
    else:
        print("compiled extension not available; both rows use the Python kernel")


if __name__ == "__main__":
    main()
