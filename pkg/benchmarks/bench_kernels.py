"""Compare the compiled and pure-Python RK4 kernels.

Run with ``python3 benchmarks/bench_kernels.py``.  The first table times
the kernel alone on random generators; the second times a full holonomy
sample in fresh interpreters with each backend forced.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from holonomylab import kernels

END_TO_END = """
import time
from holonomylab import catalog, kernels
from holonomylab.holonomy import generate_loops, sample_holonomy
entry = catalog.get("product_contactization")
fam = generate_loops(entry.spec, entry.base_point, 20, entry.scale, 0, entry.reach)
t = time.perf_counter()
sample_holonomy(entry.spec, fam, 512)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def kernel_table(repeat: int) -> None:
    print(f"{'k':>3} {'steps':>7} {'python ms':>11} {'cython ms':>11} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for k in (2, 4, 6):
        for steps in (512, 4096, 32768):
            gen = rng.standard_normal((2 * steps + 1, k, k)) * 0.1
            x0 = np.eye(k)
            rec = np.linspace(0, steps, 10).astype(np.int64)
            args = (gen, 1.0 / steps, x0, rec)
            py = min(timeit.repeat(lambda: kernels.python_rk4_propagate(*args), number=1, repeat=repeat))
            if kernels.compiled_rk4_propagate is None:
                print(f"{k:>3} {steps:>7} {py * 1e3:>11.2f} {'n/a':>11} {'':>8}")
                continue
            cy = min(timeit.repeat(lambda: kernels.compiled_rk4_propagate(*args), number=1, repeat=repeat))
            print(f"{k:>3} {steps:>7} {py * 1e3:>11.2f} {cy * 1e3:>11.2f} {py / cy:>7.1f}x")


def end_to_end() -> None:
    print("\nholonomy sample, product_contactization, 20 loops, 512 steps/unit")
    for forced in ("0", "1"):
        env = {**os.environ, "HOLONOMYLAB_PURE_PYTHON": forced}
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"  {backend:>7}: {float(seconds):.3f} s")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    print(f"default backend: {kernels.BACKEND}\n")
    kernel_table(args.repeat)
    end_to_end()


if __name__ == "__main__":
    main()
