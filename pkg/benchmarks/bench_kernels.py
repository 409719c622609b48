"""Time the compiled occupancy kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so the environment switch that picks
the runtime backend has no effect here.
"""

import argparse
import sys
import timeit

import numpy as np

from mpnr_lab import _kernels_py

try:
    from mpnr_lab import _kernels
except ImportError:
    _kernels = None

CASES = [
    ("occupancy_table", (10, 32)),
    ("occupancy_table", (64, 64)),
    ("occupancy_table", (512, 96)),
    ("weighted_occupancy", (np.full(10, 0.1), 32)),
    ("weighted_occupancy", (np.linspace(1, 2, 64) / np.linspace(1, 2, 64).sum(), 64)),
]


def _best(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05:
        number *= 4
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def _label(name, args):
    first = args[0]
    size = first if isinstance(first, int) else f"{len(first)} weights"
    return f"{name}(n={size}, D={args[1]})"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback can be timed", file=sys.stderr)
    print(f"{'case':<44}{'python [ms]':>12}{'cython [ms]':>12}{'speedup':>9}")
    for name, call_args in CASES:
        py = _best(getattr(_kernels_py, name), call_args, args.repeat)
        if _kernels is None:
            print(f"{_label(name, call_args):<44}{1e3 * py:>12.3f}{'-':>12}{'-':>9}")
            continue
        fast_fn = getattr(_kernels, name)
        if not np.allclose(fast_fn(*call_args), getattr(_kernels_py, name)(*call_args), rtol=1e-12, atol=1e-15):
            raise SystemExit(f"backends disagree on {name}")
        cy = _best(fast_fn, call_args, args.repeat)
        print(f"{_label(name, call_args):<44}{1e3 * py:>12.3f}{1e3 * cy:>12.3f}{py / cy:>8.1f}x")


if __name__ == "__main__":
    main()
