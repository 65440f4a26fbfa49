#!/usr/bin/env python3
"""Benchmark the LOESS kernel backends (numba JIT vs pure numpy) on an
MSTL-shaped workload: repeated smoothing passes over cycle subseries and
trend-length windows, exactly the call pattern stl_decompose produces.

Run:  python benchmarks/bench_loess.py [--repeats N]

The numba path pays a one-off JIT compile on first call (excluded below);
steady-state it is typically 10-50x faster on the small per-point fits
that dominate a decomposition. SHIPCAST_NUMBA=0 would force the whole
package onto the numpy path; here both are imported directly.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from shipcast import _loess_numpy  # noqa: E402

try:
    from shipcast import _loess_numba

    HAVE_NUMBA = True
except ImportError:
    _loess_numba = None
    HAVE_NUMBA = False


def workload(loess_fit, data: list[tuple[np.ndarray, int, np.ndarray]]) -> float:
    total = 0.0
    for y, span, eval_x in data:
        rho = np.ones(y.shape[0])
        total += float(loess_fit(y, span, 1, rho, eval_x).sum())
    return total


def build_workload(rng: np.random.Generator) -> list:
    """Mimics one MSTL pass on a 208-week series with periods (4, 52):
    many short cycle-subseries smooths plus a few long trend smooths."""
    data = []
    for _ in range(4 * 3):  # period-4 pass: 4 subseries x inner iterations
        y = rng.normal(size=52)
        data.append((y, 11, np.arange(-1.0, 53.0)))
    for _ in range(52 * 3):  # period-52 pass: 52 subseries
        y = rng.normal(size=4)
        data.append((y, 11, np.arange(-1.0, 5.0)))
    for span in (9, 101, 5, 53):  # trend and low-pass smooths
        for _ in range(6):
            y = rng.normal(size=208)
            data.append((y, span, np.arange(208.0)))
    return data


def time_backend(name: str, fit, data, repeats: int) -> float:
    workload(fit, data)  # warm-up (JIT compile for numba)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        workload(fit, data)
        best = min(best, time.perf_counter() - start)
    print(f"  {name:8s} {best * 1e3:9.2f} ms / decomposition-equivalent")
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    data = build_workload(np.random.default_rng(0))
    print(f"LOESS kernel benchmark ({len(data)} smoothing calls per pass)")
    t_numpy = time_backend("numpy", _loess_numpy.loess_fit, data, args.repeats)
    if HAVE_NUMBA:
        t_numba = time_backend("numba", _loess_numba.loess_fit, data, args.repeats)
        print(f"  speedup  {t_numpy / t_numba:9.1f}x")
        a = workload(_loess_numpy.loess_fit, data)
        b = workload(_loess_numba.loess_fit, data)
        assert abs(a - b) < 1e-6 * max(1.0, abs(a)), "backends disagree"
        print("  backends agree on the workload checksum")
    else:
        print("  numba unavailable; numpy path only")


if __name__ == "__main__":
    main()
