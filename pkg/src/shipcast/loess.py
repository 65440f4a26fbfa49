"""Locally weighted regression smoother with selectable compute backend.

The inner kernel is the hot loop of the whole decomposition stack, so it
ships twice: a numba-jitted version and a pure-numpy fallback. Selection:

* ``SHIPCAST_NUMBA=0`` (or ``false``/``off``) forces the numpy path;
* anything else tries numba first and silently falls back if the import
  fails (numba is a declared dependency, but the package stays usable
  without a working JIT, e.g. on unsupported interpreters).

``benchmarks/bench_loess.py`` compares the two paths on an MSTL-shaped
workload.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _loess_numpy


def _pick_backend():
    flag = os.environ.get("SHIPCAST_NUMBA", "1").strip().lower()
    if flag in ("0", "false", "off", "no"):
        return _loess_numpy, "numpy"
    try:
        from . import _loess_numba

        return _loess_numba, "numba"
    except ImportError:
        return _loess_numpy, "numpy"


_BACKEND, _BACKEND_NAME = _pick_backend()


def active_backend() -> str:
    """Name of the kernel backend chosen at import time."""
    return _BACKEND_NAME


def loess_fit(
    y: np.ndarray, span: int, degree: int, rho: np.ndarray, eval_x: np.ndarray
) -> np.ndarray:
    """Raw kernel: smooth y (observed at x=0..n-1) and evaluate at eval_x."""
    return _BACKEND.loess_fit(y, span, degree, rho, eval_x)


moving_average = _loess_numpy.moving_average


@dataclass(frozen=True)
class LoessParams:
    """Span must be odd and at least degree + 2; degree is 0 or 1."""

    span: int
    degree: int = 1
    robustness_iters: int = 0

    def __post_init__(self):
        if self.degree not in (0, 1):
            raise ValueError("degree must be 0 or 1")
        if self.span % 2 == 0 or self.span < self.degree + 2:
            raise ValueError(
                f"span must be odd and >= degree + 2, got {self.span}"
            )
        if self.robustness_iters < 0:
            raise ValueError("robustness_iters must be >= 0")


def bisquare_weights(residuals: np.ndarray) -> np.ndarray:
    """Cleveland's robustness weights: (1 - (r/6s)^2)^2 clipped at 0,
    with s the median absolute residual. All-ones when s is 0."""
    s = float(np.median(np.abs(residuals)))
    if s <= 0.0:
        return np.ones_like(residuals)
    u = residuals / (6.0 * s)
    w = 1.0 - u * u
    w[w < 0.0] = 0.0
    return w * w


def loess_smooth(values, params: LoessParams) -> np.ndarray:
    """Smooth a series at its own points.

    Each point gets a tricube-weighted polynomial fit of the given degree
    over the ``span`` nearest neighbors; ``robustness_iters`` extra passes
    down-weight outliers with bisquare weights computed from residuals.
    """
    y = np.asarray(values, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("values must be 1-D")
    n = y.shape[0]
    if n < params.span:
        raise ValueError(
            f"series of length {n} is shorter than span {params.span}"
        )
    eval_x = np.arange(n, dtype=np.float64)
    rho = np.ones(n, dtype=np.float64)
    fitted = loess_fit(y, params.span, params.degree, rho, eval_x)
    for _ in range(params.robustness_iters):
        rho = bisquare_weights(y - fitted)
        fitted = loess_fit(y, params.span, params.degree, rho, eval_x)
    return fitted
