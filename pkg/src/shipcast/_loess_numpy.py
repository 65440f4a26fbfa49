"""Pure-numpy LOESS kernel; reference path for the numba backend.

Both backends implement the same contract: smooth a uniformly spaced series
``y`` (observed at x = 0..n-1) with tricube-weighted local regression of
degree 0 or 1 over the ``span`` nearest points, scaled by per-point
robustness weights ``rho``, and evaluate at arbitrary positions ``eval_x``
(which may lie outside [0, n-1], as STL's cycle-subseries extension needs).
"""

from __future__ import annotations

import numpy as np


def loess_fit(
    y: np.ndarray, span: int, degree: int, rho: np.ndarray, eval_x: np.ndarray
) -> np.ndarray:
    n = y.shape[0]
    q = min(span, n)
    out = np.empty(eval_x.shape[0], dtype=np.float64)
    x = np.arange(n, dtype=np.float64)
    for i in range(eval_x.shape[0]):
        t = eval_x[i]
        # Nearest q points form a contiguous window on a uniform grid.
        lo = int(np.floor(t - (q - 1) / 2.0 + 0.5))
        lo = min(max(lo, 0), n - q)
        xs = x[lo : lo + q]
        ys = y[lo : lo + q]
        h = max(t - lo, lo + q - 1 - t)
        if span > n:
            # Cleveland's rule: widen the bandwidth when the span exceeds
            # the data so the fit flattens toward a global regression.
            h += (span - n) / 2.0
        if h <= 0.0:
            out[i] = ys[0]
            continue
        u = np.abs(xs - t) / h
        w = np.where(u < 1.0, (1.0 - u**3) ** 3, 0.0) * rho[lo : lo + q]
        sw = w.sum()
        if sw <= 0.0:
            # All weight killed by robustness; fall back to unweighted mean.
            out[i] = ys.mean()
            continue
        if degree == 0:
            out[i] = float(np.dot(w, ys) / sw)
        else:
            swx = float(np.dot(w, xs))
            swy = float(np.dot(w, ys))
            swxx = float(np.dot(w, xs * xs))
            swxy = float(np.dot(w, xs * ys))
            det = sw * swxx - swx * swx
            if det <= 1e-12 * sw * swxx or det <= 0.0:
                out[i] = swy / sw
            else:
                beta = (sw * swxy - swx * swy) / det
                alpha = (swy - beta * swx) / sw
                out[i] = alpha + beta * t
    return out


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Simple trailing-free centered MA: output length len(x) - window + 1."""
    c = np.cumsum(np.concatenate(([0.0], x)))
    return (c[window:] - c[:-window]) / window
