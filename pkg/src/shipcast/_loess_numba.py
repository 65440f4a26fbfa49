"""Numba-jitted LOESS kernel; must match _loess_numpy bit-for-bit in spirit
(same window, bandwidth, and weight rules; tiny float reordering aside)."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _loess_fit_jit(y, span, degree, rho, eval_x):  # pragma: no cover - jitted
    n = y.shape[0]
    q = min(span, n)
    out = np.empty(eval_x.shape[0], dtype=np.float64)
    for i in range(eval_x.shape[0]):
        t = eval_x[i]
        lo = int(np.floor(t - (q - 1) / 2.0 + 0.5))
        if lo < 0:
            lo = 0
        if lo > n - q:
            lo = n - q
        h = t - lo
        if lo + q - 1 - t > h:
            h = lo + q - 1 - t
        if span > n:
            h += (span - n) / 2.0
        if h <= 0.0:
            out[i] = y[lo]
            continue
        sw = 0.0
        swx = 0.0
        swy = 0.0
        swxx = 0.0
        swxy = 0.0
        ssum = 0.0
        for j in range(lo, lo + q):
            u = abs(j - t) / h
            if u < 1.0:
                c = 1.0 - u * u * u
                w = c * c * c * rho[j]
            else:
                w = 0.0
            sw += w
            swx += w * j
            swy += w * y[j]
            swxx += w * j * j
            swxy += w * j * y[j]
            ssum += y[j]
        if sw <= 0.0:
            out[i] = ssum / q
            continue
        if degree == 0:
            out[i] = swy / sw
        else:
            det = sw * swxx - swx * swx
            if det <= 1e-12 * sw * swxx or det <= 0.0:
                out[i] = swy / sw
            else:
                beta = (sw * swxy - swx * swy) / det
                alpha = (swy - beta * swx) / sw
                out[i] = alpha + beta * t
    return out


def loess_fit(
    y: np.ndarray, span: int, degree: int, rho: np.ndarray, eval_x: np.ndarray
) -> np.ndarray:
    return _loess_fit_jit(
        np.ascontiguousarray(y, dtype=np.float64),
        int(span),
        int(degree),
        np.ascontiguousarray(rho, dtype=np.float64),
        np.ascontiguousarray(eval_x, dtype=np.float64),
    )
