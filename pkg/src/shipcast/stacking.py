"""Doubly residual block stacking shared by the N-BEATS and N-HiTS models.

Blocks consume the running residual and emit (backcast, forecast); the
residual shrinks by each backcast while forecasts sum. One engine serves
both architectures so their structural invariants (forecast additivity,
residual telescoping, the N-HiTS reduction to N-BEATS) hold by
construction. Blocks may appear several times in the stack to share
weights; gradients for shared blocks accumulate.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np


@dataclass
class BlockDiagnostics:
    block_index: int
    backcast: np.ndarray
    forecast: np.ndarray
    residual_after: np.ndarray


class StackedModel:
    """Base for residually stacked forecasters operating on (L,) windows."""

    def __init__(self, blocks: list, lookback: int, horizon: int, label: str):
        self.blocks = blocks
        self.lookback = lookback
        self.horizon = horizon
        self.label = label
        # Preserve first-appearance order; identity, not equality, so that
        # repeated block objects (weight sharing) are counted once.
        self._unique = list({id(b): b for b in blocks}.values())

    def parameter_arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for block in self._unique:
            out.extend(block.parameter_arrays())
        return out

    def batch_apply(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, list]:
        """Forward over a (n, L) batch; returns (forecasts, final residual,
        caches for backward)."""
        if X.ndim != 2 or X.shape[1] != self.lookback:
            raise ValueError(f"expected (n, {self.lookback}) input, got {X.shape}")
        r = X
        total = np.zeros((X.shape[0], self.horizon))
        caches = []
        for block in self.blocks:
            bc, fc, cache = block.apply(r)
            caches.append(cache)
            r = r - bc
            total = total + fc
        return total, r, caches

    def apply(self, x: np.ndarray) -> tuple[np.ndarray, list[BlockDiagnostics]]:
        """Forward one window, exposing every intermediate for inspection."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.lookback,):
            raise ValueError(f"expected a ({self.lookback},) window, got {x.shape}")
        r = x[None, :]
        total = np.zeros((1, self.horizon))
        diags = []
        for k, block in enumerate(self.blocks):
            bc, fc, _ = block.apply(r)
            r = r - bc
            total = total + fc
            diags.append(
                BlockDiagnostics(
                    block_index=k,
                    backcast=bc[0].copy(),
                    forecast=fc[0].copy(),
                    residual_after=r[0].copy(),
                )
            )
        return total[0], diags

    def backward_batch(self, caches: list, d_forecast: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss given d(loss)/d(total forecast),
        aligned with parameter_arrays(). The final residual is unused by
        the loss, so its gradient starts at zero and grows backward through
        the chain r_k = r_{k-1} - backcast_k.
        """
        d_r = np.zeros((d_forecast.shape[0], self.lookback))
        acc: dict[int, list[np.ndarray]] = {}
        for k in range(len(self.blocks) - 1, -1, -1):
            block = self.blocks[k]
            d_in, grads = block.backward(caches[k], -d_r, d_forecast)
            d_r = d_r + d_in
            bucket = acc.setdefault(id(block), [np.zeros_like(g) for g in grads])
            for slot, g in zip(bucket, grads):
                slot += g
        out: list[np.ndarray] = []
        for block in self._unique:
            out.extend(acc[id(block)])
        return out

    def loss_and_grads(self, X: np.ndarray, Y: np.ndarray) -> tuple[float, list[np.ndarray]]:
        """Mean-squared error over the batch and its parameter gradients."""
        pred, _, caches = self.batch_apply(X)
        diff = pred - Y
        loss = float(np.mean(diff * diff))
        d_forecast = 2.0 * diff / diff.size
        return loss, self.backward_batch(caches, d_forecast)

    def forecast_window(self, history: np.ndarray) -> np.ndarray:
        """Forecast from the last L observations: scale by lookback mean + 1,
        run the network, undo the scale, clamp at zero (demand semantics)."""
        history = np.asarray(history, dtype=np.float64)
        if history.shape[0] < self.lookback:
            raise ValueError(
                f"need at least {self.lookback} observations, got {history.shape[0]}"
            )
        x = history[-self.lookback :]
        s = float(np.mean(x)) + 1.0
        yhat, _ = self.apply(x / s)
        return np.maximum(yhat * s, 0.0)


def diagnostics_to_csv(diags: list[BlockDiagnostics]) -> str:
    """Long-format export (block, component, position, value) for plots."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["block", "component", "position", "value"])
    for d in diags:
        for name, arr in (
            ("backcast", d.backcast),
            ("forecast", d.forecast),
            ("residual", d.residual_after),
        ):
            for pos, val in enumerate(arr):
                w.writerow([d.block_index, name, pos, repr(float(val))])
    return buf.getvalue()
