"""N-HiTS: residual stacking with multi-rate input pooling and hierarchical
interpolation of low-resolution forecasts up to the horizon."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import neural
from .neural import TrainConfig, glorot_init
from .rng import SplitMix64
from .series import ForecastConfig, WeeklySeries
from .stacking import StackedModel
from .nbeats import split_train_val


def maxpool1d(x: np.ndarray, kernel: int) -> np.ndarray:
    """Max over non-overlapping windows; the tail is right-padded with the
    last value when the kernel does not divide the length."""
    if kernel < 1:
        raise ValueError("kernel must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    out_len = -(-n // kernel)
    pad = out_len * kernel - n
    if pad:
        last = x[..., -1:]
        x = np.concatenate([x] + [last] * pad, axis=-1)
    return x.reshape(x.shape[:-1] + (out_len, kernel)).max(axis=-1)


def interpolation_matrix(n_knots: int, out_len: int) -> np.ndarray:
    """Linear map from knots (at equally spaced positions spanning
    [0, out_len - 1], endpoints inclusive) to the dense output grid."""
    if n_knots < 1 or out_len < 1:
        raise ValueError("need at least one knot and one output point")
    W = np.zeros((out_len, n_knots))
    if n_knots == 1:
        W[:, 0] = 1.0
        return W
    pos = np.linspace(0.0, out_len - 1.0, n_knots)
    for i in range(out_len):
        j = int(np.searchsorted(pos, i, side="right")) - 1
        j = min(max(j, 0), n_knots - 2)
        lam = (i - pos[j]) / (pos[j + 1] - pos[j])
        W[i, j] += 1.0 - lam
        W[i, j + 1] += lam
    return W


def linear_interpolate(knots: np.ndarray, out_len: int) -> np.ndarray:
    """Piecewise-linear upsampling; identity when len(knots) == out_len,
    constant when a single knot is given."""
    knots = np.asarray(knots, dtype=np.float64)
    return interpolation_matrix(knots.shape[0], out_len) @ knots


@dataclass(frozen=True)
class NhitsStackConfig:
    pool_kernel: int
    forecast_knots: int
    width: int = 32
    hidden_layers: int = 4

    def validate(self, lookback: int, horizon: int) -> None:
        if self.pool_kernel < 1:
            raise ValueError("pool_kernel must be >= 1")
        if not (1 <= self.forecast_knots <= horizon):
            raise ValueError(
                f"forecast_knots must lie in [1, {horizon}], got {self.forecast_knots}"
            )


class NhitsBlock:
    """Pool the residual, run the trunk MLP at the coarse rate, emit theta
    as interpolation knots for backcast and forecast."""

    def __init__(
        self, lookback: int, horizon: int, cfg: NhitsStackConfig, rng: SplitMix64
    ):
        cfg.validate(lookback, horizon)
        self.lookback = lookback
        self.horizon = horizon
        self.cfg = cfg
        self.pooled_len = -(-lookback // cfg.pool_kernel)
        self.knots_b = self.pooled_len
        self.knots_f = cfg.forecast_knots
        dims = [self.pooled_len] + [cfg.width] * cfg.hidden_layers
        self.trunk = glorot_init(dims, rng, final_activation="relu")
        self.theta = glorot_init([cfg.width, self.knots_b + self.knots_f], rng)
        self.interp_b = interpolation_matrix(self.knots_b, lookback)
        self.interp_f = interpolation_matrix(self.knots_f, horizon)

    def parameter_arrays(self) -> list[np.ndarray]:
        return self.trunk.parameter_arrays() + self.theta.parameter_arrays()

    def _pool(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pooled values plus the source index of each window maximum (ties
        and padded slots resolve to the first occurrence / last real index),
        so backward can scatter gradients to where they came from."""
        k = self.cfg.pool_kernel
        n = r.shape[-1]
        pad = self.pooled_len * k - n
        if pad:
            r_p = np.concatenate([r] + [r[..., -1:]] * pad, axis=-1)
        else:
            r_p = r
        windows = r_p.reshape(r.shape[0], self.pooled_len, k)
        arg = windows.argmax(axis=-1)
        offsets = np.arange(self.pooled_len) * k
        src = np.minimum(arg + offsets, n - 1)
        pooled = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
        return pooled, src

    def apply(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray, dict]:
        pooled, src = self._pool(r)
        h, trunk_tape = neural.forward(self.trunk, pooled)
        theta, theta_tape = neural.forward(self.theta, h)
        kb = theta[..., : self.knots_b]
        kf = theta[..., self.knots_b :]
        bc = kb @ self.interp_b.T
        fc = kf @ self.interp_f.T
        return bc, fc, {"trunk": trunk_tape, "theta": theta_tape, "src": src, "in_len": r.shape[-1]}

    def backward(
        self, cache: dict, d_backcast: np.ndarray, d_forecast: np.ndarray
    ) -> tuple[np.ndarray, list[np.ndarray]]:
        d_theta = np.concatenate(
            [d_backcast @ self.interp_b, d_forecast @ self.interp_f], axis=-1
        )
        g_theta = neural.backward(self.theta, cache["theta"], d_theta)
        g_trunk = neural.backward(self.trunk, cache["trunk"], g_theta.input_grad)
        d_pooled = g_trunk.input_grad
        d_r = np.zeros((d_pooled.shape[0], cache["in_len"]))
        rows = np.arange(d_pooled.shape[0])[:, None]
        np.add.at(d_r, (rows, cache["src"]), d_pooled)
        return d_r, g_trunk.arrays() + g_theta.arrays()

    def arch(self) -> dict:
        return {
            "type": "nhits",
            "pool_kernel": self.cfg.pool_kernel,
            "forecast_knots": self.cfg.forecast_knots,
            "width": self.cfg.width,
            "hidden_layers": self.cfg.hidden_layers,
        }


class NhitsModel(StackedModel):
    """Stacked N-HiTS forecaster; see default_nhits."""

    def arch(self) -> dict:
        return {
            "lookback": self.lookback,
            "horizon": self.horizon,
            "label": self.label,
            "blocks": [b.arch() for b in self.blocks],
        }

    def to_json(self) -> str:
        return neural.params_to_json(self.parameter_arrays(), meta=self.arch())

    @classmethod
    def from_json(cls, text: str) -> "NhitsModel":
        arrays, meta = neural.params_from_json(text)
        rng = SplitMix64(0)
        blocks = [
            NhitsBlock(
                meta["lookback"],
                meta["horizon"],
                NhitsStackConfig(
                    pool_kernel=b["pool_kernel"],
                    forecast_knots=b["forecast_knots"],
                    width=b["width"],
                    hidden_layers=b["hidden_layers"],
                ),
                rng,
            )
            for b in meta["blocks"]
        ]
        model = cls(blocks, meta["lookback"], meta["horizon"], meta["label"])
        neural.load_parameters(model, arrays)
        return model


def default_nhits(
    cfg: ForecastConfig,
    pool_kernels: tuple[int, ...] = (4, 2, 1),
    forecast_knots: tuple[int, ...] | None = None,
    width: int = 32,
    hidden_layers: int = 4,
    seed: int = 0,
) -> NhitsModel:
    """Coarse-to-fine hierarchy scaled to the desk-size L=8, H=4 setup:
    kernels (4, 2, 1) with forecast knots (1, 2, H)."""
    if forecast_knots is None:
        forecast_knots = (1, min(2, cfg.horizon), cfg.horizon)
    if len(forecast_knots) != len(pool_kernels):
        raise ValueError("pool_kernels and forecast_knots lengths differ")
    rng = SplitMix64(seed)
    blocks = [
        NhitsBlock(
            cfg.lookback,
            cfg.horizon,
            NhitsStackConfig(k, f, width=width, hidden_layers=hidden_layers),
            rng,
        )
        for k, f in zip(pool_kernels, forecast_knots)
    ]
    return NhitsModel(blocks, cfg.lookback, cfg.horizon, "nhits")


def nhits_train(
    series: WeeklySeries,
    fc_cfg: ForecastConfig = ForecastConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    **arch_kwargs,
) -> tuple[NhitsModel, neural.TrainResult]:
    model = default_nhits(fc_cfg, seed=train_cfg.seed, **arch_kwargs)
    train_pairs, val_pairs = split_train_val(series.values, fc_cfg)
    result = neural.train(model, train_pairs, val_pairs, train_cfg)
    return model, result
