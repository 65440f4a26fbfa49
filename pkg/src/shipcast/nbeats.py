"""N-BEATS: residually stacked basis-expansion blocks.

Each block runs the residual through an MLP trunk, projects to a small
theta vector, and expands theta into a backcast (length L) and forecast
(length H) either through fixed polynomial/Fourier matrices (interpretable
configuration) or through learned linear heads (generic configuration).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import neural
from .neural import DenseNet, TrainConfig, glorot_init
from .rng import SplitMix64
from .series import Forecast, ForecastConfig, WeeklySeries, sliding_windows
from .stacking import StackedModel


@dataclass(frozen=True)
class BasisSpec:
    """kind is one of 'generic', 'polynomial', 'fourier'. theta_dim is the
    per-direction coefficient count; fixed bases imply it, generic picks it
    (theta_dim_backcast overrides the backcast side when set)."""

    kind: str
    degree: int = 0
    harmonics: int = 1
    theta_dim: int = 8
    theta_dim_backcast: int | None = None

    def __post_init__(self):
        if self.kind not in ("generic", "polynomial", "fourier"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind == "polynomial" and self.degree < 0:
            raise ValueError("polynomial degree must be >= 0")
        if self.kind == "fourier" and self.harmonics < 1:
            raise ValueError("fourier harmonics must be >= 1")
        if self.kind == "generic" and self.theta_dim < 1:
            raise ValueError("generic theta_dim must be >= 1")

    def dim(self, out_len_backcast: int, out_len_forecast: int) -> tuple[int, int]:
        if self.kind == "polynomial":
            d = self.degree + 1
            return d, d
        if self.kind == "fourier":
            d = 2 * self.harmonics + 1
            return d, d
        return (
            self.theta_dim if self.theta_dim_backcast is None else self.theta_dim_backcast,
            self.theta_dim,
        )


def basis_matrices(
    spec: BasisSpec, lookback: int, horizon: int, theta_dim: int
) -> tuple[np.ndarray, np.ndarray] | None:
    """Fixed expansion matrices (backcast L x theta_dim, forecast H x
    theta_dim) on normalized time t = j/len. Returns None for the generic
    basis, whose expansion is a learned linear layer instead.

    Fourier harmonics are capped at the Nyquist rate of the shorter grid.
    """
    if spec.kind == "generic":
        return None
    if spec.kind == "polynomial":
        if theta_dim != spec.degree + 1:
            raise ValueError(
                f"polynomial degree {spec.degree} needs theta_dim {spec.degree + 1}"
            )
        def columns(length: int) -> np.ndarray:
            t = np.arange(length, dtype=np.float64) / length
            return np.stack([t**p for p in range(spec.degree + 1)], axis=1)
        return columns(lookback), columns(horizon)
    if theta_dim != 2 * spec.harmonics + 1:
        raise ValueError(
            f"fourier with {spec.harmonics} harmonics needs theta_dim {2 * spec.harmonics + 1}"
        )
    if spec.harmonics > horizon // 2 or spec.harmonics > lookback // 2:
        raise ValueError(
            f"{spec.harmonics} harmonics exceed the Nyquist bound "
            f"(floor(H/2)={horizon // 2}, floor(L/2)={lookback // 2})"
        )
    def columns(length: int) -> np.ndarray:
        t = np.arange(length, dtype=np.float64) / length
        cols = [np.ones(length)]
        for k in range(1, spec.harmonics + 1):
            cols.append(np.cos(2.0 * math.pi * k * t))
            cols.append(np.sin(2.0 * math.pi * k * t))
        return np.stack(cols, axis=1)
    return columns(lookback), columns(horizon)


class NBeatsBlock:
    """Trunk MLP -> theta -> basis expansion to (backcast, forecast)."""

    def __init__(
        self,
        lookback: int,
        horizon: int,
        spec: BasisSpec,
        width: int,
        hidden_layers: int,
        rng: SplitMix64,
    ):
        self.lookback = lookback
        self.horizon = horizon
        self.spec = spec
        self.dim_b, self.dim_f = spec.dim(lookback, horizon)
        dims = [lookback] + [width] * hidden_layers
        self.trunk = glorot_init(dims, rng, final_activation="relu")
        self.theta = glorot_init([width, self.dim_b + self.dim_f], rng)
        if spec.kind == "generic":
            self.head_b: DenseNet | None = glorot_init([self.dim_b, lookback], rng)
            self.head_f: DenseNet | None = glorot_init([self.dim_f, horizon], rng)
            self.basis_b = self.basis_f = None
        else:
            self.head_b = self.head_f = None
            self.basis_b, self.basis_f = basis_matrices(
                spec, lookback, horizon, self.dim_b
            )

    def parameter_arrays(self) -> list[np.ndarray]:
        out = self.trunk.parameter_arrays() + self.theta.parameter_arrays()
        if self.head_b is not None:
            out += self.head_b.parameter_arrays() + self.head_f.parameter_arrays()
        return out

    def theta_split(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return theta[..., : self.dim_b], theta[..., self.dim_b :]

    def apply(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray, dict]:
        h, trunk_tape = neural.forward(self.trunk, r)
        theta, theta_tape = neural.forward(self.theta, h)
        th_b, th_f = self.theta_split(theta)
        cache = {"trunk": trunk_tape, "theta": theta_tape}
        if self.spec.kind == "generic":
            bc, tape_b = neural.forward(self.head_b, th_b)
            fc, tape_f = neural.forward(self.head_f, th_f)
            cache["head_b"] = tape_b
            cache["head_f"] = tape_f
        else:
            bc = th_b @ self.basis_b.T
            fc = th_f @ self.basis_f.T
        return bc, fc, cache

    def backward(
        self, cache: dict, d_backcast: np.ndarray, d_forecast: np.ndarray
    ) -> tuple[np.ndarray, list[np.ndarray]]:
        if self.spec.kind == "generic":
            gb = neural.backward(self.head_b, cache["head_b"], d_backcast)
            gf = neural.backward(self.head_f, cache["head_f"], d_forecast)
            d_theta = np.concatenate([gb.input_grad, gf.input_grad], axis=-1)
            head_grads = gb.arrays() + gf.arrays()
        else:
            d_theta = np.concatenate(
                [d_backcast @ self.basis_b, d_forecast @ self.basis_f], axis=-1
            )
            head_grads = []
        g_theta = neural.backward(self.theta, cache["theta"], d_theta)
        g_trunk = neural.backward(self.trunk, cache["trunk"], g_theta.input_grad)
        return g_trunk.input_grad, g_trunk.arrays() + g_theta.arrays() + head_grads

    def arch(self) -> dict:
        return {
            "type": "nbeats",
            "spec": {
                "kind": self.spec.kind,
                "degree": self.spec.degree,
                "harmonics": self.spec.harmonics,
                "theta_dim": self.spec.theta_dim,
                "theta_dim_backcast": self.spec.theta_dim_backcast,
            },
            "width": self.trunk.layers[0].weight.shape[0],
            "hidden_layers": len(self.trunk.layers),
        }


class NBeatsModel(StackedModel):
    """Stacked N-BEATS forecaster; see generic_nbeats / interpretable_nbeats."""

    def __init__(self, blocks, lookback, horizon, label="nbeats", shares=None):
        super().__init__(blocks, lookback, horizon, label)
        self._shares = shares or [1] * len(self._unique)

    def arch(self) -> dict:
        return {
            "lookback": self.lookback,
            "horizon": self.horizon,
            "label": self.label,
            "blocks": [b.arch() for b in self._unique],
            "shares": self._shares,
        }

    def to_json(self) -> str:
        return neural.params_to_json(self.parameter_arrays(), meta=self.arch())

    @classmethod
    def from_json(cls, text: str) -> "NBeatsModel":
        arrays, meta = neural.params_from_json(text)
        rng = SplitMix64(0)
        blocks = []
        for block_arch, share in zip(meta["blocks"], meta["shares"]):
            spec = BasisSpec(**block_arch["spec"])
            block = NBeatsBlock(
                meta["lookback"],
                meta["horizon"],
                spec,
                block_arch["width"],
                block_arch["hidden_layers"],
                rng,
            )
            blocks.extend([block] * share)
        model = cls(blocks, meta["lookback"], meta["horizon"], meta["label"], meta["shares"])
        neural.load_parameters(model, arrays)
        return model


def generic_nbeats(
    cfg: ForecastConfig,
    stacks: int = 3,
    blocks_per_stack: int = 1,
    width: int = 32,
    hidden_layers: int = 4,
    theta_dim: int = 8,
    seed: int = 0,
) -> NBeatsModel:
    """Default desk-scale architecture: independent generic blocks."""
    rng = SplitMix64(seed)
    spec = BasisSpec("generic", theta_dim=theta_dim)
    blocks = [
        NBeatsBlock(cfg.lookback, cfg.horizon, spec, width, hidden_layers, rng)
        for _ in range(stacks * blocks_per_stack)
    ]
    return NBeatsModel(blocks, cfg.lookback, cfg.horizon, "nbeats")


def interpretable_nbeats(
    cfg: ForecastConfig,
    trend_degree: int = 2,
    harmonics: int = 2,
    blocks_per_stack: int = 3,
    width: int = 32,
    hidden_layers: int = 4,
    seed: int = 0,
) -> NBeatsModel:
    """Trend stack (polynomial) followed by a seasonality stack (Fourier);
    blocks inside a stack share one set of weights."""
    rng = SplitMix64(seed)
    trend = NBeatsBlock(
        cfg.lookback, cfg.horizon, BasisSpec("polynomial", degree=trend_degree),
        width, hidden_layers, rng,
    )
    season = NBeatsBlock(
        cfg.lookback, cfg.horizon, BasisSpec("fourier", harmonics=harmonics),
        width, hidden_layers, rng,
    )
    blocks = [trend] * blocks_per_stack + [season] * blocks_per_stack
    return NBeatsModel(
        blocks, cfg.lookback, cfg.horizon, "nbeats",
        shares=[blocks_per_stack, blocks_per_stack],
    )


def split_train_val(
    values: np.ndarray, cfg: ForecastConfig, holdout: int | None = None
) -> tuple[list, list]:
    """Partition sliding windows into training and validation sets.

    The last ``holdout`` steps (default 2H) are the validation zone:
    windows whose targets fall entirely inside it validate, windows whose
    targets end before it train; straddlers are dropped to avoid leakage.
    """
    n = len(values)
    L, H = cfg.lookback, cfg.horizon
    holdout = 2 * H if holdout is None else holdout
    windows = sliding_windows(values, cfg)
    train_pairs, val_pairs = [], []
    for o, pair in enumerate(windows):
        target_end = o + L + H
        if target_end <= n - holdout:
            train_pairs.append(pair)
        elif o + L >= n - holdout:
            val_pairs.append(pair)
    if not train_pairs:
        train_pairs = windows[:-1] if len(windows) > 1 else windows
        val_pairs = [windows[-1]]
    return train_pairs, val_pairs


def nbeats_train(
    series: WeeklySeries,
    fc_cfg: ForecastConfig = ForecastConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    architecture: str = "generic",
    **arch_kwargs,
) -> tuple[NBeatsModel, neural.TrainResult]:
    """Build a model, window the series, train deterministically."""
    if architecture == "generic":
        model = generic_nbeats(fc_cfg, seed=train_cfg.seed, **arch_kwargs)
    elif architecture == "interpretable":
        model = interpretable_nbeats(fc_cfg, seed=train_cfg.seed, **arch_kwargs)
    else:
        raise ValueError(f"unknown architecture {architecture!r}")
    train_pairs, val_pairs = split_train_val(series.values, fc_cfg)
    result = neural.train(model, train_pairs, val_pairs, train_cfg)
    return model, result


def forecast_series(model: StackedModel, series: WeeklySeries) -> Forecast:
    values = model.forecast_window(series.values)
    return Forecast(
        model_label=model.label,
        values=values,
        horizon_start_week=series.week_start(len(series)),
    )
