"""Additive pollutant time-series model: trend + daily/weekly Fourier terms.

The model is fit by ordinary least squares over a piecewise-linear trend
basis and sin/cos pairs at harmonics of the day (86 400 s) and week
(604 800 s). Residual statistics from the fit window drive anomaly scoring;
a spike in new data never inflates its own detection threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConditioningError
from .sensor_ingest import PollutantKind

DAY_S = 86_400.0
WEEK_S = 604_800.0

#: Finite stand-in for an infinite z-score when the fit residuals are zero.
Z_SCORE_CAP = 1e9

_SIGMA_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """One pollutant series for one sensor; irregular spacing is allowed."""

    sensor_id: str
    pollutant: PollutantKind
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "timestamps", np.asarray(self.timestamps, dtype=np.float64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.timestamps.ndim != 1 or self.values.ndim != 1:
            raise ValueError("timestamps and values must be 1-d")
        if len(self.timestamps) != len(self.values):
            raise ValueError(
                f"length mismatch: {len(self.timestamps)} timestamps vs {len(self.values)} values"
            )
        if len(self.timestamps) == 0:
            raise ValueError("series must be non-empty")
        if np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True, eq=False)
class ForecastModel:
    """Fitted additive model.

    ``trend_knots`` holds the piecewise-linear knot times; ``trend_coeffs``
    the trend value at each knot (a single constant when there is one knot).
    Fourier blocks store interleaved (sin, cos) coefficients per harmonic.
    """

    trend_knots: np.ndarray
    trend_coeffs: np.ndarray
    fourier_daily: np.ndarray
    fourier_weekly: np.ndarray
    residual_sigma: float
    fit_window: tuple[float, float]

    @property
    def k_daily(self) -> int:
        return len(self.fourier_daily) // 2

    @property
    def k_weekly(self) -> int:
        return len(self.fourier_weekly) // 2

    def to_dict(self) -> dict:
        return {
            "kind": "forecast_model",
            "trend_knots": [float(x) for x in self.trend_knots],
            "trend_coeffs": [float(x) for x in self.trend_coeffs],
            "fourier_daily": [float(x) for x in self.fourier_daily],
            "fourier_weekly": [float(x) for x in self.fourier_weekly],
            "residual_sigma": self.residual_sigma,
            "fit_window": [self.fit_window[0], self.fit_window[1]],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ForecastModel":
        return cls(
            trend_knots=np.asarray(doc["trend_knots"], dtype=np.float64),
            trend_coeffs=np.asarray(doc["trend_coeffs"], dtype=np.float64),
            fourier_daily=np.asarray(doc["fourier_daily"], dtype=np.float64),
            fourier_weekly=np.asarray(doc["fourier_weekly"], dtype=np.float64),
            residual_sigma=doc["residual_sigma"],
            fit_window=(doc["fit_window"][0], doc["fit_window"][1]),
        )


@dataclass(frozen=True)
class Anomaly:
    """A point whose deviation from the model exceeds the detection threshold."""

    timestamp: float
    observed: float
    expected: float
    z_score: float


def _trend_design(timestamps: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Hat-function basis over the knots, extrapolating linearly at the ends."""
    n, m = len(timestamps), len(knots)
    design = np.zeros((n, m))
    if m == 1:
        design[:, 0] = 1.0
        return design
    h = knots[1] - knots[0]
    seg = np.clip(np.floor((timestamps - knots[0]) / h).astype(int), 0, m - 2)
    u = (timestamps - knots[seg]) / h
    design[np.arange(n), seg] = 1.0 - u
    design[np.arange(n), seg + 1] = u
    return design


def _fourier_design(timestamps: np.ndarray, order: int, period: float) -> np.ndarray:
    cols = []
    for k in range(1, order + 1):
        arg = 2.0 * math.pi * k * timestamps / period
        cols.append(np.sin(arg))
        cols.append(np.cos(arg))
    return np.column_stack(cols) if cols else np.zeros((len(timestamps), 0))


def _design(timestamps: np.ndarray, knots: np.ndarray, k_daily: int, k_weekly: int) -> np.ndarray:
    return np.hstack(
        [
            _trend_design(timestamps, knots),
            _fourier_design(timestamps, k_daily, DAY_S),
            _fourier_design(timestamps, k_weekly, WEEK_S),
        ]
    )


def _make_knots(t_start: float, t_end: float, n_changepoints: int) -> np.ndarray:
    if n_changepoints == 0:
        return np.array([t_start])
    return np.linspace(t_start, t_end, n_changepoints + 1)


def fit(series: TimeSeries, k_daily: int = 3, k_weekly: int = 3, n_changepoints: int = 0) -> ForecastModel:
    """Least-squares fit of the additive model.

    ``n_changepoints`` is the number of linear trend segments; 0 gives a
    constant trend. Requires at least twice as many points as parameters.
    """
    if k_daily < 0 or k_weekly < 0 or n_changepoints < 0:
        raise ValueError("k_daily, k_weekly, and n_changepoints must be >= 0")
    n_params = 1 + n_changepoints + 2 * k_daily + 2 * k_weekly
    if len(series) < 2 * n_params:
        raise ValueError(
            f"series has {len(series)} points; fitting {n_params} parameters needs at least {2 * n_params}"
        )
    t = series.timestamps
    knots = _make_knots(t[0], t[-1], n_changepoints)
    design = _design(t, knots, k_daily, k_weekly)
    coeffs, _, rank, _ = np.linalg.lstsq(design, series.values, rcond=None)
    if rank < n_params:
        raise ConditioningError(
            f"design matrix rank {rank} < {n_params} parameters; the sampled window cannot "
            "identify these seasonal orders, try lower k_daily/k_weekly or fewer changepoints"
        )
    residuals = series.values - design @ coeffs
    sigma = float(np.std(residuals, ddof=1)) if len(series) > 1 else 0.0
    n_trend = len(knots)
    return ForecastModel(
        trend_knots=knots,
        trend_coeffs=coeffs[:n_trend],
        fourier_daily=coeffs[n_trend : n_trend + 2 * k_daily],
        fourier_weekly=coeffs[n_trend + 2 * k_daily :],
        residual_sigma=sigma,
        fit_window=(float(t[0]), float(t[-1])),
    )


def predict(model: ForecastModel, timestamps: Sequence[float] | np.ndarray) -> np.ndarray:
    """Evaluate trend + seasonalities; the trend extrapolates from its end segments."""
    t = np.asarray(timestamps, dtype=np.float64)
    design = _design(t, model.trend_knots, model.k_daily, model.k_weekly)
    coeffs = np.concatenate([model.trend_coeffs, model.fourier_daily, model.fourier_weekly])
    return design @ coeffs


def decompose(model: ForecastModel, series: TimeSeries) -> Mapping[str, np.ndarray]:
    """Split a fitted series into trend, daily, weekly, and residual parts.

    The parts sum to the observed values exactly (residual is defined as the
    remainder).
    """
    t = series.timestamps
    trend = _trend_design(t, model.trend_knots) @ model.trend_coeffs
    daily = _fourier_design(t, model.k_daily, DAY_S) @ model.fourier_daily
    weekly = _fourier_design(t, model.k_weekly, WEEK_S) @ model.fourier_weekly
    return {
        "trend": trend,
        "daily": daily,
        "weekly": weekly,
        "residual": series.values - trend - daily - weekly,
    }


def detect_anomalies(model: ForecastModel, series: TimeSeries, k_sigma: float = 3.0) -> list[Anomaly]:
    """Flag points deviating more than k_sigma fit-residual sigmas from the model.

    A residual_sigma at or below the 1e-9 floor is degenerate (an exact fit up
    to float noise): any |residual| above the floor is then flagged with the
    +/-1e9 z-score sentinel.
    """
    if k_sigma <= 0:
        raise ValueError("k_sigma must be positive")
    expected = predict(model, series.timestamps)
    residuals = series.values - expected
    anomalies = []
    for ts, obs, exp, res in zip(series.timestamps, series.values, expected, residuals):
        if model.residual_sigma > _SIGMA_FLOOR:
            if abs(res) > k_sigma * model.residual_sigma:
                anomalies.append(Anomaly(float(ts), float(obs), float(exp), float(res / model.residual_sigma)))
        elif abs(res) > _SIGMA_FLOOR:
            anomalies.append(Anomaly(float(ts), float(obs), float(exp), math.copysign(Z_SCORE_CAP, res)))
    return anomalies
