"""Spatial AQI interpolation with a Gaussian RBF over sparse sensor samples.

The field is fitted on deviations from the sample mean, so queries far from
every sensor relax to the city-wide mean instead of zero.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConditioningError
from .geo import METERS_PER_DEG_LAT, haversine_m, offset_by_meters, validate_latitude, validate_longitude

DEFAULT_REGULARIZATION = 1e-8
DEFAULT_CELL_CAP = 250_000


@dataclass(frozen=True)
class AqiSample:
    """One AQI observation at a geographic point."""

    latitude: float
    longitude: float
    aqi: float
    sensor_id: str | None = None

    def __post_init__(self):
        validate_latitude(self.latitude)
        validate_longitude(self.longitude)
        if not 0.0 <= self.aqi <= 500.0:
            raise ValueError(f"aqi out of range [0, 500]: {self.aqi}")


@dataclass(frozen=True, eq=False)
class AqiField:
    """Fitted interpolant; immutable and safe to share across threads."""

    samples: tuple[AqiSample, ...]
    kernel: str
    length_scale: float
    weights: np.ndarray
    mean_offset: float
    regularization: float

    def to_dict(self) -> dict:
        return {
            "kind": "aqi_field",
            "kernel": self.kernel,
            "length_scale": self.length_scale,
            "mean_offset": self.mean_offset,
            "regularization": self.regularization,
            "weights": [float(w) for w in self.weights],
            "samples": [
                {"latitude": s.latitude, "longitude": s.longitude, "aqi": s.aqi, "sensor_id": s.sensor_id}
                for s in self.samples
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AqiField":
        return cls(
            samples=tuple(AqiSample(**s) for s in doc["samples"]),
            kernel=doc["kernel"],
            length_scale=doc["length_scale"],
            weights=np.asarray(doc["weights"], dtype=np.float64),
            mean_offset=doc["mean_offset"],
            regularization=doc["regularization"],
        )


@dataclass(frozen=True)
class GridSpec:
    """Raster extent and resolution; row 0 sits at min_lat, column 0 at min_lon."""

    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float
    rows: int
    cols: int

    def __post_init__(self):
        validate_latitude(self.min_lat, "min_lat")
        validate_latitude(self.max_lat, "max_lat")
        validate_longitude(self.min_lon, "min_lon")
        validate_longitude(self.max_lon, "max_lon")
        if self.min_lat >= self.max_lat:
            raise ValueError("min_lat must be < max_lat")
        if self.min_lon >= self.max_lon:
            raise ValueError("min_lon must be < max_lon")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")

    @property
    def cells(self) -> int:
        return self.rows * self.cols

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        lat = self.min_lat + (row + 0.5) * (self.max_lat - self.min_lat) / self.rows
        lon = self.min_lon + (col + 0.5) * (self.max_lon - self.min_lon) / self.cols
        return lat, lon


def _pairwise_distances_m(samples: Sequence[AqiSample]) -> np.ndarray:
    n = len(samples)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = haversine_m(
                samples[i].latitude, samples[i].longitude, samples[j].latitude, samples[j].longitude
            )
    return d


def fit_field(
    samples: Sequence[AqiSample],
    length_scale: float | None = None,
    regularization: float = DEFAULT_REGULARIZATION,
) -> AqiField:
    """Fit the Gaussian-RBF interpolant K w = aqi - mean(aqi).

    K_ij = exp(-(d_ij / length_scale)^2) with d_ij in meters (haversine);
    ``regularization`` is added to the diagonal. The default length scale is
    the median pairwise distance (1000 m for a single sample).
    """
    if not samples:
        raise ValueError("fit_field requires at least one sample")
    if regularization < 0:
        raise ValueError("regularization must be >= 0")
    coords = [(s.latitude, s.longitude) for s in samples]
    if len(set(coords)) != len(coords):
        raise ValueError("duplicate sample coordinates; merge co-located samples by mean first")
    dists = _pairwise_distances_m(samples)
    if length_scale is None:
        n = len(samples)
        length_scale = 1000.0 if n == 1 else float(np.median(dists[np.triu_indices(n, k=1)]))
    if length_scale <= 0:
        raise ValueError(f"length_scale must be positive, got {length_scale}")
    aqi = np.array([s.aqi for s in samples], dtype=np.float64)
    mean_offset = float(aqi.mean())
    k = np.exp(-((dists / length_scale) ** 2)) + regularization * np.eye(len(samples))
    try:
        weights = np.linalg.solve(k, aqi - mean_offset)
    except np.linalg.LinAlgError as err:
        raise ConditioningError(
            f"RBF system is singular even with regularization={regularization}; "
            "samples may be nearly co-located relative to the length scale"
        ) from err
    if not np.all(np.isfinite(weights)):
        raise ConditioningError("RBF solve produced non-finite weights; increase regularization")
    return AqiField(
        samples=tuple(samples),
        kernel="gaussian",
        length_scale=float(length_scale),
        weights=weights,
        mean_offset=mean_offset,
        regularization=float(regularization),
    )


def eval_field(fld: AqiField, latitude: float, longitude: float) -> float:
    """Interpolated AQI at a point, clamped to [0, 500]."""
    d = np.array(
        [haversine_m(latitude, longitude, s.latitude, s.longitude) for s in fld.samples]
    )
    value = fld.mean_offset + float(fld.weights @ np.exp(-((d / fld.length_scale) ** 2)))
    return min(500.0, max(0.0, value))


def rasterize(fld: AqiField, grid: GridSpec, cell_cap: int = DEFAULT_CELL_CAP) -> list[float]:
    """Evaluate the field at every cell center, row-major."""
    if grid.cells > cell_cap:
        raise ValueError(f"grid has {grid.cells} cells, exceeding the cap of {cell_cap}")
    values = []
    for row in range(grid.rows):
        for col in range(grid.cols):
            lat, lon = grid.cell_center(row, col)
            values.append(eval_field(fld, lat, lon))
    return values


def simulate_sensor_grid(
    center_lat: float,
    center_lon: float,
    count: int = 8,
    extent_m: float = 1000.0,
    aqi_lo: float = 20.0,
    aqi_hi: float = 70.0,
    seed: int = 0,
) -> list[AqiSample]:
    """Place virtual sensors on a jittered lattice inside a square box.

    AQI values are i.i.d. uniform on [aqi_lo, aqi_hi]; every sample lies
    within extent_m/2 of the center along each axis. Deterministic per seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if aqi_lo >= aqi_hi:
        raise ValueError("aqi_lo must be < aqi_hi")
    rng = random.Random(f"sensor-grid|{seed}")
    side = math.ceil(math.sqrt(count))
    cell = extent_m / side
    samples = []
    for i in range(count):
        row, col = divmod(i, side)
        east = -extent_m / 2.0 + (col + 0.5) * cell + rng.uniform(-0.25 * cell, 0.25 * cell)
        north = -extent_m / 2.0 + (row + 0.5) * cell + rng.uniform(-0.25 * cell, 0.25 * cell)
        lat, lon = offset_by_meters(center_lat, center_lon, east, north)
        samples.append(
            AqiSample(
                latitude=lat,
                longitude=lon,
                aqi=rng.uniform(aqi_lo, aqi_hi),
                sensor_id=f"VS{i:02d}",
            )
        )
    return samples
