"""Matrix-factorization preference model and air-quality-aware re-ranking.

Rating prediction is the classic biased dot-product form
``r = mu + b_u + b_i + p_u . q_i`` trained by per-example SGD. Ranking blends
the normalized preference score with a normalized air-quality score:
``s = alpha * s_mf + (1 - alpha) * s_aqi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import geo
from .aqi_field import AqiField, eval_field
from .errors import ConditioningError
from .geo import validate_latitude, validate_longitude

#: AQI treated as fully hazardous when normalizing s_aqi: AQI 0 scores 1.0,
#: anything at or above A_REF scores 0.0.
A_REF_DEFAULT = 300.0


@dataclass(frozen=True)
class Poi:
    id: str
    name: str
    category: str
    latitude: float
    longitude: float

    def __post_init__(self):
        if not self.id:
            raise ValueError("poi id must be non-empty")
        validate_latitude(self.latitude)
        validate_longitude(self.longitude)


@dataclass(frozen=True)
class Rating:
    user_id: str
    poi_id: str
    value: float

    def __post_init__(self):
        if not 1.0 <= self.value <= 5.0:
            raise ValueError(f"rating value out of range [1, 5]: {self.value}")


@dataclass(frozen=True, eq=False)
class MfModel:
    """Trained factorization model; treat as immutable."""

    dimension: int
    global_mean: float
    user_bias: Mapping[str, float]
    item_bias: Mapping[str, float]
    user_vecs: Mapping[str, np.ndarray]
    item_vecs: Mapping[str, np.ndarray]

    def to_dict(self) -> dict:
        return {
            "kind": "mf_model",
            "dimension": self.dimension,
            "global_mean": self.global_mean,
            "user_bias": {u: float(b) for u, b in sorted(self.user_bias.items())},
            "item_bias": {i: float(b) for i, b in sorted(self.item_bias.items())},
            "user_vecs": {u: [float(x) for x in v] for u, v in sorted(self.user_vecs.items())},
            "item_vecs": {i: [float(x) for x in v] for i, v in sorted(self.item_vecs.items())},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MfModel":
        return cls(
            dimension=doc["dimension"],
            global_mean=doc["global_mean"],
            user_bias=dict(doc["user_bias"]),
            item_bias=dict(doc["item_bias"]),
            user_vecs={u: np.asarray(v, dtype=np.float64) for u, v in doc["user_vecs"].items()},
            item_vecs={i: np.asarray(v, dtype=np.float64) for i, v in doc["item_vecs"].items()},
        )


@dataclass(frozen=True)
class RecQuery:
    user_id: str
    latitude: float
    longitude: float
    radius_m: float = 1000.0
    alpha: float = 0.5
    limit: int = 10

    def __post_init__(self):
        validate_latitude(self.latitude)
        validate_longitude(self.longitude)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha out of range [0, 1]: {self.alpha}")
        if self.radius_m <= 0:
            raise ValueError(f"radius_m must be positive: {self.radius_m}")
        if self.limit < 1:
            raise ValueError(f"limit must be >= 1: {self.limit}")


@dataclass(frozen=True)
class ScoredPoi:
    poi: Poi
    s_mf: float
    s_aqi: float
    s: float
    predicted_rating: float
    aqi_at_poi: float
    distance_m: float


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters (Earth radius 6 371 008.8 m)."""
    return geo.haversine_m(lat1, lon1, lat2, lon2)


def _sgd_epochs(
    u_idx: np.ndarray,
    i_idx: np.ndarray,
    values: np.ndarray,
    user_vecs: np.ndarray,
    item_vecs: np.ndarray,
    user_bias: np.ndarray,
    item_bias: np.ndarray,
    global_mean: float,
    epochs: int,
    lr: float,
    reg: float,
    rng: np.random.Generator,
) -> None:
    """Run SGD in place over (user, item, rating) triples.

    Example order is reshuffled each epoch from ``rng``. Shared by full
    training, federated client updates, and the baseline scenarios so every
    training path applies identical update arithmetic.
    """
    n = len(values)
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is caught below
        for epoch in range(epochs):
            order = rng.permutation(n)
            for k in order:
                u, i, r = u_idx[k], i_idx[k], values[k]
                p, q = user_vecs[u], item_vecs[i]
                err = r - (global_mean + user_bias[u] + item_bias[i] + p @ q)
                user_bias[u] += lr * (err - reg * user_bias[u])
                item_bias[i] += lr * (err - reg * item_bias[i])
                p_old = p.copy()
                p += lr * (err * q - reg * p)
                q += lr * (err * p_old - reg * q)
            if not (np.isfinite(user_bias).all() and np.isfinite(user_vecs).all()):
                raise ConditioningError(
                    f"training diverged to non-finite values at epoch {epoch}; lower the learning rate"
                )


def train_mf(
    ratings: Sequence[Rating],
    dimension: int = 16,
    lr: float = 0.01,
    reg: float = 0.02,
    epochs: int = 30,
    seed: int = 0,
) -> MfModel:
    """Train the biased MF model by SGD; deterministic for fixed inputs and seed."""
    if not ratings:
        raise ValueError("train_mf requires at least one rating")
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    user_ids: list[str] = []
    item_ids: list[str] = []
    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    for r in ratings:
        if r.user_id not in user_index:
            user_index[r.user_id] = len(user_ids)
            user_ids.append(r.user_id)
        if r.poi_id not in item_index:
            item_index[r.poi_id] = len(item_ids)
            item_ids.append(r.poi_id)
    u_idx = np.array([user_index[r.user_id] for r in ratings], dtype=np.int64)
    i_idx = np.array([item_index[r.poi_id] for r in ratings], dtype=np.int64)
    values = np.array([r.value for r in ratings], dtype=np.float64)

    rng = np.random.default_rng(seed)
    user_vecs = rng.normal(0.0, 0.1, (len(user_ids), dimension))
    item_vecs = rng.normal(0.0, 0.1, (len(item_ids), dimension))
    user_bias = np.zeros(len(user_ids))
    item_bias = np.zeros(len(item_ids))
    global_mean = float(values.mean())

    _sgd_epochs(u_idx, i_idx, values, user_vecs, item_vecs, user_bias, item_bias,
                global_mean, epochs, lr, reg, rng)

    return MfModel(
        dimension=dimension,
        global_mean=global_mean,
        user_bias={u: float(user_bias[k]) for k, u in enumerate(user_ids)},
        item_bias={i: float(item_bias[k]) for k, i in enumerate(item_ids)},
        user_vecs={u: user_vecs[k].copy() for k, u in enumerate(user_ids)},
        item_vecs={i: item_vecs[k].copy() for k, i in enumerate(item_ids)},
    )


def predict_rating(model: MfModel, user_id: str, poi_id: str) -> float:
    """Predicted rating clamped to [1, 5], with bias-only cold-start fallbacks."""
    value = model.global_mean
    known_user = user_id in model.user_vecs
    known_item = poi_id in model.item_vecs
    if known_user:
        value += model.user_bias[user_id]
    if known_item:
        value += model.item_bias[poi_id]
    if known_user and known_item:
        value += float(model.user_vecs[user_id] @ model.item_vecs[poi_id])
    return min(5.0, max(1.0, value))


def aqi_score(aqi: float, a_ref: float = A_REF_DEFAULT) -> float:
    """Normalize AQI to [0, 1]: clean air scores 1, AQI >= a_ref scores 0."""
    return (a_ref - min(aqi, a_ref)) / a_ref


def recommend(
    model: MfModel,
    fld: AqiField,
    pois: Sequence[Poi],
    query: RecQuery,
    a_ref: float = A_REF_DEFAULT,
) -> list[ScoredPoi]:
    """Radius-filter, score, and rank POIs around the query location.

    Candidates within ``radius_m`` get s_mf = (predicted_rating - 1) / 4 and
    s_aqi from the interpolated AQI, blended by alpha. Ordering is by blended
    score descending with ties broken by POI id ascending.
    """
    scored = []
    for poi in pois:
        distance = haversine_m(query.latitude, query.longitude, poi.latitude, poi.longitude)
        if distance > query.radius_m:
            continue
        predicted = predict_rating(model, query.user_id, poi.id)
        s_mf = (predicted - 1.0) / 4.0
        aqi_at_poi = eval_field(fld, poi.latitude, poi.longitude)
        s_aqi = aqi_score(aqi_at_poi, a_ref)
        scored.append(
            ScoredPoi(
                poi=poi,
                s_mf=s_mf,
                s_aqi=s_aqi,
                s=query.alpha * s_mf + (1.0 - query.alpha) * s_aqi,
                predicted_rating=predicted,
                aqi_at_poi=aqi_at_poi,
                distance_m=distance,
            )
        )
    scored.sort(key=lambda sp: (-sp.s, sp.poi.id))
    return scored[: query.limit]
