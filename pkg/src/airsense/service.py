"""HTTP API over the engine: AQI field, recommendations, ratings, FL rounds.

All read endpoints operate on an immutable EngineSnapshot that mutation paths
(rating ingestion, federated rounds) replace atomically, so a request never
observes a half-applied update. Mutations serialize through one lock; reads
never block reads.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np
from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import federated, forecast, store
from .aqi_field import AqiField, AqiSample, GridSpec, fit_field, rasterize
from .config import ServiceConfig
from .errors import AirsenseError, ConditioningError, SnapshotNotFoundError
from .forecast import TimeSeries
from .recsys import MfModel, Rating, RecQuery, recommend, train_mf
from .seeding import substream
from .sensor_ingest import AqiValue, PollutantKind, SensorReading, compute_aqi, minute_average
from .store import DataRoot

MODEL_SNAPSHOT_PREFIX = "mf-model"


@dataclass(frozen=True)
class EngineSnapshot:
    """Immutable view served to read endpoints; swapped as a whole."""

    version: int
    dataset: store.Dataset
    model: MfModel
    field: AqiField | None
    station_latest: Mapping[str, tuple[SensorReading, AqiValue] | None]
    series: Mapping[tuple[str, str], TimeSeries]


def _station_series(dataset: store.Dataset) -> tuple[dict, dict]:
    """Minute-average readings per station and derive latest AQI and series."""
    by_station: dict[str, list[SensorReading]] = {s.id: [] for s in dataset.stations}
    for r in dataset.readings:
        by_station.setdefault(r.sensor_id, []).append(r)
    latest: dict[str, tuple[SensorReading, AqiValue] | None] = {}
    series: dict[tuple[str, str], TimeSeries] = {}
    for station in dataset.stations:
        rows = sorted(by_station[station.id], key=lambda r: r.timestamp)
        if not rows:
            latest[station.id] = None
            continue
        averaged = minute_average(rows)
        newest = averaged[-1]
        latest[station.id] = (newest, compute_aqi(newest))
        timestamps = np.array([r.timestamp for r in averaged], dtype=np.float64)
        for kind in PollutantKind:
            values = np.array([r.concentrations[kind] for r in averaged])
            series[(station.id, kind.value)] = TimeSeries(station.id, kind, timestamps, values)
    return latest, series


def _fit_station_field(latest: Mapping[str, tuple[SensorReading, AqiValue] | None],
                       dataset: store.Dataset) -> AqiField | None:
    samples = []
    for station in dataset.stations:
        entry = latest.get(station.id)
        if entry is None:
            continue
        samples.append(AqiSample(station.latitude, station.longitude, entry[1].overall, station.id))
    if not samples:
        return None
    return fit_field(samples)


def _load_or_train_model(root: DataRoot, config: ServiceConfig, ratings: list[Rating]) -> MfModel:
    names = [n for n in store.list_snapshots(root) if n.startswith(MODEL_SNAPSHOT_PREFIX)]
    if names:
        return MfModel.from_dict(store.load_snapshot(root, names[-1]))
    return train_mf(
        ratings,
        dimension=config.train_dimension,
        lr=config.train_lr,
        reg=config.train_reg,
        epochs=config.train_epochs,
        seed=config.seed,
    )


def build_snapshot(root: DataRoot, config: ServiceConfig, version: int = 0,
                   model: MfModel | None = None) -> EngineSnapshot:
    dataset = store.load_all(root)
    if model is None:
        model = _load_or_train_model(root, config, dataset.ratings)
    latest, series = _station_series(dataset)
    return EngineSnapshot(
        version=version,
        dataset=dataset,
        model=model,
        field=_fit_station_field(latest, dataset),
        station_latest=latest,
        series=series,
    )


class AppState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.root = DataRoot(config.data_root)
        self.snapshot = build_snapshot(self.root, config)
        self.mutation_lock = threading.Lock()
        self.fl_clients: dict[str, federated.ClientState] = {}

    def swap_snapshot(self, snapshot: EngineSnapshot) -> None:
        self.snapshot = snapshot


# ---------------------------------------------------------------- schemas


class AqiOut(BaseModel):
    overall: float
    dominant: str
    sub_indices: dict[str, float]
    saturated: list[str]


class SensorOut(BaseModel):
    id: str
    latitude: float
    longitude: float
    label: str
    city: str
    latest_timestamp: int | None
    aqi: AqiOut | None


class GridEcho(BaseModel):
    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float
    rows: int
    cols: int


class GridOut(BaseModel):
    grid: GridEcho
    values: list[float]


class RecommendRequest(BaseModel):
    user_id: str
    lat: float = Field(ge=-90, le=90)
    lon: float = Field(ge=-180, le=180)
    radius_m: float | None = Field(default=None, gt=0)
    alpha: float | None = Field(default=None, ge=0, le=1)
    limit: int | None = Field(default=None, ge=1)


class PoiOut(BaseModel):
    id: str
    name: str
    category: str
    latitude: float
    longitude: float


class ScoredPoiOut(BaseModel):
    poi: PoiOut
    s_mf: float
    s_aqi: float
    s: float
    predicted_rating: float
    aqi_at_poi: float
    distance_m: float


class RecommendOut(BaseModel):
    model_version: int
    user_id: str
    alpha: float
    radius_m: float
    limit: int
    results: list[ScoredPoiOut]


class RatingRequest(BaseModel):
    user_id: str
    poi_id: str
    value: float = Field(ge=1, le=5)


class RatingReceipt(BaseModel):
    status: str
    user_id: str
    poi_id: str
    value: float
    total_ratings: int


class RoundReportOut(BaseModel):
    round: int
    participating_clients: list[str]
    per_client_holdout_mae: dict[str, float]
    aggregate_delta_norm: float
    model_version: int


class SeriesOut(BaseModel):
    timestamps: list[int]
    values: list[float]


class ForecastOut(BaseModel):
    sensor_id: str
    pollutant: str
    observed: SeriesOut
    predicted: SeriesOut
    residual_sigma: float


class AnomalyOut(BaseModel):
    timestamp: int
    observed: float
    expected: float
    z_score: float


class AnomaliesOut(BaseModel):
    sensor_id: str
    pollutant: str
    k_sigma: float
    anomalies: list[AnomalyOut]


class BenchmarkRow(BaseModel):
    scenario: str
    user_id: str
    median_ae: float
    mean_ae: float
    n: int


# ---------------------------------------------------------------- app


def _aqi_out(aqi: AqiValue) -> AqiOut:
    return AqiOut(
        overall=aqi.overall,
        dominant=aqi.dominant.value,
        sub_indices={k.value: v for k, v in aqi.sub_indices.items()},
        saturated=[k.value for k in aqi.saturated],
    )


def _pollutant_or_404(name: str) -> PollutantKind:
    try:
        return PollutantKind(name)
    except ValueError:
        raise HTTPException(404, f"unknown pollutant {name!r}") from None


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="airsense", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    state = AppState(config)
    app.state.engine = state

    @app.get("/api/sensors", response_model=list[SensorOut])
    def sensors():
        snap = state.snapshot
        out = []
        for station in snap.dataset.stations:
            entry = snap.station_latest.get(station.id)
            out.append(
                SensorOut(
                    id=station.id,
                    latitude=station.latitude,
                    longitude=station.longitude,
                    label=station.label,
                    city=station.city,
                    latest_timestamp=None if entry is None else entry[0].timestamp,
                    aqi=None if entry is None else _aqi_out(entry[1]),
                )
            )
        return out

    @app.get("/api/aqi/grid", response_model=GridOut)
    def aqi_grid(
        min_lat: float = Query(), min_lon: float = Query(),
        max_lat: float = Query(), max_lon: float = Query(),
        rows: int = Query(default=32), cols: int = Query(default=32),
    ):
        snap = state.snapshot
        if snap.field is None:
            raise HTTPException(409, "no AQI field available: no station has readings")
        try:
            grid = GridSpec(min_lat, min_lon, max_lat, max_lon, rows, cols)
            values = rasterize(snap.field, grid, cell_cap=config.grid_cell_cap)
        except ValueError as err:
            raise HTTPException(400, str(err)) from None
        return GridOut(grid=GridEcho(**grid.__dict__), values=values)

    @app.post("/api/recommend", response_model=RecommendOut)
    def recommend_pois(req: RecommendRequest):
        snap = state.snapshot
        if snap.field is None:
            raise HTTPException(409, "no AQI field available: no station has readings")
        try:
            query = RecQuery(
                user_id=req.user_id,
                latitude=req.lat,
                longitude=req.lon,
                radius_m=req.radius_m if req.radius_m is not None else config.default_radius_m,
                alpha=req.alpha if req.alpha is not None else config.default_alpha,
                limit=req.limit if req.limit is not None else config.default_limit,
            )
        except ValueError as err:
            raise HTTPException(400, str(err)) from None
        results = recommend(snap.model, snap.field, snap.dataset.pois, query, a_ref=config.a_ref)
        return RecommendOut(
            model_version=snap.version,
            user_id=query.user_id,
            alpha=query.alpha,
            radius_m=query.radius_m,
            limit=query.limit,
            results=[
                ScoredPoiOut(
                    poi=PoiOut(**sp.poi.__dict__),
                    s_mf=sp.s_mf,
                    s_aqi=sp.s_aqi,
                    s=sp.s,
                    predicted_rating=sp.predicted_rating,
                    aqi_at_poi=sp.aqi_at_poi,
                    distance_m=sp.distance_m,
                )
                for sp in results
            ],
        )

    @app.post("/api/ratings", response_model=RatingReceipt, status_code=201)
    def post_rating(req: RatingRequest):
        snap = state.snapshot
        if not any(p.id == req.poi_id for p in snap.dataset.pois):
            raise HTTPException(404, f"unknown poi {req.poi_id!r}")
        with state.mutation_lock:
            total = store.append_ratings(state.root, [Rating(req.user_id, req.poi_id, req.value)])
        return RatingReceipt(
            status="accepted", user_id=req.user_id, poi_id=req.poi_id,
            value=req.value, total_ratings=total,
        )

    @app.post("/api/fl/round", response_model=RoundReportOut)
    def fl_round():
        with state.mutation_lock:
            snap = state.snapshot
            ratings = store.load_all(state.root).ratings
            client_ids = _resolve_fl_clients(config, ratings)
            if not client_ids:
                raise HTTPException(409, "no federated clients registered: no users with ratings")
            round_no = snap.version + 1
            model, report = _run_service_round(state, snap.model, ratings, client_ids, round_no)
            new_snap = replace(snap, version=round_no, model=model)
            state.swap_snapshot(new_snap)
        return RoundReportOut(
            round=report.round,
            participating_clients=list(report.participating_clients),
            per_client_holdout_mae=dict(report.per_client_holdout_mae),
            aggregate_delta_norm=report.aggregate_delta_norm,
            model_version=round_no,
        )

    @app.get("/api/forecast", response_model=ForecastOut)
    def get_forecast(sensor_id: str, pollutant: str, horizon_hours: int = Query(default=24, ge=1, le=24 * 14)):
        snap = state.snapshot
        kind = _pollutant_or_404(pollutant)
        series = snap.series.get((sensor_id, kind.value))
        if series is None:
            raise HTTPException(404, f"no readings for sensor {sensor_id!r}")
        try:
            model = forecast.fit(
                series,
                k_daily=config.forecast_k_daily,
                k_weekly=config.forecast_k_weekly,
                n_changepoints=config.forecast_changepoints,
            )
        except (ValueError, ConditioningError) as err:
            raise HTTPException(400, str(err)) from None
        step = 60.0
        horizon = np.arange(series.timestamps[-1] + step,
                            series.timestamps[-1] + horizon_hours * 3600.0 + step, step)
        predicted_t = np.concatenate([series.timestamps, horizon])
        predicted_v = forecast.predict(model, predicted_t)
        return ForecastOut(
            sensor_id=sensor_id,
            pollutant=kind.value,
            observed=SeriesOut(
                timestamps=[int(t) for t in series.timestamps],
                values=[float(v) for v in series.values],
            ),
            predicted=SeriesOut(
                timestamps=[int(t) for t in predicted_t],
                values=[float(v) for v in predicted_v],
            ),
            residual_sigma=model.residual_sigma,
        )

    @app.get("/api/anomalies", response_model=AnomaliesOut)
    def get_anomalies(sensor_id: str, pollutant: str, k_sigma: float = Query(default=None, gt=0)):
        snap = state.snapshot
        kind = _pollutant_or_404(pollutant)
        series = snap.series.get((sensor_id, kind.value))
        if series is None:
            raise HTTPException(404, f"no readings for sensor {sensor_id!r}")
        k = k_sigma if k_sigma is not None else config.anomaly_k_sigma
        try:
            model = forecast.fit(
                series,
                k_daily=config.forecast_k_daily,
                k_weekly=config.forecast_k_weekly,
                n_changepoints=config.forecast_changepoints,
            )
        except (ValueError, ConditioningError) as err:
            raise HTTPException(400, str(err)) from None
        anomalies = forecast.detect_anomalies(model, series, k)
        return AnomaliesOut(
            sensor_id=sensor_id,
            pollutant=kind.value,
            k_sigma=k,
            anomalies=[
                AnomalyOut(
                    timestamp=int(a.timestamp), observed=a.observed,
                    expected=a.expected, z_score=a.z_score,
                )
                for a in anomalies
            ],
        )

    @app.get("/api/benchmark/summary", response_model=list[BenchmarkRow])
    def benchmark_summary():
        path = state.root.path / config.benchmark_dir / "summary.csv"
        if not path.exists():
            raise HTTPException(404, f"no benchmark summary at {path}; run the fl-bench command first")
        return [BenchmarkRow(**row) for row in federated.read_benchmark_summary(str(path))]

    return app


def _resolve_fl_clients(config: ServiceConfig, ratings: list[Rating]) -> list[str]:
    if config.fl_clients == "top3":
        return federated.top_rated_users(ratings, 3)
    if isinstance(config.fl_clients, list):
        return list(config.fl_clients)
    raise ValueError(f"bad fl_clients config: {config.fl_clients!r}")


def _run_service_round(
    state: AppState,
    model: MfModel,
    ratings: list[Rating],
    client_ids: list[str],
    round_no: int,
) -> tuple[MfModel, federated.RoundReport]:
    """One synchronous round against the served model's item tables.

    Client private state persists across rounds in process memory; ratings
    are re-read from the store each round so newly submitted ratings join the
    next round's training data.
    """
    config = state.config
    cfg = federated.FlConfig(
        rounds=1,
        local_epochs=config.fl_local_epochs,
        lr=config.fl_lr,
        reg=config.fl_reg,
        dimension=model.dimension,
        seed=config.seed,
        holdout_frac=config.fl_holdout_frac,
    )
    item_vecs = {p: np.asarray(v, dtype=np.float64).copy() for p, v in model.item_vecs.items()}
    item_bias = dict(model.item_bias)
    updates = []
    participants = []
    for user_id in sorted(client_ids):
        client = state.fl_clients.get(user_id)
        own = tuple(r for r in ratings if r.user_id == user_id)
        if not own:
            continue
        if client is None or client.local_ratings != own:
            client = federated.make_client(user_id, ratings, cfg)
            if user_id in model.user_vecs:
                client.user_vec = np.asarray(model.user_vecs[user_id], dtype=np.float64).copy()
                client.user_bias = float(model.user_bias[user_id])
            state.fl_clients[user_id] = client
        for pid in {r.poi_id for r in client.train_ratings}:
            if pid not in item_vecs:
                item_vecs[pid] = substream(cfg.seed, "item-init", pid).normal(0.0, 0.1, cfg.dimension)
                item_bias[pid] = 0.0
        update = federated.client_local_update(
            client, item_vecs, item_bias, model.global_mean,
            cfg.local_epochs, cfg.lr, cfg.reg,
            substream(cfg.seed, "round", round_no, user_id),
        )
        if update is None:
            continue
        participants.append(user_id)
        updates.append(update)
    norm = 0.0
    if updates:
        aggregate = federated.fedavg(updates)
        for pid in sorted(aggregate.item_vec_deltas):
            item_vecs[pid] = item_vecs[pid] + aggregate.item_vec_deltas[pid]
            item_bias[pid] = item_bias[pid] + aggregate.item_bias_deltas[pid]
        norm = federated.delta_norm(aggregate)
    mae = {}
    for user_id in participants:
        client = state.fl_clients[user_id]
        errors = federated._client_holdout_abs_errors(client, item_vecs, item_bias, model.global_mean)
        mae[user_id] = float(np.mean(errors)) if errors else float("nan")
    new_model = MfModel(
        dimension=model.dimension,
        global_mean=model.global_mean,
        user_bias=model.user_bias,
        item_bias=item_bias,
        user_vecs=model.user_vecs,
        item_vecs=item_vecs,
    )
    report = federated.RoundReport(round_no, tuple(participants), mae, norm)
    return new_model, report
