"""File-backed persistence: CSV datasets, JSON snapshots, hashed manifest.

Layout under a data root:

    stations.csv  readings.csv  pois.csv  ratings.csv
    snapshots/<name>.json
    manifest.json

The manifest records a sha256 and row count per file; any single-byte
mutation is detected on load. Writers serialize through an advisory lock
file; readers work on immutable snapshots of the loaded data.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field, replace
from datetime import date as Date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from filelock import FileLock

from .errors import (
    CorruptionError,
    CsvFormatError,
    IntegrityError,
    RowValidationError,
    SnapshotExistsError,
    SnapshotNotFoundError,
    StoreError,
)
from .geo import offset_by_meters
from .aqi_field import simulate_sensor_grid
from .recsys import Poi, Rating
from .seeding import substream
from .sensor_ingest import (
    PollutantKind,
    SensorReading,
    SensorStation,
    SpikeEvent,
    parse_readings,
    simulate_city_day,
    write_readings,
)

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
DATASET_FILES = ("stations.csv", "readings.csv", "pois.csv", "ratings.csv")

STATIONS_HEADER = "id,latitude,longitude,label,city"
POIS_HEADER = "id,name,category,latitude,longitude"
RATINGS_HEADER = "user_id,poi_id,value"

BARI_CENTER = (41.1258, 16.8674)

POI_CATEGORIES = ("restaurant", "cafe", "bar", "park", "museum", "shop", "bakery", "gallery")


@dataclass
class Dataset:
    stations: list[SensorStation]
    readings: list[SensorReading]
    pois: list[Poi]
    ratings: list[Rating]


@dataclass(frozen=True)
class DataRoot:
    """Handle to an on-disk dataset directory."""

    path: Path

    def __init__(self, path: str | Path):
        object.__setattr__(self, "path", Path(path))

    def file(self, name: str) -> Path:
        return self.path / name

    @property
    def snapshots_dir(self) -> Path:
        return self.path / "snapshots"

    @property
    def lock(self) -> FileLock:
        return FileLock(str(self.path / ".airsense.lock"))


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_manifest(root: DataRoot) -> dict:
    manifest_path = root.file(MANIFEST_NAME)
    if not manifest_path.exists():
        raise StoreError(f"manifest not found: {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("version") != MANIFEST_VERSION:
        raise StoreError(f"unrecognized manifest version: {manifest.get('version')!r}")
    return manifest


def _write_manifest(root: DataRoot, manifest: dict) -> None:
    # Insertion order is preserved deliberately: snapshot listing order is
    # write order, and identical operation sequences yield identical bytes.
    manifest["version"] = MANIFEST_VERSION
    root.file(MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def _verified_bytes(root: DataRoot, manifest: dict, name: str) -> bytes:
    entry = manifest.get("files", {}).get(name)
    if entry is None:
        raise StoreError(f"{name} missing from manifest")
    path = root.file(name)
    if not path.exists():
        raise StoreError(f"dataset file not found: {path}")
    data = path.read_bytes()
    if _sha256(data) != entry["sha256"]:
        raise CorruptionError(f"{name} does not match its manifest hash")
    return data


def _stations_csv(stations: Sequence[SensorStation]) -> str:
    out = [STATIONS_HEADER]
    for s in stations:
        out.append(f"{s.id},{s.latitude!r},{s.longitude!r},{s.label},{s.city}")
    return "\n".join(out) + "\n"


def _pois_csv(pois: Sequence[Poi]) -> str:
    out = [POIS_HEADER]
    for p in pois:
        out.append(f"{p.id},{p.name},{p.category},{p.latitude!r},{p.longitude!r}")
    return "\n".join(out) + "\n"


def _ratings_csv(ratings: Sequence[Rating]) -> str:
    out = [RATINGS_HEADER]
    for r in ratings:
        out.append(f"{r.user_id},{r.poi_id},{r.value!r}")
    return "\n".join(out) + "\n"


def _parse_stations(text: str) -> list[SensorStation]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != STATIONS_HEADER:
        raise CsvFormatError(f"bad stations header: {lines[0]!r}" if lines else "empty stations.csv")
    stations = []
    seen = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise RowValidationError(line_no, "row", f"expected 5 fields, got {len(parts)}")
        try:
            station = SensorStation(parts[0], float(parts[1]), float(parts[2]), parts[3], parts[4])
        except ValueError as err:
            raise RowValidationError(line_no, "station", str(err)) from None
        if station.id in seen:
            raise RowValidationError(line_no, "id", f"duplicate station id {station.id}")
        seen.add(station.id)
        stations.append(station)
    return stations


def _parse_pois(text: str) -> list[Poi]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != POIS_HEADER:
        raise CsvFormatError(f"bad pois header: {lines[0]!r}" if lines else "empty pois.csv")
    pois = []
    seen = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise RowValidationError(line_no, "row", f"expected 5 fields, got {len(parts)}")
        try:
            poi = Poi(parts[0], parts[1], parts[2], float(parts[3]), float(parts[4]))
        except ValueError as err:
            raise RowValidationError(line_no, "poi", str(err)) from None
        if poi.id in seen:
            raise RowValidationError(line_no, "id", f"duplicate poi id {poi.id}")
        seen.add(poi.id)
        pois.append(poi)
    return pois


def _parse_ratings(text: str) -> list[Rating]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != RATINGS_HEADER:
        raise CsvFormatError(f"bad ratings header: {lines[0]!r}" if lines else "empty ratings.csv")
    ratings = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise RowValidationError(line_no, "row", f"expected 3 fields, got {len(parts)}")
        try:
            ratings.append(Rating(parts[0], parts[1], float(parts[2])))
        except ValueError as err:
            raise RowValidationError(line_no, "rating", str(err)) from None
    return ratings


def save_all(root: DataRoot, dataset: Dataset) -> None:
    """Write all dataset CSVs and refresh the manifest (keeping snapshots)."""
    root.path.mkdir(parents=True, exist_ok=True)
    with root.lock:
        try:
            manifest = _read_manifest(root)
        except StoreError:
            manifest = {"files": {}, "snapshots": {}}
        texts = {
            "stations.csv": _stations_csv(dataset.stations),
            "readings.csv": write_readings(dataset.readings),
            "pois.csv": _pois_csv(dataset.pois),
            "ratings.csv": _ratings_csv(dataset.ratings),
        }
        rows = {
            "stations.csv": len(dataset.stations),
            "readings.csv": len(dataset.readings),
            "pois.csv": len(dataset.pois),
            "ratings.csv": len(dataset.ratings),
        }
        for name, text in texts.items():
            data = text.encode("utf-8")
            root.file(name).write_bytes(data)
            manifest.setdefault("files", {})[name] = {"rows": rows[name], "sha256": _sha256(data)}
        _write_manifest(root, manifest)


def load_all(root: DataRoot) -> Dataset:
    """Load and validate the full dataset; hashes and references are checked."""
    manifest = _read_manifest(root)
    texts = {name: _verified_bytes(root, manifest, name).decode("utf-8") for name in DATASET_FILES}
    stations = _parse_stations(texts["stations.csv"])
    readings = parse_readings(texts["readings.csv"])
    pois = _parse_pois(texts["pois.csv"])
    ratings = _parse_ratings(texts["ratings.csv"])
    station_ids = {s.id for s in stations}
    poi_ids = {p.id for p in pois}
    bad_sensors = sorted({r.sensor_id for r in readings if r.sensor_id not in station_ids})
    if bad_sensors:
        raise IntegrityError(f"readings reference unknown stations: {bad_sensors}")
    bad_pois = sorted({r.poi_id for r in ratings if r.poi_id not in poi_ids})
    if bad_pois:
        raise IntegrityError(f"ratings reference unknown pois: {bad_pois}")
    return Dataset(stations=stations, readings=readings, pois=pois, ratings=ratings)


def append_ratings(root: DataRoot, new_ratings: Sequence[Rating]) -> int:
    """Append validated ratings to ratings.csv and update the manifest."""
    with root.lock:
        manifest = _read_manifest(root)
        text = _verified_bytes(root, manifest, "ratings.csv").decode("utf-8")
        ratings = _parse_ratings(text)
        ratings.extend(new_ratings)
        data = _ratings_csv(ratings).encode("utf-8")
        root.file("ratings.csv").write_bytes(data)
        manifest["files"]["ratings.csv"] = {"rows": len(ratings), "sha256": _sha256(data)}
        _write_manifest(root, manifest)
        return len(ratings)


def append_readings(root: DataRoot, new_readings: Sequence[SensorReading]) -> int:
    """Append validated readings to readings.csv and update the manifest."""
    with root.lock:
        manifest = _read_manifest(root)
        text = _verified_bytes(root, manifest, "readings.csv").decode("utf-8")
        readings = parse_readings(text)
        readings.extend(new_readings)
        data = write_readings(readings).encode("utf-8")
        root.file("readings.csv").write_bytes(data)
        manifest["files"]["readings.csv"] = {"rows": len(readings), "sha256": _sha256(data)}
        _write_manifest(root, manifest)
        return len(readings)


def save_snapshot(root: DataRoot, name: str, document: Mapping) -> None:
    """Write an immutable named JSON snapshot; names are write-once."""
    if not name or "/" in name or name != name.strip():
        raise ValueError(f"bad snapshot name: {name!r}")
    with root.lock:
        manifest = _read_manifest(root)
        snapshots = manifest.setdefault("snapshots", {})
        if name in snapshots:
            raise SnapshotExistsError(f"snapshot {name!r} already exists; pick a new name per version")
        root.snapshots_dir.mkdir(parents=True, exist_ok=True)
        data = (json.dumps(document, indent=2, sort_keys=True) + "\n").encode("utf-8")
        root.snapshots_dir.joinpath(f"{name}.json").write_bytes(data)
        snapshots[name] = {"sha256": _sha256(data)}
        _write_manifest(root, manifest)


def load_snapshot(root: DataRoot, name: str) -> dict:
    manifest = _read_manifest(root)
    entry = manifest.get("snapshots", {}).get(name)
    if entry is None:
        raise SnapshotNotFoundError(f"no snapshot named {name!r}")
    path = root.snapshots_dir / f"{name}.json"
    if not path.exists():
        raise StoreError(f"snapshot file missing: {path}")
    data = path.read_bytes()
    if _sha256(data) != entry["sha256"]:
        raise CorruptionError(f"snapshot {name!r} does not match its manifest hash")
    return json.loads(data.decode("utf-8"))


def list_snapshots(root: DataRoot) -> list[str]:
    """Snapshot names in the order they were written."""
    return list(_read_manifest(root).get("snapshots", {}).keys())


@dataclass(frozen=True)
class DemoSpec:
    """Parameters of the synthetic city dataset.

    Defaults reproduce the documented corpus statistics: 11 606 ratings from
    8 982 users over 2 594 POIs, with an 8-sensor virtual grid. The first two
    users are personas with strongly opposed planted tastes over the POIs
    closest to the city center, which demo scenarios rely on.
    """

    n_users: int = 8982
    n_pois: int = 2594
    n_ratings: int = 11606
    rank: int = 4
    noise: float = 0.35
    seed: int = 0
    n_stations: int = 8
    station_extent_m: float = 1000.0
    center_lat: float = BARI_CENTER[0]
    center_lon: float = BARI_CENTER[1]
    poi_scatter_m: float = 1500.0
    readings_date: Date = Date(2024, 6, 3)
    spike: bool = True
    persona_ratings: int = 15
    signal_scale: float = 1.1
    item_quality_scale: float = 0.6


PERSONA_USER_IDS = ("u00000", "u00001")


def _quantize(raw: np.ndarray | float) -> float:
    return float(min(5.0, max(1.0, round(float(raw)))))


def generate_demo_dataset(spec: DemoSpec = DemoSpec()) -> Dataset:
    """Build the synthetic dataset: stations, one day of readings, POIs, ratings.

    Ratings carry a planted low-rank structure quantized to 1-5. Every user
    and every POI appears at least once, extra ratings follow a heavy-tailed
    per-user distribution, and exact totals match the spec. Deterministic per
    seed.
    """
    if spec.n_ratings > spec.n_users * spec.n_pois:
        raise ValueError("n_ratings exceeds the number of distinct (user, poi) pairs")
    min_needed = max(spec.n_users, spec.n_pois) + (
        2 * spec.persona_ratings if spec.n_users >= 2 else 0
    )
    if spec.n_ratings < min_needed:
        raise ValueError(
            f"n_ratings={spec.n_ratings} too small to cover every user and poi "
            f"plus personas (need >= {min_needed})"
        )

    user_ids = [f"u{i:05d}" for i in range(spec.n_users)]
    poi_ids = [f"p{i:05d}" for i in range(spec.n_pois)]

    # POI placement and metadata.
    rng_poi = substream(spec.seed, "pois")
    east = rng_poi.normal(0.0, spec.poi_scatter_m, spec.n_pois)
    north = rng_poi.normal(0.0, spec.poi_scatter_m, spec.n_pois)
    pois = []
    for k, pid in enumerate(poi_ids):
        lat, lon = offset_by_meters(spec.center_lat, spec.center_lon, float(east[k]), float(north[k]))
        category = POI_CATEGORIES[k % len(POI_CATEGORIES)]
        pois.append(Poi(pid, f"{category.title()} {k:04d}", category, lat, lon))

    # Planted preference structure: per-item quality plus low-rank tastes.
    rng_factors = substream(spec.seed, "factors")
    user_factors = rng_factors.normal(0.0, 1.0, (spec.n_users, spec.rank)) / math.sqrt(spec.rank)
    item_factors = rng_factors.normal(0.0, 1.0, (spec.n_pois, spec.rank)) / math.sqrt(spec.rank)
    item_quality = rng_factors.normal(0.0, spec.item_quality_scale, spec.n_pois)
    if spec.n_users >= 2:
        # Personas: opposite tastes along the first planted axis.
        user_factors[0] = 0.0
        user_factors[1] = 0.0
        user_factors[0, 0] = 1.8
        user_factors[1, 0] = -1.8

    rng_noise = substream(spec.seed, "noise")

    def planted_value(u: int, i: int) -> float:
        raw = 3.0 + float(item_quality[i]) + spec.signal_scale * float(user_factors[u] @ item_factors[i])
        return _quantize(raw + spec.noise * float(rng_noise.normal()))

    pairs: set[tuple[int, int]] = set()
    triples: list[tuple[int, int]] = []

    def add_pair(u: int, i: int) -> bool:
        if (u, i) in pairs:
            return False
        pairs.add((u, i))
        triples.append((u, i))
        return True

    # Coverage: one rating per user, cycling a POI permutation so POIs are
    # covered too whenever n_users >= n_pois.
    rng_pairs = substream(spec.seed, "pairs")
    poi_perm = rng_pairs.permutation(spec.n_pois)
    for u in range(spec.n_users):
        add_pair(u, int(poi_perm[u % spec.n_pois]))
    uncovered = set(range(spec.n_pois)) - {i for _, i in triples}
    for i in sorted(uncovered):
        while not add_pair(int(rng_pairs.integers(spec.n_users)), i):
            pass

    # Personas rate the POIs nearest the center (the demo's candidate set).
    if spec.n_users >= 2 and spec.persona_ratings > 0:
        center_order = np.argsort(east**2 + north**2)
        for u in (0, 1):
            added = 0
            for i in center_order:
                if added >= spec.persona_ratings:
                    break
                if add_pair(u, int(i)):
                    added += 1

    # Heavy-tailed fill up to the exact total.
    weights = np.exp(substream(spec.seed, "activity").normal(0.0, 1.8, spec.n_users))
    weights /= weights.sum()
    while len(triples) < spec.n_ratings:
        batch = spec.n_ratings - len(triples)
        users = rng_pairs.choice(spec.n_users, size=batch, p=weights)
        items = rng_pairs.integers(spec.n_pois, size=batch)
        for u, i in zip(users, items):
            if len(triples) >= spec.n_ratings:
                break
            add_pair(int(u), int(i))

    ratings = [Rating(user_ids[u], poi_ids[i], planted_value(u, i)) for u, i in triples]

    # Stations on the virtual grid, plus one synthetic day of readings.
    grid = simulate_sensor_grid(
        spec.center_lat, spec.center_lon, count=spec.n_stations,
        extent_m=spec.station_extent_m, seed=spec.seed,
    )
    stations = [
        SensorStation(s.sensor_id or f"VS{k:02d}", s.latitude, s.longitude,
                      f"Virtual sensor {k}", "Bari")
        for k, s in enumerate(grid)
    ]
    spike = None
    if spec.spike and stations:
        spike = SpikeEvent(sensor_id=stations[min(4, len(stations) - 1)].id)
    readings = simulate_city_day(stations, spec.readings_date, spec.seed, spike=spike)

    return Dataset(stations=stations, readings=readings, pois=pois, ratings=ratings)
