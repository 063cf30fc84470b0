"""Sensor reading ingestion: CSV parsing, minute averaging, AQI, synthetic days.

Unit convention is fixed at ingestion: gas concentrations in ppb, particulate
concentrations in ug/m3. The AQI breakpoint table ships in the same units so
no per-reading conversion is needed.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime, timezone
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .errors import CsvFormatError, RowValidationError
from .geo import validate_latitude, validate_longitude


class PollutantKind(Enum):
    CO = "co"
    NO = "no"
    NO2 = "no2"
    O3 = "o3"
    SO2 = "so2"
    PM1 = "pm1"
    PM2_5 = "pm2_5"
    PM10 = "pm10"


#: Pollutants carrying an AQI sub-index. NO and PM1 are measured, stored, and
#: forecastable, but have no band in the shipped breakpoint table.
AQI_POLLUTANTS = (
    PollutantKind.PM2_5,
    PollutantKind.PM10,
    PollutantKind.NO2,
    PollutantKind.O3,
    PollutantKind.SO2,
    PollutantKind.CO,
)

READINGS_HEADER = "sensor_id,timestamp,co,no,no2,o3,so2,pm1,pm2_5,pm10,temperature,humidity,pressure"

_POLLUTANT_COLUMNS = [
    PollutantKind.CO,
    PollutantKind.NO,
    PollutantKind.NO2,
    PollutantKind.O3,
    PollutantKind.SO2,
    PollutantKind.PM1,
    PollutantKind.PM2_5,
    PollutantKind.PM10,
]


@dataclass(frozen=True)
class SensorStation:
    """A fixed monitoring station."""

    id: str
    latitude: float
    longitude: float
    label: str = ""
    city: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("station id must be non-empty")
        validate_latitude(self.latitude)
        validate_longitude(self.longitude)


@dataclass(frozen=True)
class SensorReading:
    """One timestamped multi-pollutant measurement from one station."""

    sensor_id: str
    timestamp: int
    concentrations: Mapping[PollutantKind, float]
    temperature: float
    humidity: float
    pressure: float

    def __post_init__(self):
        if self.timestamp <= 0:
            raise ValueError(f"timestamp must be positive, got {self.timestamp}")
        missing = [p for p in PollutantKind if p not in self.concentrations]
        if missing:
            raise ValueError(f"missing concentrations for {[p.value for p in missing]}")
        for kind, value in self.concentrations.items():
            if value < 0:
                raise ValueError(f"{kind.value} concentration must be >= 0, got {value}")
        if not 0.0 <= self.humidity <= 100.0:
            raise ValueError(f"humidity out of range [0, 100]: {self.humidity}")


@dataclass(frozen=True)
class AqiValue:
    """Composite AQI: maximum of per-pollutant sub-indices.

    ``saturated`` lists pollutants whose concentration exceeded the top
    breakpoint; their sub-index is clamped to 500.
    """

    overall: float
    dominant: PollutantKind
    sub_indices: Mapping[PollutantKind, float]
    saturated: tuple[PollutantKind, ...] = ()


class BreakpointBand(NamedTuple):
    c_lo: float
    c_hi: float
    i_lo: float
    i_hi: float


BreakpointTable = Mapping[PollutantKind, tuple[BreakpointBand, ...]]


def load_breakpoint_table(path: str | None = None) -> BreakpointTable:
    """Load a breakpoint table CSV (``pollutant,c_lo,c_hi,i_lo,i_hi``).

    With no path, the packaged table is used. Bands per pollutant must be
    sorted, contiguous, and start at the pollutant's minimum concentration.
    """
    if path is None:
        text = resources.files("airsense.data").joinpath("aqi_breakpoints.csv").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    table: dict[PollutantKind, list[BreakpointBand]] = {}
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["pollutant", "c_lo", "c_hi", "i_lo", "i_hi"]:
        raise CsvFormatError(f"bad breakpoint table header: {reader.fieldnames}")
    for row in reader:
        kind = PollutantKind(row["pollutant"])
        band = BreakpointBand(
            float(row["c_lo"]), float(row["c_hi"]), float(row["i_lo"]), float(row["i_hi"])
        )
        table.setdefault(kind, []).append(band)
    for kind, bands in table.items():
        for prev, cur in zip(bands, bands[1:]):
            if not math.isclose(prev.c_hi, cur.c_lo) or prev.i_hi > cur.i_lo:
                raise CsvFormatError(f"non-contiguous bands for {kind.value}")
    return {kind: tuple(bands) for kind, bands in table.items()}


@lru_cache(maxsize=1)
def default_breakpoint_table() -> BreakpointTable:
    return load_breakpoint_table()


def sub_index(kind: PollutantKind, concentration: float, table: BreakpointTable | None = None) -> tuple[float, bool]:
    """Piecewise-linear sub-index for one pollutant.

    Returns ``(index, saturated)``; above the top band the index clamps to
    500 and ``saturated`` is True.
    """
    bands = (table or default_breakpoint_table()).get(kind)
    if bands is None:
        raise ValueError(f"{kind.value} has no breakpoint bands")
    if concentration > bands[-1].c_hi:
        return 500.0, True
    for band in bands:
        if band.c_lo <= concentration <= band.c_hi:
            slope = (band.i_hi - band.i_lo) / (band.c_hi - band.c_lo)
            return band.i_lo + slope * (concentration - band.c_lo), False
    raise ValueError(f"{kind.value} concentration below table range: {concentration}")


def concentration_for_sub_index(kind: PollutantKind, target: float, table: BreakpointTable | None = None) -> float:
    """Inverse of :func:`sub_index`; used by the synthetic generators."""
    bands = (table or default_breakpoint_table()).get(kind)
    if bands is None:
        raise ValueError(f"{kind.value} has no breakpoint bands")
    if not 0.0 <= target <= 500.0:
        raise ValueError(f"target sub-index out of range [0, 500]: {target}")
    for band in bands:
        if band.i_lo <= target <= band.i_hi:
            slope = (band.c_hi - band.c_lo) / (band.i_hi - band.i_lo)
            return band.c_lo + slope * (target - band.i_lo)
    return bands[-1].c_hi


def compute_aqi(reading: SensorReading, table: BreakpointTable | None = None) -> AqiValue:
    """AQI of one reading: max over per-pollutant sub-indices.

    Only the six pollutants in ``AQI_POLLUTANTS`` contribute; NO and PM1 are
    retained in the reading but excluded from the index.
    """
    table = table or default_breakpoint_table()
    subs: dict[PollutantKind, float] = {}
    saturated: list[PollutantKind] = []
    for kind in AQI_POLLUTANTS:
        value, clamped = sub_index(kind, reading.concentrations[kind], table)
        subs[kind] = value
        if clamped:
            saturated.append(kind)
    dominant = max(AQI_POLLUTANTS, key=lambda k: subs[k])
    return AqiValue(
        overall=subs[dominant],
        dominant=dominant,
        sub_indices=subs,
        saturated=tuple(saturated),
    )


def _parse_float(raw: str, line_no: int, name: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise RowValidationError(line_no, name, f"not a number: {raw!r}") from None
    if math.isnan(value) or math.isinf(value):
        raise RowValidationError(line_no, name, f"not finite: {raw!r}")
    return value


def parse_readings(
    stream: Iterable[str] | str,
    on_invalid: Callable[[RowValidationError], None] | None = None,
) -> list[SensorReading]:
    """Parse readings-CSV lines into validated readings.

    By default the first invalid data line raises :class:`RowValidationError`.
    Passing ``on_invalid`` switches to collect mode: the callback receives
    each error and the offending line is skipped, so bad rows are reported
    rather than silently dropped.
    """
    lines = stream.splitlines() if isinstance(stream, str) else [ln.rstrip("\r\n") for ln in stream]
    if not lines:
        raise CsvFormatError("empty stream: missing readings header")
    if lines[0].strip() != READINGS_HEADER:
        raise CsvFormatError(f"bad readings header: {lines[0]!r}")
    names = READINGS_HEADER.split(",")
    readings: list[SensorReading] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            readings.append(_parse_reading_line(line, line_no, names))
        except RowValidationError as err:
            if on_invalid is None:
                raise
            on_invalid(err)
    return readings


def _parse_reading_line(line: str, line_no: int, names: Sequence[str]) -> SensorReading:
    parts = line.split(",")
    if len(parts) != len(names):
        raise RowValidationError(line_no, "row", f"expected {len(names)} fields, got {len(parts)}")
    sensor_id = parts[0].strip()
    if not sensor_id:
        raise RowValidationError(line_no, "sensor_id", "must be non-empty")
    try:
        timestamp = int(parts[1])
    except ValueError:
        raise RowValidationError(line_no, "timestamp", f"not an integer: {parts[1]!r}") from None
    if timestamp <= 0:
        raise RowValidationError(line_no, "timestamp", f"must be positive, got {timestamp}")
    concentrations: dict[PollutantKind, float] = {}
    for kind, raw in zip(_POLLUTANT_COLUMNS, parts[2:10]):
        value = _parse_float(raw, line_no, kind.value)
        if value < 0:
            raise RowValidationError(line_no, kind.value, f"concentration must be >= 0, got {value}")
        concentrations[kind] = value
    temperature = _parse_float(parts[10], line_no, "temperature")
    humidity = _parse_float(parts[11], line_no, "humidity")
    if not 0.0 <= humidity <= 100.0:
        raise RowValidationError(line_no, "humidity", f"out of range [0, 100]: {humidity}")
    pressure = _parse_float(parts[12], line_no, "pressure")
    return SensorReading(
        sensor_id=sensor_id,
        timestamp=timestamp,
        concentrations=concentrations,
        temperature=temperature,
        humidity=humidity,
        pressure=pressure,
    )


def write_readings(readings: Iterable[SensorReading]) -> str:
    """Serialize readings to readings-CSV text (inverse of parse_readings).

    Floats use ``repr`` so a parse round-trip reproduces values exactly.
    """
    out = [READINGS_HEADER]
    for r in readings:
        cols = [r.sensor_id, str(r.timestamp)]
        cols += [repr(r.concentrations[k]) for k in _POLLUTANT_COLUMNS]
        cols += [repr(r.temperature), repr(r.humidity), repr(r.pressure)]
        out.append(",".join(cols))
    return "\n".join(out) + "\n"


def minute_average(readings: Sequence[SensorReading]) -> list[SensorReading]:
    """Average readings of one sensor into UTC-minute buckets.

    Every numeric field becomes the arithmetic mean of its bucket; output
    timestamps are bucket starts. Partial buckets at the stream edges are
    emitted. Idempotent on already-averaged series.
    """
    if not readings:
        return []
    sensor_ids = {r.sensor_id for r in readings}
    if len(sensor_ids) > 1:
        raise ValueError(f"minute_average requires a single sensor, got {sorted(sensor_ids)}")
    buckets: dict[int, list[SensorReading]] = {}
    for r in readings:
        buckets.setdefault(r.timestamp // 60, []).append(r)
    out = []
    for bucket in sorted(buckets):
        group = buckets[bucket]
        n = len(group)
        out.append(
            SensorReading(
                sensor_id=group[0].sensor_id,
                timestamp=bucket * 60,
                concentrations={
                    k: sum(r.concentrations[k] for r in group) / n for k in PollutantKind
                },
                temperature=sum(r.temperature for r in group) / n,
                humidity=sum(r.humidity for r in group) / n,
                pressure=sum(r.pressure for r in group) / n,
            )
        )
    return out


@dataclass(frozen=True)
class SpikeEvent:
    """A localized pollution spike injected into a synthetic day."""

    sensor_id: str
    pollutant: PollutantKind = PollutantKind.NO
    start_minute: int = 18 * 60
    duration_minutes: int = 5
    magnitude: float = 150.0


def _bump(hour: float, center: float, width: float) -> float:
    return math.exp(-0.5 * ((hour - center) / width) ** 2)


def simulate_city_day(
    stations: Sequence[SensorStation],
    day: Date,
    seed: int,
    spike: SpikeEvent | None = None,
    noise_scale: float = 1.0,
) -> list[SensorReading]:
    """Generate one synthetic day of minute-resolution readings.

    Each station gets a PM2.5 level that pins its AQI near a per-station
    value in the 20-70 range, NO2/NO rush-hour peaks around 06:00 and 18:30,
    a midday O3 bump, and low SO2/CO floors. Deterministic per
    ``(seed, day, station id)``; ``noise_scale=0`` gives smooth curves.
    """
    if not stations:
        raise ValueError("simulate_city_day requires at least one station")
    day_start = int(datetime(day.year, day.month, day.day, tzinfo=timezone.utc).timestamp())
    readings: list[SensorReading] = []
    for station in stations:
        rng = random.Random(f"{seed}|{day.isoformat()}|{station.id}")
        aqi_level = rng.uniform(25.0, 65.0)
        pm25_base = concentration_for_sub_index(PollutantKind.PM2_5, aqi_level)
        no2_peak = concentration_for_sub_index(PollutantKind.NO2, aqi_level - 8.0)
        no2_base = concentration_for_sub_index(PollutantKind.NO2, (aqi_level - 8.0) * 0.35)
        no_peak = 0.6 * no2_peak
        no_base = 0.3 * no2_base
        o3_high = concentration_for_sub_index(PollutantKind.O3, (aqi_level - 8.0) * 0.8)
        o3_low = 0.3 * o3_high
        so2_level = concentration_for_sub_index(PollutantKind.SO2, rng.uniform(3.0, 8.0))
        co_level = concentration_for_sub_index(PollutantKind.CO, rng.uniform(2.0, 9.0))
        for minute in range(1440):
            hour = minute / 60.0
            rush = _bump(hour, 6.0, 1.5) + 0.9 * _bump(hour, 18.5, 1.8)
            midday = _bump(hour, 14.0, 3.0)
            diurnal = math.sin(2.0 * math.pi * (hour - 9.0) / 24.0)

            def noisy(base: float, sigma: float) -> float:
                return max(0.0, base + rng.gauss(0.0, sigma) * noise_scale)

            concentrations = {
                PollutantKind.PM2_5: noisy(pm25_base * (1.0 + 0.02 * diurnal), 0.15),
                PollutantKind.PM1: noisy(pm25_base * 0.6, 0.1),
                PollutantKind.PM10: noisy(pm25_base * 1.6, 0.3),
                PollutantKind.NO2: noisy(no2_base + (no2_peak - no2_base) * rush, 0.02 * no2_peak),
                PollutantKind.NO: noisy(no_base + (no_peak - no_base) * rush, 0.02 * no_peak),
                PollutantKind.O3: noisy(o3_low + (o3_high - o3_low) * midday, 0.02 * o3_high),
                PollutantKind.SO2: noisy(so2_level, 0.02 * so2_level),
                PollutantKind.CO: noisy(co_level, 0.02 * co_level),
            }
            if (
                spike is not None
                and spike.sensor_id == station.id
                and spike.start_minute <= minute < spike.start_minute + spike.duration_minutes
            ):
                concentrations[spike.pollutant] += spike.magnitude
            readings.append(
                SensorReading(
                    sensor_id=station.id,
                    timestamp=day_start + 60 * minute,
                    concentrations=concentrations,
                    temperature=17.0 + 5.0 * diurnal + rng.gauss(0.0, 0.2) * noise_scale,
                    humidity=min(100.0, max(0.0, 60.0 - 15.0 * diurnal + rng.gauss(0.0, 1.0) * noise_scale)),
                    pressure=1013.0 + 2.0 * math.sin(2.0 * math.pi * hour / 24.0) + rng.gauss(0.0, 0.3) * noise_scale,
                )
            )
    return readings
