import csv
import io
import math
import random
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airsense import forecast
from airsense.errors import CsvFormatError, RowValidationError
from airsense.sensor_ingest import (
    AQI_POLLUTANTS,
    READINGS_HEADER,
    PollutantKind,
    SensorReading,
    SensorStation,
    SpikeEvent,
    compute_aqi,
    concentration_for_sub_index,
    default_breakpoint_table,
    minute_average,
    parse_readings,
    simulate_city_day,
    sub_index,
    write_readings,
)
from conftest import make_reading


class TestParseReadings:
    def test_header_only_gives_empty_sequence(self):
        assert parse_readings(READINGS_HEADER + "\n") == []

    def test_single_line_field_mapping(self):
        text = READINGS_HEADER + "\nS1,1700000000,420,12,31,44,2.1,0.9,8.5,14.2,18.5,55,1013\n"
        (r,) = parse_readings(text)
        assert r.sensor_id == "S1"
        assert r.timestamp == 1_700_000_000
        assert r.concentrations[PollutantKind.CO] == 420.0
        assert r.concentrations[PollutantKind.NO] == 12.0
        assert r.concentrations[PollutantKind.NO2] == 31.0
        assert r.concentrations[PollutantKind.O3] == 44.0
        assert r.concentrations[PollutantKind.SO2] == 2.1
        assert r.concentrations[PollutantKind.PM1] == 0.9
        assert r.concentrations[PollutantKind.PM2_5] == 8.5
        assert r.concentrations[PollutantKind.PM10] == 14.2
        assert r.temperature == 18.5
        assert r.humidity == 55.0
        assert r.pressure == 1013.0

    def test_malformed_header(self):
        with pytest.raises(CsvFormatError):
            parse_readings("sensor,when,stuff\nS1,1,2\n")

    def test_humidity_bound_names_field(self):
        text = READINGS_HEADER + "\nS1,1700000000,1,1,1,1,1,1,1,1,18,130,1013\n"
        with pytest.raises(RowValidationError) as exc:
            parse_readings(text)
        assert exc.value.field == "humidity"
        assert exc.value.line_no == 2

    def test_negative_concentration_carries_line_number(self):
        text = (READINGS_HEADER + "\n"
                "S1,1700000000,1,1,1,1,1,1,1,1,18,55,1013\n"
                "S1,1700000060,1,-3,1,1,1,1,1,1,18,55,1013\n")
        with pytest.raises(RowValidationError) as exc:
            parse_readings(text)
        assert exc.value.line_no == 3
        assert exc.value.field == "no"

    def test_non_numeric_field(self):
        text = READINGS_HEADER + "\nS1,1700000000,abc,1,1,1,1,1,1,1,18,55,1013\n"
        with pytest.raises(RowValidationError) as exc:
            parse_readings(text)
        assert exc.value.field == "co"

    def test_collect_mode_reports_and_skips(self):
        text = (READINGS_HEADER + "\n"
                "S1,1700000000,1,1,1,1,1,1,1,1,18,55,1013\n"
                "S1,bad,1,1,1,1,1,1,1,1,18,55,1013\n"
                "S1,1700000120,1,1,1,1,1,1,1,1,18,55,1013\n")
        errors = []
        readings = parse_readings(text, on_invalid=errors.append)
        assert len(readings) == 2
        assert [e.line_no for e in errors] == [3]

    def test_round_trip_identity(self):
        rng = random.Random(5)
        readings = [
            make_reading(
                timestamp=1_700_000_000 + 37 * k,
                temperature=rng.uniform(-5, 35),
                humidity=rng.uniform(0, 100),
                pressure=rng.uniform(990, 1030),
                **{kind.value: rng.uniform(0, 80) for kind in PollutantKind},
            )
            for k in range(50)
        ]
        assert parse_readings(write_readings(readings)) == readings


class TestMinuteAverage:
    def test_singleton_floors_timestamp(self):
        r = make_reading(timestamp=1_700_000_042, co=10.0)
        (out,) = minute_average([r])
        assert out.timestamp == 1_700_000_042 // 60 * 60
        assert out.concentrations[PollutantKind.CO] == 10.0

    def test_two_point_mean(self):
        a = make_reading(timestamp=1_700_000_000, co=10.0)
        b = make_reading(timestamp=1_700_000_030, co=20.0)
        (out,) = minute_average([a, b])
        assert out.concentrations[PollutantKind.CO] == 15.0

    def test_brute_force_bucket_oracle(self):
        rng = random.Random(11)
        readings = [
            make_reading(
                timestamp=1_700_000_040 + k,  # minute-aligned start
                co=rng.uniform(0, 50),
                no2=rng.uniform(0, 50),
                temperature=rng.uniform(10, 20),
            )
            for k in range(120)
        ]
        out = minute_average(readings)
        assert len(out) == 2
        buckets: dict[int, list] = {}
        for r in readings:
            buckets.setdefault(r.timestamp // 60, []).append(r)
        for averaged in out:
            group = buckets[averaged.timestamp // 60]
            expect_co = sum(r.concentrations[PollutantKind.CO] for r in group) / len(group)
            expect_t = sum(r.temperature for r in group) / len(group)
            assert averaged.concentrations[PollutantKind.CO] == pytest.approx(expect_co, abs=1e-12)
            assert averaged.temperature == pytest.approx(expect_t, abs=1e-12)

    def test_idempotent_on_averaged_series(self):
        rng = random.Random(3)
        readings = [
            make_reading(timestamp=1_700_000_000 + 13 * k, co=rng.uniform(0, 9))
            for k in range(200)
        ]
        once = minute_average(readings)
        assert minute_average(once) == once

    def test_mixed_sensor_ids_rejected(self):
        with pytest.raises(ValueError, match="single sensor"):
            minute_average([make_reading(sensor_id="A"), make_reading(sensor_id="B")])


class TestComputeAqi:
    def test_zero_concentrations_give_zero(self):
        aqi = compute_aqi(make_reading())
        assert aqi.overall == 0.0
        assert all(v == 0.0 for v in aqi.sub_indices.values())

    def test_pm25_band_midpoint(self):
        # First pm2_5 band runs 0..12 -> 0..50; its midpoint maps to 25.
        aqi = compute_aqi(make_reading(pm2_5=6.0))
        assert aqi.sub_indices[PollutantKind.PM2_5] == pytest.approx(25.0)
        assert aqi.dominant == PollutantKind.PM2_5

    def test_randomized_against_independent_interpolation(self):
        # Re-derive sub-indices straight from the CSV with separate code.
        import importlib.resources as resources

        text = resources.files("airsense.data").joinpath("aqi_breakpoints.csv").read_text()
        table: dict[str, list[tuple[float, float, float, float]]] = {}
        for row in csv.DictReader(io.StringIO(text)):
            table.setdefault(row["pollutant"], []).append(
                (float(row["c_lo"]), float(row["c_hi"]), float(row["i_lo"]), float(row["i_hi"]))
            )

        def oracle(pollutant: str, c: float) -> float:
            for c_lo, c_hi, i_lo, i_hi in table[pollutant]:
                if c_lo <= c <= c_hi:
                    return (i_hi - i_lo) / (c_hi - c_lo) * (c - c_lo) + i_lo
            return 500.0

        rng = random.Random(17)
        for _ in range(200):
            concs = {
                "pm2_5": rng.uniform(0, 600),
                "pm10": rng.uniform(0, 700),
                "no2": rng.uniform(0, 2500),
                "o3": rng.uniform(0, 600),
                "so2": rng.uniform(0, 1200),
                "co": rng.uniform(0, 60000),
            }
            aqi = compute_aqi(make_reading(**concs))
            expected = max(oracle(p, c) for p, c in concs.items())
            assert aqi.overall == pytest.approx(expected, abs=1e-9)

    def test_saturation_flag_above_top_band(self):
        aqi = compute_aqi(make_reading(pm2_5=800.0))
        assert aqi.sub_indices[PollutantKind.PM2_5] == 500.0
        assert aqi.overall == 500.0
        assert PollutantKind.PM2_5 in aqi.saturated

    def test_no_and_pm1_are_excluded(self):
        aqi = compute_aqi(make_reading(no=5000.0, pm1=5000.0))
        assert aqi.overall == 0.0
        assert PollutantKind.NO not in aqi.sub_indices
        assert PollutantKind.PM1 not in aqi.sub_indices

    @given(
        pollutant=st.sampled_from(AQI_POLLUTANTS),
        base=st.floats(min_value=0, max_value=400),
        bump=st.floats(min_value=0, max_value=400),
    )
    @settings(max_examples=120, deadline=None)
    def test_monotone_in_every_pollutant(self, pollutant, base, bump):
        lo = compute_aqi(make_reading(**{pollutant.value: base}))
        hi = compute_aqi(make_reading(**{pollutant.value: base + bump}))
        assert hi.overall >= lo.overall

    @given(data=st.dictionaries(st.sampled_from(AQI_POLLUTANTS), st.floats(0, 100_000), min_size=1))
    @settings(max_examples=120, deadline=None)
    def test_overall_in_range_and_dominant_attains_max(self, data):
        aqi = compute_aqi(make_reading(**{k.value: v for k, v in data.items()}))
        assert 0.0 <= aqi.overall <= 500.0
        assert aqi.overall == max(aqi.sub_indices.values())
        assert aqi.sub_indices[aqi.dominant] == aqi.overall

    def test_concentration_inverse_round_trip(self):
        table = default_breakpoint_table()
        rng = random.Random(23)
        for kind in AQI_POLLUTANTS:
            for _ in range(50):
                target = rng.uniform(0, 500)
                c = concentration_for_sub_index(kind, target)
                value, saturated = sub_index(kind, c, table)
                assert not saturated
                assert value == pytest.approx(target, abs=1e-9)


class TestSimulateCityDay:
    def test_same_seed_byte_identical(self, station):
        a = simulate_city_day([station], date(2024, 6, 3), 9)
        b = simulate_city_day([station], date(2024, 6, 3), 9)
        assert write_readings(a) == write_readings(b)

    def test_different_days_differ(self, station):
        a = simulate_city_day([station], date(2024, 6, 3), 9)
        b = simulate_city_day([station], date(2024, 6, 4), 9)
        assert a[0].concentrations != b[0].concentrations

    def test_hourly_no2_peak_in_rush_windows(self, station):
        for seed in range(4):
            day = simulate_city_day([station], date(2024, 6, 3), seed)
            hourly = [0.0] * 24
            for r in day:
                hourly[(r.timestamp % 86_400) // 3600] += r.concentrations[PollutantKind.NO2]
            peak = max(range(24), key=lambda h: hourly[h])
            assert peak in (5, 6, 7, 17, 18, 19)

    def test_aqi_stays_in_band(self, station):
        day = simulate_city_day([station], date(2024, 6, 3), 4)
        overall = [compute_aqi(r).overall for r in day]
        assert 20.0 <= min(overall) and max(overall) <= 70.0

    def test_spike_flagged_by_anomaly_scan(self, station):
        # Fit on the smooth spike-free day, scan the spiked twin: exactly the
        # injected window must cross the 3-sigma threshold.
        clean = simulate_city_day([station], date(2024, 6, 3), 5, noise_scale=0.0)
        t = np.array([r.timestamp for r in clean], dtype=np.float64)
        series = forecast.TimeSeries(
            station.id, PollutantKind.NO, t,
            np.array([r.concentrations[PollutantKind.NO] for r in clean]),
        )
        model = forecast.fit(series, k_daily=6, k_weekly=0)
        assert model.residual_sigma > 0
        spike = SpikeEvent(station.id, PollutantKind.NO, start_minute=18 * 60,
                           duration_minutes=5, magnitude=10 * model.residual_sigma)
        spiked = simulate_city_day([station], date(2024, 6, 3), 5, spike=spike, noise_scale=0.0)
        spiked_series = forecast.TimeSeries(
            station.id, PollutantKind.NO, t,
            np.array([r.concentrations[PollutantKind.NO] for r in spiked]),
        )
        anomalies = forecast.detect_anomalies(model, spiked_series, 3.0)
        flagged = sorted(int((a.timestamp - t[0]) // 60) for a in anomalies)
        assert flagged == [1080, 1081, 1082, 1083, 1084]
        assert all(a.z_score >= 10 * 0.8 for a in anomalies)

    def test_requires_stations(self):
        with pytest.raises(ValueError):
            simulate_city_day([], date(2024, 6, 3), 0)


class TestStationValidation:
    def test_latitude_range(self):
        with pytest.raises(ValueError):
            SensorStation("S1", 91.0, 0.0, "", "")

    def test_reading_rejects_bad_humidity(self):
        with pytest.raises(ValueError):
            make_reading(humidity=130.0)

    def test_reading_rejects_negative_concentration(self):
        with pytest.raises(ValueError):
            make_reading(co=-1.0)

    def test_reading_rejects_nonpositive_timestamp(self):
        with pytest.raises(ValueError):
            make_reading(timestamp=0)
