import pytest

from airsense.sensor_ingest import PollutantKind, SensorReading, SensorStation

BARI = (41.1258, 16.8674)


def make_reading(sensor_id="S1", timestamp=1_700_000_000, temperature=18.0,
                 humidity=55.0, pressure=1013.0, **concentrations) -> SensorReading:
    base = {kind: 0.0 for kind in PollutantKind}
    for name, value in concentrations.items():
        base[PollutantKind(name)] = value
    return SensorReading(
        sensor_id=sensor_id,
        timestamp=timestamp,
        concentrations=base,
        temperature=temperature,
        humidity=humidity,
        pressure=pressure,
    )


@pytest.fixture
def station():
    return SensorStation("S1", BARI[0], BARI[1], "test station", "Bari")
