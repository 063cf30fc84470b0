"""Great-circle geometry helpers on the WGS84 sphere."""

from __future__ import annotations

import math

EARTH_RADIUS_M = 6_371_008.8
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two WGS84 points."""
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.atan2(math.sqrt(a), math.sqrt(1.0 - a))


def offset_by_meters(lat: float, lon: float, east_m: float, north_m: float) -> tuple[float, float]:
    """Shift a point by local east/north meters (small-offset approximation)."""
    dlat = north_m / METERS_PER_DEG_LAT
    dlon = east_m / (METERS_PER_DEG_LAT * math.cos(math.radians(lat)))
    return lat + dlat, lon + dlon


def validate_latitude(value: float, name: str = "latitude") -> None:
    if not -90.0 <= value <= 90.0:
        raise ValueError(f"{name} out of range [-90, 90]: {value!r}")


def validate_longitude(value: float, name: str = "longitude") -> None:
    if not -180.0 <= value <= 180.0:
        raise ValueError(f"{name} out of range [-180, 180]: {value!r}")
