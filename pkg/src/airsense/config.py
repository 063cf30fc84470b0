"""Service configuration: one JSON file plus environment overrides.

``AIRSENSE_DATA_ROOT`` overrides the data root and ``AIRSENSE_BIND``
(``host:port``) the bind address; everything else comes from the config file
or the defaults below.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields

ENV_DATA_ROOT = "AIRSENSE_DATA_ROOT"
ENV_BIND = "AIRSENSE_BIND"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    data_root: str = "."
    default_alpha: float = 0.5
    default_radius_m: float = 1000.0
    default_limit: int = 10
    a_ref: float = 300.0
    grid_cell_cap: int = 250_000
    forecast_k_daily: int = 3
    forecast_k_weekly: int = 0
    forecast_changepoints: int = 0
    anomaly_k_sigma: float = 3.0
    fl_clients: str | list[str] = "top3"
    fl_local_epochs: int = 2
    fl_lr: float = 0.02
    fl_reg: float = 0.02
    fl_holdout_frac: float = 0.2
    seed: int = 0
    train_dimension: int = 16
    train_epochs: int = 30
    train_lr: float = 0.01
    train_reg: float = 0.02
    benchmark_dir: str = "benchmarks"
    cors_origins: list[str] = field(default_factory=lambda: ["*"])

    def __post_init__(self):
        if not 0.0 <= self.default_alpha <= 1.0:
            raise ValueError(f"default_alpha out of range [0, 1]: {self.default_alpha}")
        if self.default_radius_m <= 0:
            raise ValueError(f"default_radius_m must be positive: {self.default_radius_m}")
        if self.default_limit < 1:
            raise ValueError(f"default_limit must be >= 1: {self.default_limit}")
        if self.a_ref <= 0:
            raise ValueError(f"a_ref must be positive: {self.a_ref}")
        if self.grid_cell_cap < 1:
            raise ValueError(f"grid_cell_cap must be >= 1: {self.grid_cell_cap}")


def load_config(path: str | None = None, env: dict | None = None) -> ServiceConfig:
    """Build a config from an optional JSON file and environment overrides."""
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        known = {f.name for f in fields(ServiceConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)
    if env.get(ENV_DATA_ROOT):
        values["data_root"] = env[ENV_DATA_ROOT]
    if env.get(ENV_BIND):
        bind = env[ENV_BIND]
        host, _, port = bind.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"{ENV_BIND} must look like host:port, got {bind!r}")
        values["host"] = host
        values["port"] = int(port)
    return ServiceConfig(**values)
