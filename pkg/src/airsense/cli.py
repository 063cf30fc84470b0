"""Operator command line: data generation, training, benchmarks, serving.

Every stochastic subcommand takes ``--seed`` and is reproducible for a fixed
seed and data root. Usage errors exit with code 2, runtime failures with 1.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
from datetime import date as Date
from pathlib import Path

import numpy as np

from . import federated, forecast, store
from .aqi_field import AqiSample, fit_field
from .config import ENV_DATA_ROOT, load_config
from .errors import AirsenseError
from .recsys import MfModel, RecQuery, recommend, train_mf
from .sensor_ingest import PollutantKind, compute_aqi, minute_average, parse_readings
from .store import DataRoot, DemoSpec

MODEL_SNAPSHOT_PREFIX = "mf-model"


def _add_data_root(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--data-root", metavar="DIR", default=os.environ.get(ENV_DATA_ROOT),
        help=f"path to the dataset directory (default: ${ENV_DATA_ROOT})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airsense",
        description="Pollution-aware POI recommendation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("gen-data", formatter_class=fmt, help="generate the synthetic city dataset")
    _add_data_root(p)
    p.add_argument("--seed", type=int, default=0, help="int: generator seed")
    p.add_argument("--n-users", type=int, default=8982, help="int: distinct rating users")
    p.add_argument("--n-pois", type=int, default=2594, help="int: distinct POIs")
    p.add_argument("--n-ratings", type=int, default=11606, help="int: total ratings")
    p.add_argument("--rank", type=int, default=4, help="int: planted preference rank")
    p.add_argument("--noise", type=float, default=0.35, help="float: rating noise sigma")
    p.add_argument("--stations", type=int, default=8, help="int: virtual sensors on the demo grid")
    p.add_argument("--readings-date", default="2024-06-03", help="date: YYYY-MM-DD for the readings day")
    p.add_argument("--no-spike", action="store_true", help="flag: skip the injected pollution spike")

    p = sub.add_parser("ingest", formatter_class=fmt, help="validate and append a readings CSV")
    _add_data_root(p)
    p.add_argument("file", metavar="CSV", help="path: readings CSV file to ingest")

    p = sub.add_parser("train", formatter_class=fmt, help="train the recommender and save a snapshot")
    _add_data_root(p)
    p.add_argument("--seed", type=int, default=0, help="int: training seed")
    p.add_argument("--dimension", type=int, default=16, help="int: embedding dimension")
    p.add_argument("--epochs", type=int, default=30, help="int: SGD epochs")
    p.add_argument("--lr", type=float, default=0.01, help="float: learning rate")
    p.add_argument("--reg", type=float, default=0.02, help="float: L2 regularization")
    p.add_argument("--out", metavar="NAME", default=None,
                   help="str: snapshot name (default: next free mf-model-N)")

    p = sub.add_parser("fl-bench", formatter_class=fmt,
                       help="run the centralized/distributed/federated benchmark")
    _add_data_root(p)
    p.add_argument("--seed", type=int, default=0, help="int: benchmark seed")
    p.add_argument("--clients", default="top3",
                   help="str: 'top3' or comma-separated user ids")
    p.add_argument("--rounds", type=int, default=30, help="int: federated rounds")
    p.add_argument("--local-epochs", type=int, default=2, help="int: client epochs per round")
    p.add_argument("--lr", type=float, default=0.02, help="float: client learning rate")
    p.add_argument("--reg", type=float, default=0.02, help="float: client regularization")
    p.add_argument("--dimension", type=int, default=16, help="int: embedding dimension")
    p.add_argument("--out", metavar="DIR", default=None,
                   help="path: output directory (default: <data-root>/benchmarks)")

    p = sub.add_parser("recommend", formatter_class=fmt, help="print ranked POIs for a query")
    _add_data_root(p)
    p.add_argument("--user", required=True, help="str: user id")
    p.add_argument("--lat", type=float, default=store.BARI_CENTER[0], help="float: query latitude")
    p.add_argument("--lon", type=float, default=store.BARI_CENTER[1], help="float: query longitude")
    p.add_argument("--alpha", type=float, default=0.5, help="float in [0,1]: preference weight")
    p.add_argument("--radius-m", type=float, default=1000.0, help="float: candidate radius in meters")
    p.add_argument("--limit", type=int, default=10, help="int: max results")
    p.add_argument("--snapshot", default=None, help="str: model snapshot name (default: latest mf-model-N)")

    p = sub.add_parser("forecast", formatter_class=fmt, help="fit and print a pollutant forecast")
    _add_data_root(p)
    p.add_argument("--sensor", required=True, help="str: sensor id")
    p.add_argument("--pollutant", default="no2", choices=[k.value for k in PollutantKind],
                   help="str: pollutant column")
    p.add_argument("--horizon-hours", type=int, default=6, help="int: forecast horizon")
    p.add_argument("--k-daily", type=int, default=3, help="int: daily Fourier order")
    p.add_argument("--k-weekly", type=int, default=0, help="int: weekly Fourier order")

    p = sub.add_parser("anomalies", formatter_class=fmt, help="scan a pollutant series for anomalies")
    _add_data_root(p)
    p.add_argument("--sensor", required=True, help="str: sensor id")
    p.add_argument("--pollutant", default="no", choices=[k.value for k in PollutantKind],
                   help="str: pollutant column")
    p.add_argument("--k-sigma", type=float, default=3.0, help="float: detection threshold in sigmas")
    p.add_argument("--k-daily", type=int, default=6, help="int: daily Fourier order")

    p = sub.add_parser("serve", formatter_class=fmt, help="run the HTTP service")
    _add_data_root(p)
    p.add_argument("--host", default=None, help="str: bind host (default: config)")
    p.add_argument("--port", type=int, default=None, help="int: bind port (default: config)")
    p.add_argument("--config", metavar="JSON", default=None, help="path: service config file")

    p = sub.add_parser("report", formatter_class=fmt, help="render benchmark tables from CSVs")
    _add_data_root(p)
    p.add_argument("--in", dest="in_dir", metavar="DIR", default=None,
                   help="path: benchmark directory (default: <data-root>/benchmarks)")

    return parser


def _require_root(parser: argparse.ArgumentParser, args: argparse.Namespace) -> DataRoot:
    if not args.data_root:
        parser.error(f"--data-root is required (or set ${ENV_DATA_ROOT})")
    return DataRoot(args.data_root)


def _latest_model(root: DataRoot, name: str | None) -> MfModel:
    if name is None:
        names = [n for n in store.list_snapshots(root) if n.startswith(MODEL_SNAPSHOT_PREFIX)]
        if not names:
            raise AirsenseError("no trained model snapshot found; run `airsense train` first")
        name = names[-1]
    return MfModel.from_dict(store.load_snapshot(root, name))


def _station_field(dataset: store.Dataset):
    samples = []
    by_station: dict[str, list] = {}
    for r in dataset.readings:
        by_station.setdefault(r.sensor_id, []).append(r)
    for station in dataset.stations:
        rows = by_station.get(station.id)
        if not rows:
            continue
        newest = minute_average(sorted(rows, key=lambda r: r.timestamp))[-1]
        samples.append(AqiSample(station.latitude, station.longitude,
                                 compute_aqi(newest).overall, station.id))
    if not samples:
        raise AirsenseError("no readings available to build the AQI field")
    return fit_field(samples)


def _series(dataset: store.Dataset, sensor: str, pollutant: str) -> forecast.TimeSeries:
    kind = PollutantKind(pollutant)
    rows = sorted((r for r in dataset.readings if r.sensor_id == sensor), key=lambda r: r.timestamp)
    if not rows:
        raise AirsenseError(f"no readings for sensor {sensor!r}")
    averaged = minute_average(rows)
    return forecast.TimeSeries(
        sensor,
        kind,
        np.array([r.timestamp for r in averaged], dtype=np.float64),
        np.array([r.concentrations[kind] for r in averaged]),
    )


def _five_number(values: list[float]) -> tuple[float, float, float, float, float]:
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    return min(values), float(q1), float(med), float(q3), max(values)


def _print_benchmark_tables(raw_rows: list[tuple[str, str, float]]) -> None:
    per = {}
    for scenario, user, err in raw_rows:
        per.setdefault((scenario, user), []).append(err)
    print(f"{'scenario':<12} {'user':<8} {'n':>4} {'min':>7} {'q1':>7} {'median':>7} {'q3':>7} {'max':>7}")
    for (scenario, user), errs in sorted(per.items()):
        mn, q1, med, q3, mx = _five_number(errs)
        print(f"{scenario:<12} {user:<8} {len(errs):>4} {mn:>7.3f} {q1:>7.3f} {med:>7.3f} {q3:>7.3f} {mx:>7.3f}")
    print()
    medians = {}
    for (scenario, user), errs in per.items():
        medians.setdefault(scenario, {})[user] = statistics.median(errs)
    users = sorted({u for _, u in per})
    print(f"{'median AE':<12} " + " ".join(f"{u:>9}" for u in users))
    for scenario in sorted(medians):
        row = " ".join(f"{medians[scenario].get(u, float('nan')):>9.3f}" for u in users)
        print(f"{scenario:<12} {row}")


def cmd_gen_data(parser, args) -> int:
    root = _require_root(parser, args)
    spec = DemoSpec(
        n_users=args.n_users,
        n_pois=args.n_pois,
        n_ratings=args.n_ratings,
        rank=args.rank,
        noise=args.noise,
        seed=args.seed,
        n_stations=args.stations,
        readings_date=Date.fromisoformat(args.readings_date),
        spike=not args.no_spike,
    )
    dataset = store.generate_demo_dataset(spec)
    store.save_all(root, dataset)
    print(f"wrote {len(dataset.ratings)} ratings, {len(dataset.pois)} pois, "
          f"{len(dataset.stations)} stations, {len(dataset.readings)} readings to {root.path}")
    return 0


def cmd_ingest(parser, args) -> int:
    root = _require_root(parser, args)
    with open(args.file, encoding="utf-8") as fh:
        readings = parse_readings(fh)
    dataset = store.load_all(root)
    known = {s.id for s in dataset.stations}
    unknown = sorted({r.sensor_id for r in readings} - known)
    if unknown:
        raise AirsenseError(f"readings reference unknown stations: {unknown}")
    total = store.append_readings(root, readings)
    print(f"ingested {len(readings)} readings ({total} total)")
    return 0


def cmd_train(parser, args) -> int:
    root = _require_root(parser, args)
    dataset = store.load_all(root)
    model = train_mf(dataset.ratings, dimension=args.dimension, lr=args.lr,
                     reg=args.reg, epochs=args.epochs, seed=args.seed)
    name = args.out
    if name is None:
        taken = set(store.list_snapshots(root))
        n = 1
        while f"{MODEL_SNAPSHOT_PREFIX}-{n}" in taken:
            n += 1
        name = f"{MODEL_SNAPSHOT_PREFIX}-{n}"
    store.save_snapshot(root, name, model.to_dict())
    print(f"saved model snapshot {name!r} "
          f"({len(model.user_vecs)} users, {len(model.item_vecs)} pois, dim {model.dimension})")
    return 0


def cmd_fl_bench(parser, args) -> int:
    root = _require_root(parser, args)
    dataset = store.load_all(root)
    if args.clients == "top3":
        clients = federated.top_rated_users(dataset.ratings, 3)
    else:
        clients = [c.strip() for c in args.clients.split(",") if c.strip()]
    if not clients:
        raise AirsenseError("no benchmark clients resolved")
    cfg = federated.FlConfig(
        rounds=args.rounds, local_epochs=args.local_epochs, lr=args.lr,
        reg=args.reg, dimension=args.dimension, seed=args.seed,
    )
    errors = federated.run_baselines(dataset.ratings, clients, cfg)
    out_dir = Path(args.out) if args.out else root.path / "benchmarks"
    out_dir.mkdir(parents=True, exist_ok=True)
    federated.write_benchmark_csv(errors, str(out_dir / "errors.csv"))
    federated.write_benchmark_summary(errors, str(out_dir / "summary.csv"))
    raw = [
        (scenario, user, err)
        for scenario, per_user in errors.scenarios().items()
        for user, errs in per_user.items()
        for err in errs
    ]
    _print_benchmark_tables(raw)
    print(f"\nwrote {out_dir / 'errors.csv'} and {out_dir / 'summary.csv'}")
    return 0


def cmd_recommend(parser, args) -> int:
    root = _require_root(parser, args)
    dataset = store.load_all(root)
    model = _latest_model(root, args.snapshot)
    fld = _station_field(dataset)
    query = RecQuery(args.user, args.lat, args.lon, args.radius_m, args.alpha, args.limit)
    results = recommend(model, fld, dataset.pois, query)
    if not results:
        print("no POIs within the query radius")
        return 0
    print(f"{'#':>2} {'poi':<8} {'name':<18} {'s':>6} {'s_mf':>6} {'s_aqi':>6} {'aqi':>6} {'dist_m':>7}")
    for k, sp in enumerate(results, 1):
        print(f"{k:>2} {sp.poi.id:<8} {sp.poi.name[:18]:<18} {sp.s:>6.3f} {sp.s_mf:>6.3f} "
              f"{sp.s_aqi:>6.3f} {sp.aqi_at_poi:>6.1f} {sp.distance_m:>7.1f}")
    return 0


def cmd_forecast(parser, args) -> int:
    root = _require_root(parser, args)
    dataset = store.load_all(root)
    series = _series(dataset, args.sensor, args.pollutant)
    model = forecast.fit(series, k_daily=args.k_daily, k_weekly=args.k_weekly)
    step = 60.0
    t = np.arange(series.timestamps[-1] + step,
                  series.timestamps[-1] + args.horizon_hours * 3600.0 + step, step)
    values = forecast.predict(model, t)
    print("timestamp,predicted")
    for ts, v in zip(t, values):
        print(f"{int(ts)},{v:.4f}")
    return 0


def cmd_anomalies(parser, args) -> int:
    root = _require_root(parser, args)
    dataset = store.load_all(root)
    series = _series(dataset, args.sensor, args.pollutant)
    model = forecast.fit(series, k_daily=args.k_daily, k_weekly=0)
    anomalies = forecast.detect_anomalies(model, series, args.k_sigma)
    print("timestamp,observed,expected,z_score")
    for a in anomalies:
        print(f"{int(a.timestamp)},{a.observed:.4f},{a.expected:.4f},{a.z_score:.2f}")
    return 0


def cmd_serve(parser, args) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    if args.data_root:
        config.data_root = args.data_root
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    if not config.data_root:
        parser.error(f"--data-root is required (or set ${ENV_DATA_ROOT})")
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def cmd_report(parser, args) -> int:
    root = _require_root(parser, args)
    in_dir = Path(args.in_dir) if args.in_dir else root.path / "benchmarks"
    errors_path = in_dir / "errors.csv"
    if not errors_path.exists():
        raise AirsenseError(f"no benchmark output at {errors_path}; run `airsense fl-bench` first")
    import csv

    with open(errors_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["scenario", "user_id", "abs_error"]:
            raise AirsenseError(f"bad errors.csv header: {reader.fieldnames}")
        raw = [(row["scenario"], row["user_id"], float(row["abs_error"])) for row in reader]
    _print_benchmark_tables(raw)
    return 0


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "fl-bench": cmd_fl_bench,
    "recommend": cmd_recommend,
    "forecast": cmd_forecast,
    "anomalies": cmd_anomalies,
    "serve": cmd_serve,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](parser, args)
    except (AirsenseError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
