"""Simulated client-server federated training for the MF recommender.

Each client owns a private user embedding and a local copy of the shared POI
embedding matrix. Rounds are synchronous: the server broadcasts the POI
matrix, clients fine-tune locally and upload only POI-embedding deltas
(restricted to POIs they trained on) plus their example count, and the server
aggregates the deltas by example-weighted averaging. User vectors and biases
never leave the client.

The module also implements the centralized / distributed / federated
benchmark over a shared per-client holdout split.
"""

from __future__ import annotations

import csv
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import FlProtocolError
from .recsys import MfModel, Rating, _sgd_epochs, train_mf
from .seeding import substream


@dataclass
class FlConfig:
    rounds: int = 30
    local_epochs: int = 2
    lr: float = 0.02
    reg: float = 0.02
    dimension: int = 16
    seed: int = 0
    holdout_frac: float = 0.2
    base_epochs: int = 30
    base_lr: float = 0.01
    base_reg: float = 0.02


@dataclass
class ClientState:
    """A simulated participant; user_vec and user_bias are private."""

    user_id: str
    user_vec: np.ndarray
    user_bias: float
    local_item_vecs: dict[str, np.ndarray]
    local_item_bias: dict[str, float]
    local_ratings: tuple[Rating, ...]
    train_indices: tuple[int, ...]
    holdout_indices: tuple[int, ...]

    def __post_init__(self):
        for r in self.local_ratings:
            if r.user_id != self.user_id:
                raise ValueError(f"rating for {r.user_id} in client {self.user_id}")
        if set(self.train_indices) & set(self.holdout_indices):
            raise ValueError("train and holdout indices overlap")

    @property
    def train_ratings(self) -> list[Rating]:
        return [self.local_ratings[i] for i in self.train_indices]

    @property
    def holdout_ratings(self) -> list[Rating]:
        return [self.local_ratings[i] for i in self.holdout_indices]


@dataclass
class ServerState:
    """Server-side shared state: the global POI embeddings and frozen mean."""

    global_item_vecs: dict[str, np.ndarray]
    global_item_bias: dict[str, float]
    global_mean: float
    round_counter: int = 0


@dataclass(frozen=True)
class ClientUpdate:
    """The only client-to-server message: POI deltas and an example count."""

    item_vec_deltas: Mapping[str, np.ndarray]
    item_bias_deltas: Mapping[str, float]
    n_examples: int

    def to_wire(self) -> dict:
        """JSON-ready form; key set is the full wire schema."""
        return {
            "item_vec_deltas": {
                pid: [float(x) for x in vec] for pid, vec in sorted(self.item_vec_deltas.items())
            },
            "item_bias_deltas": {pid: float(b) for pid, b in sorted(self.item_bias_deltas.items())},
            "n_examples": self.n_examples,
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "ClientUpdate":
        return cls(
            item_vec_deltas={p: np.asarray(v, dtype=np.float64) for p, v in doc["item_vec_deltas"].items()},
            item_bias_deltas=dict(doc["item_bias_deltas"]),
            n_examples=doc["n_examples"],
        )


@dataclass(frozen=True)
class RoundReport:
    round: int
    participating_clients: tuple[str, ...]
    per_client_holdout_mae: Mapping[str, float]
    aggregate_delta_norm: float


def top_rated_users(ratings: Sequence[Rating], k: int = 3) -> list[str]:
    """User ids with the most ratings, ties broken by id for determinism."""
    counts = Counter(r.user_id for r in ratings)
    return [u for u, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]


def split_holdout(n: int, frac: float, rng: np.random.Generator) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Partition range(n) into train/holdout; holdout gets max(1, round(frac*n))."""
    n_hold = max(1, round(frac * n)) if n > 0 else 0
    perm = rng.permutation(n)
    holdout = tuple(sorted(int(i) for i in perm[:n_hold]))
    train = tuple(sorted(int(i) for i in perm[n_hold:]))
    return train, holdout


def make_client(user_id: str, ratings: Sequence[Rating], cfg: FlConfig) -> ClientState:
    """Initialize a client with a fresh private embedding and a seeded split.

    Splits and initial vectors depend only on (seed, user id), so all
    benchmark scenarios see identical starting conditions.
    """
    own = tuple(r for r in ratings if r.user_id == user_id)
    if not own:
        raise ValueError(f"user {user_id} has no ratings in the dataset")
    train, hold = split_holdout(len(own), cfg.holdout_frac, substream(cfg.seed, "split", user_id))
    return ClientState(
        user_id=user_id,
        user_vec=substream(cfg.seed, "client-init", user_id).normal(0.0, 0.1, cfg.dimension),
        user_bias=0.0,
        local_item_vecs={},
        local_item_bias={},
        local_ratings=own,
        train_indices=train,
        holdout_indices=hold,
    )


def client_local_update(
    client: ClientState,
    global_item_vecs: Mapping[str, np.ndarray],
    global_item_bias: Mapping[str, float],
    global_mean: float,
    local_epochs: int,
    lr: float,
    reg: float,
    rng: np.random.Generator,
) -> ClientUpdate | None:
    """Copy the broadcast, fine-tune locally, and return POI deltas.

    Returns None when the client has no training ratings (it skips the
    round). Deltas cover exactly the POIs in the client's training set; the
    private user state is updated in place and never leaves the client.
    """
    client.local_item_vecs = {pid: vec.copy() for pid, vec in global_item_vecs.items()}
    client.local_item_bias = dict(global_item_bias)
    train = client.train_ratings
    if not train:
        return None
    support = sorted({r.poi_id for r in train})
    received_vecs = {pid: client.local_item_vecs[pid].copy() for pid in support}
    received_bias = {pid: client.local_item_bias[pid] for pid in support}
    if local_epochs > 0:
        item_index = {pid: k for k, pid in enumerate(support)}
        u_idx = np.zeros(len(train), dtype=np.int64)
        i_idx = np.array([item_index[r.poi_id] for r in train], dtype=np.int64)
        values = np.array([r.value for r in train], dtype=np.float64)
        user_vecs = client.user_vec.reshape(1, -1).copy()
        item_vecs = np.stack([received_vecs[pid] for pid in support])
        user_bias = np.array([client.user_bias])
        item_bias = np.array([received_bias[pid] for pid in support])
        _sgd_epochs(u_idx, i_idx, values, user_vecs, item_vecs, user_bias, item_bias,
                    global_mean, local_epochs, lr, reg, rng)
        client.user_vec = user_vecs[0]
        client.user_bias = float(user_bias[0])
        for k, pid in enumerate(support):
            client.local_item_vecs[pid] = item_vecs[k]
            client.local_item_bias[pid] = float(item_bias[k])
    return ClientUpdate(
        item_vec_deltas={pid: client.local_item_vecs[pid] - received_vecs[pid] for pid in support},
        item_bias_deltas={pid: client.local_item_bias[pid] - received_bias[pid] for pid in support},
        n_examples=len(train),
    )


def fedavg(updates: Sequence[ClientUpdate]) -> ClientUpdate:
    """Example-weighted average of client deltas, per POI over its contributors.

    POIs absent from every update implicitly keep a zero delta. Summation
    runs in sorted POI order so aggregation is bitwise order-insensitive.
    """
    if not updates:
        raise ValueError("fedavg requires at least one update")
    dims = {vec.shape for upd in updates for vec in upd.item_vec_deltas.values()}
    if len(dims) > 1:
        raise FlProtocolError(f"inconsistent delta dimensions across clients: {sorted(dims)}")
    all_pois = sorted({pid for upd in updates for pid in upd.item_vec_deltas})
    vec_out: dict[str, np.ndarray] = {}
    bias_out: dict[str, float] = {}
    for pid in all_pois:
        contributors = [u for u in updates if pid in u.item_vec_deltas]
        total = float(sum(u.n_examples for u in contributors))
        if total <= 0:
            weights = [1.0 / len(contributors)] * len(contributors)
        else:
            weights = [u.n_examples / total for u in contributors]
        vec_out[pid] = sum(w * u.item_vec_deltas[pid] for w, u in zip(weights, contributors))
        bias_out[pid] = float(sum(w * u.item_bias_deltas[pid] for w, u in zip(weights, contributors)))
    return ClientUpdate(
        item_vec_deltas=vec_out,
        item_bias_deltas=bias_out,
        n_examples=sum(u.n_examples for u in updates),
    )


def apply_delta(server: ServerState, delta: ClientUpdate) -> None:
    for pid in sorted(delta.item_vec_deltas):
        server.global_item_vecs[pid] = server.global_item_vecs[pid] + delta.item_vec_deltas[pid]
        server.global_item_bias[pid] = server.global_item_bias[pid] + delta.item_bias_deltas[pid]


def delta_norm(delta: ClientUpdate) -> float:
    sq = sum(float(v @ v) for v in delta.item_vec_deltas.values())
    sq += sum(b * b for b in delta.item_bias_deltas.values())
    return float(np.sqrt(sq))


def _client_holdout_abs_errors(
    client: ClientState,
    item_vecs: Mapping[str, np.ndarray],
    item_bias: Mapping[str, float],
    global_mean: float,
) -> list[float]:
    errors = []
    for r in client.holdout_ratings:
        pred = global_mean + client.user_bias + item_bias[r.poi_id] + float(client.user_vec @ item_vecs[r.poi_id])
        errors.append(abs(r.value - min(5.0, max(1.0, pred))))
    return errors


def _base_model(ratings: Sequence[Rating], client_ids: Sequence[str], cfg: FlConfig) -> MfModel:
    """Pre-train on everything except the clients, then add rows for any POI
    that only clients have rated so the broadcast covers the full POI set."""
    client_set = set(client_ids)
    base_ratings = [r for r in ratings if r.user_id not in client_set]
    if not base_ratings:
        raise ValueError("no non-client ratings to pre-train the base model on")
    model = train_mf(base_ratings, dimension=cfg.dimension, lr=cfg.base_lr,
                     reg=cfg.base_reg, epochs=cfg.base_epochs, seed=cfg.seed)
    item_vecs = dict(model.item_vecs)
    item_bias = dict(model.item_bias)
    for pid in sorted({r.poi_id for r in ratings} - set(item_vecs)):
        item_vecs[pid] = substream(cfg.seed, "item-init", pid).normal(0.0, 0.1, cfg.dimension)
        item_bias[pid] = 0.0
    return MfModel(
        dimension=cfg.dimension,
        global_mean=model.global_mean,
        user_bias=model.user_bias,
        item_bias=item_bias,
        user_vecs=model.user_vecs,
        item_vecs=item_vecs,
    )


def run_federated(
    ratings: Sequence[Rating],
    client_user_ids: Sequence[str],
    cfg: FlConfig,
    on_message: Callable[[dict], None] | None = None,
) -> tuple[ServerState, list[ClientState], list[RoundReport]]:
    """Full synchronous simulation: base model, then cfg.rounds FedAvg rounds.

    Report round 0 captures the pre-round holdout error of freshly
    initialized clients against the base broadcast. ``on_message`` receives
    every serialized client-to-server message (for wire-schema auditing).
    """
    known_users = {r.user_id for r in ratings}
    missing = [u for u in client_user_ids if u not in known_users]
    if missing:
        raise ValueError(f"client users not in dataset: {missing}")
    base = _base_model(ratings, client_user_ids, cfg)
    server = ServerState(
        global_item_vecs={p: v.copy() for p, v in base.item_vecs.items()},
        global_item_bias=dict(base.item_bias),
        global_mean=base.global_mean,
    )
    clients = [make_client(u, ratings, cfg) for u in sorted(client_user_ids)]
    for client in clients:
        client.local_item_vecs = {p: v.copy() for p, v in server.global_item_vecs.items()}
        client.local_item_bias = dict(server.global_item_bias)

    def report(round_no: int, participants: Sequence[str], norm: float) -> RoundReport:
        mae = {}
        for c in clients:
            errs = _client_holdout_abs_errors(c, server.global_item_vecs, server.global_item_bias, server.global_mean)
            mae[c.user_id] = float(np.mean(errs)) if errs else float("nan")
        return RoundReport(round_no, tuple(participants), mae, norm)

    reports = [report(0, (), 0.0)]
    for round_no in range(1, cfg.rounds + 1):
        updates = []
        participants = []
        for client in clients:
            rng = substream(cfg.seed, "round", round_no, client.user_id)
            update = client_local_update(
                client, server.global_item_vecs, server.global_item_bias, server.global_mean,
                cfg.local_epochs, cfg.lr, cfg.reg, rng,
            )
            if update is None:
                continue
            participants.append(client.user_id)
            updates.append(update)
            if on_message is not None:
                on_message(update.to_wire())
        norm = 0.0
        if updates:
            aggregate = fedavg(updates)
            apply_delta(server, aggregate)
            norm = delta_norm(aggregate)
        server.round_counter = round_no
        reports.append(report(round_no, participants, norm))
    return server, clients, reports


@dataclass(frozen=True)
class BaselineErrors:
    """Per-scenario, per-client absolute errors on the shared holdout."""

    centralized: Mapping[str, list[float]]
    distributed: Mapping[str, list[float]]
    federated: Mapping[str, list[float]]

    def scenarios(self) -> dict[str, Mapping[str, list[float]]]:
        return {
            "centralized": self.centralized,
            "distributed": self.distributed,
            "federated": self.federated,
        }


def run_baselines(
    ratings: Sequence[Rating],
    client_user_ids: Sequence[str],
    cfg: FlConfig,
) -> BaselineErrors:
    """Benchmark the three training regimes over identical splits and seeds.

    centralized: one more training pass over the base data plus client train
    ratings in a single pool. distributed: each client fine-tunes its own
    copy locally and shares nothing. federated: run_federated. The SGD budget
    is rounds * local_epochs everywhere.
    """
    base = _base_model(ratings, client_user_ids, cfg)
    client_set = set(client_user_ids)
    epochs_total = cfg.rounds * cfg.local_epochs

    # --- federated ---
    server, fed_clients, _ = run_federated(ratings, client_user_ids, cfg)
    federated = {
        c.user_id: _client_holdout_abs_errors(c, server.global_item_vecs, server.global_item_bias, server.global_mean)
        for c in fed_clients
    }

    # --- distributed ---
    distributed = {}
    for user_id in sorted(client_user_ids):
        client = make_client(user_id, ratings, cfg)
        client_local_update(
            client, base.item_vecs, base.item_bias, base.global_mean,
            epochs_total, cfg.lr, cfg.reg, substream(cfg.seed, "distributed", user_id),
        )
        distributed[user_id] = _client_holdout_abs_errors(
            client, client.local_item_vecs, client.local_item_bias, base.global_mean
        )

    # --- centralized ---
    pool_clients = {u: make_client(u, ratings, cfg) for u in sorted(client_user_ids)}
    pool = [r for r in ratings if r.user_id not in client_set]
    for client in pool_clients.values():
        pool.extend(client.train_ratings)
    user_ids = sorted({r.user_id for r in pool})
    item_ids = sorted({r.poi_id for r in ratings})
    user_index = {u: k for k, u in enumerate(user_ids)}
    item_index = {i: k for k, i in enumerate(item_ids)}
    user_vecs = np.stack([
        pool_clients[u].user_vec.copy() if u in pool_clients
        else np.asarray(base.user_vecs[u], dtype=np.float64)
        for u in user_ids
    ])
    item_vecs = np.stack([np.asarray(base.item_vecs[i], dtype=np.float64) for i in item_ids])
    user_bias = np.array([
        pool_clients[u].user_bias if u in pool_clients else base.user_bias[u] for u in user_ids
    ])
    item_bias = np.array([base.item_bias[i] for i in item_ids])
    u_idx = np.array([user_index[r.user_id] for r in pool], dtype=np.int64)
    i_idx = np.array([item_index[r.poi_id] for r in pool], dtype=np.int64)
    values = np.array([r.value for r in pool], dtype=np.float64)
    _sgd_epochs(u_idx, i_idx, values, user_vecs, item_vecs, user_bias, item_bias,
                base.global_mean, epochs_total, cfg.lr, cfg.reg,
                substream(cfg.seed, "centralized"))
    centralized = {}
    for user_id, client in pool_clients.items():
        k = user_index[user_id]
        errors = []
        for r in client.holdout_ratings:
            pred = base.global_mean + user_bias[k] + item_bias[item_index[r.poi_id]] + float(
                user_vecs[k] @ item_vecs[item_index[r.poi_id]]
            )
            errors.append(abs(r.value - min(5.0, max(1.0, pred))))
        centralized[user_id] = errors

    return BaselineErrors(centralized=centralized, distributed=distributed, federated=federated)


def write_benchmark_csv(errors: BaselineErrors, path: str) -> None:
    """Raw per-held-out-rating errors: ``scenario,user_id,abs_error``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scenario", "user_id", "abs_error"])
        for scenario, per_user in errors.scenarios().items():
            for user_id in sorted(per_user):
                for err in per_user[user_id]:
                    writer.writerow([scenario, user_id, repr(float(err))])


def write_benchmark_summary(errors: BaselineErrors, path: str) -> None:
    """Per-client summary: ``scenario,user_id,median_ae,mean_ae,n``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scenario", "user_id", "median_ae", "mean_ae", "n"])
        for scenario, per_user in errors.scenarios().items():
            for user_id in sorted(per_user):
                errs = per_user[user_id]
                writer.writerow([
                    scenario,
                    user_id,
                    repr(float(statistics.median(errs))) if errs else "nan",
                    repr(float(np.mean(errs))) if errs else "nan",
                    len(errs),
                ])


def read_benchmark_summary(path: str) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["scenario", "user_id", "median_ae", "mean_ae", "n"]
        if reader.fieldnames != expected:
            raise ValueError(f"bad summary header: {reader.fieldnames}")
        return [
            {
                "scenario": row["scenario"],
                "user_id": row["user_id"],
                "median_ae": float(row["median_ae"]),
                "mean_ae": float(row["mean_ae"]),
                "n": int(row["n"]),
            }
            for row in reader
        ]
