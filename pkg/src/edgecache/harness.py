"""Experiment driver: multi-slot episodes, parameter sweeps and result files.

Seeding
-------
Every (grid point, trial) pair gets its own generator,
``default_rng(SeedSequence(seed, spawn_key=(point, trial)))``, which is then
split into three child streams: popularity dynamics, vertex orderings and
MDS test payloads.  Selecting a different set of schemes therefore never
changes the popularity trajectory or the other schemes' numbers.

Slot convention
---------------
Slot 0 is the cold cache fill and produces no rows.  Rows cover slots
``1..slots``; each slot's instance is shared by all selected schemes.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .caching import SystemConfig, build_update, top_s_cache
from .indexcoding import (
    build_conflict_graph,
    degeneracy_ordering,
    greedy_color_dynamic,
    greedy_color_static,
    plan_from_coloring,
    random_ordering,
    verify_plan,
)
from .mds import MdsError, verify_mds_round_trip
from .popularity import DriftParams, PopularityState, Ranking, drift_bounded, drift_values, kendall_tau, load_trace

log = logging.getLogger(__name__)

SCHEMES = (
    "uncoded",
    "mds",
    "ic-static-random",
    "ic-static-degeneracy",
    "ic-dynamic-random",
    "ic-dynamic-degeneracy",
)
DRIFT_MODES = ("value", "bounded", "trace")
COLUMNS = ("trial", "slot", "scheme", "transmissions", "t_un", "kendall_mean", "kendall_std")
SLOT0_NOTE = "slot 0 is the initial cache fill and is excluded; rows cover slots 1..slots"


class VerificationError(RuntimeError):
    """A coded plan failed to deliver every request; always a bug."""


def parse_schemes(spec) -> tuple[str, ...]:
    if isinstance(spec, str):
        spec = [s.strip() for s in spec.split(",") if s.strip()]
    spec = list(spec)
    if spec == ["all"]:
        return SCHEMES
    unknown = [s for s in spec if s not in SCHEMES]
    if unknown:
        raise ValueError(f"unknown schemes {unknown}; choose from {', '.join(SCHEMES)} or 'all'")
    if not spec:
        raise ValueError("at least one scheme is required")
    # canonical order, no duplicates
    return tuple(s for s in SCHEMES if s in spec)


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    drift: DriftParams = field(default_factory=DriftParams)
    slots: int = 200
    trials: int = 1
    seed: int = 0
    schemes: tuple[str, ...] = SCHEMES
    drift_mode: str = "value"
    trace_path: str | None = None
    payload_bytes: int = 16

    def __post_init__(self):
        object.__setattr__(self, "schemes", parse_schemes(self.schemes))
        if self.slots < 1:
            raise ValueError("slots must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.drift_mode not in DRIFT_MODES:
            raise ValueError(f"drift_mode must be one of {DRIFT_MODES}")
        if self.drift_mode == "trace" and not self.trace_path:
            raise ValueError("trace drift mode needs trace_path")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.payload_bytes < 2 or self.payload_bytes % 2:
            raise ValueError("payload_bytes must be a positive even number")

    # flat mapping used by config files and CLI echo
    def to_dict(self) -> dict:
        return {
            "m": self.system.m,
            "n": self.system.n,
            "s": self.system.s,
            "c": self.drift.c,
            "p": self.drift.p,
            "q": self.drift.q,
            "split": self.drift.split,
            "slots": self.slots,
            "trials": self.trials,
            "seed": self.seed,
            "schemes": list(self.schemes),
            "drift_mode": self.drift_mode,
            "trace_path": self.trace_path,
            "payload_bytes": self.payload_bytes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls().to_dict())
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        base = cls().to_dict()
        base.update(data)
        return cls(
            system=SystemConfig(int(base["m"]), int(base["n"]), int(base["s"])),
            drift=DriftParams(int(base["c"]), float(base["p"]), float(base["q"]), str(base["split"])),
            slots=int(base["slots"]),
            trials=int(base["trials"]),
            seed=int(base["seed"]),
            schemes=tuple(base["schemes"]) if not isinstance(base["schemes"], str) else base["schemes"],
            drift_mode=base["drift_mode"],
            trace_path=base["trace_path"],
            payload_bytes=int(base["payload_bytes"]),
        )

    def with_param(self, name: str, value) -> "ExperimentConfig":
        """Copy with one flat parameter (m, n, s, c, p, q, ...) replaced."""
        return self.from_dict({**self.to_dict(), name: value})


def load_config(path) -> ExperimentConfig:
    """Read a JSON config file holding any subset of the flat config keys."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return ExperimentConfig.from_dict(data)


@dataclass(frozen=True)
class ResultRow:
    trial: int
    slot: int
    scheme: str
    transmissions: int
    t_un: int
    kendall_mean: float
    kendall_std: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in COLUMNS)


def episode_rng(seed: int, trial: int = 0, point: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point, trial)))


# ---------------------------------------------------------------------------
# episodes


def _popularity_process(cfg: ExperimentConfig, rng: np.random.Generator):
    """Yield per-WCS rankings for slots 0..cfg.slots."""
    m, n = cfg.system.m, cfg.system.n
    if cfg.drift_mode == "value":
        state = PopularityState.initial(n, m, cfg.drift.q, rng)
        yield state.rankings()
        for _ in range(cfg.slots):
            state = drift_values(state, cfg.drift, rng)
            yield state.rankings()
    elif cfg.drift_mode == "bounded":
        rankings = [Ranking.from_order(rng.permutation(m)) for _ in range(n)]
        yield rankings
        for _ in range(cfg.slots):
            rankings = [drift_bounded(r, cfg.drift.c, rng) for r in rankings]
            yield rankings
    else:
        trace = load_trace(cfg.trace_path)
        if len(trace[0]) != n or trace[0][0].m != m:
            raise ValueError(
                f"trace has n={len(trace[0])}, m={trace[0][0].m}; config says n={n}, m={m}"
            )
        if len(trace) < cfg.slots + 1:
            raise ValueError(f"trace has {len(trace)} slots, need {cfg.slots + 1} (fill + {cfg.slots})")
        yield from trace[: cfg.slots + 1]


def _run_schemes(cfg, inst, order_rng, payload_rng) -> dict[str, int]:
    counts: dict[str, int] = {}
    g = build_conflict_graph(inst)
    # drawn every slot so each scheme's numbers are independent of the selection
    orders = {"random": random_ordering(g, order_rng)}
    for scheme in cfg.schemes:
        if scheme == "uncoded":
            counts[scheme] = inst.t_un
        elif scheme == "mds":
            try:
                counts[scheme] = verify_mds_round_trip(inst, payload_rng, cfg.payload_bytes).T
            except MdsError as exc:
                raise VerificationError(f"mds: {exc}; instance={inst}") from exc
        else:
            _, kind, ordering = scheme.split("-")
            if ordering not in orders:
                orders[ordering] = degeneracy_ordering(g)
            dynamic = kind == "dynamic"
            if dynamic:
                coloring = greedy_color_dynamic(inst, g, orders[ordering])
            else:
                coloring = greedy_color_static(g, orders[ordering])
            plan = plan_from_coloring(coloring)
            report = verify_plan(plan, inst, dynamic=dynamic)
            if not report.ok:
                raise VerificationError(f"{scheme}: undecodable {report.undecodable}; plan={plan}; instance={inst}")
            counts[scheme] = len(plan)
    return counts


def simulate(cfg: ExperimentConfig, rng: np.random.Generator, trial: int = 0):
    """Run one episode; returns ``(rows, kendall)`` with ``kendall[slot-1, wcs]``."""
    pop_rng, order_rng, payload_rng = rng.spawn(3)
    process = _popularity_process(cfg, pop_rng)
    prev_rankings = next(process)
    caches = top_s_cache(prev_rankings, cfg.system.s)
    rows: list[ResultRow] = []
    kendall = np.zeros((cfg.slots, cfg.system.n), dtype=np.int64)
    for slot, rankings in enumerate(process, start=1):
        ks = np.array([kendall_tau(a, b) for a, b in zip(prev_rankings, rankings)])
        kendall[slot - 1] = ks
        cur = top_s_cache(rankings, cfg.system.s)
        inst = build_update(caches, cur)
        counts = _run_schemes(cfg, inst, order_rng, payload_rng)
        k_mean, k_std = float(ks.mean()), float(ks.std())
        for scheme in cfg.schemes:
            rows.append(ResultRow(trial, slot, scheme, counts[scheme], inst.t_un, k_mean, k_std))
        prev_rankings, caches = rankings, cur
    return rows, kendall


def run_episode(cfg: ExperimentConfig, rng: np.random.Generator, trial: int = 0) -> list[ResultRow]:
    return simulate(cfg, rng, trial)[0]


def _episode_job(args):
    cfg, trial, point = args
    return simulate(cfg, episode_rng(cfg.seed, trial, point), trial)


def _run_jobs(jobs, parallel: int):
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_episode_job, jobs))
    return [_episode_job(j) for j in jobs]


def run_experiment(cfg: ExperimentConfig, parallel: int = 1) -> list[ResultRow]:
    """All trials of ``cfg`` in trial order, regardless of ``parallel``."""
    results = _run_jobs([(cfg, t, 0) for t in range(cfg.trials)], parallel)
    return [row for rows, _ in results for row in rows]


def mean_transmissions(rows: list[ResultRow]) -> dict[str, float]:
    sums: dict[str, list[int]] = {}
    for r in rows:
        sums.setdefault(r.scheme, []).append(r.transmissions)
    return {s: float(np.mean(v)) for s, v in sums.items()}


@dataclass
class SweepPoint:
    param: str
    value: float
    means: dict[str, float]
    t_un: float
    kendall_mean: float
    kendall_std: float
    slots: int

    def savings(self, scheme: str, baseline: str = "uncoded") -> float:
        base = self.means[baseline]
        return 1.0 - self.means[scheme] / base if base else 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def sweep(param: str, values, base: ExperimentConfig, parallel: int = 1) -> list[SweepPoint]:
    """Independent seeded episodes for each grid value; per-scheme mean transmissions.

    Grid point ``k`` trial ``t`` uses ``episode_rng(base.seed, t, k)``, so a
    single-point grid reproduces :func:`run_experiment` exactly.
    """
    values = list(values)
    if not values:
        raise ValueError("sweep grid is empty")
    cfgs = [base.with_param(param, v) for v in values]
    jobs = [(cfg, t, k) for k, cfg in enumerate(cfgs) for t in range(cfg.trials)]
    results = iter(_run_jobs(jobs, parallel))
    points = []
    for cfg, v in zip(cfgs, values):
        chunk = [next(results) for _ in range(cfg.trials)]
        rows = [r for rs, _ in chunk for r in rs]
        ks = np.concatenate([k.ravel() for _, k in chunk])
        points.append(
            SweepPoint(
                param,
                v,
                mean_transmissions(rows),
                float(np.mean([r.t_un for r in rows])),
                float(ks.mean()),
                float(ks.std()),
                cfg.slots * cfg.trials,
            )
        )
        log.info("sweep %s=%s: %s", param, v, points[-1].means)
    return points


def kendall_vs_p(cfg: ExperimentConfig, p_values, parallel: int = 1) -> list[tuple[float, float, float]]:
    """Mean and std of per-slot, per-WCS Kendall distance for each drift magnitude."""
    if cfg.drift_mode != "value":
        raise ValueError("kendall_vs_p needs value drift mode")
    cheap = replace(cfg, schemes=("uncoded",))
    return [(pt.value, pt.kendall_mean, pt.kendall_std) for pt in sweep("p", p_values, cheap, parallel)]


# ---------------------------------------------------------------------------
# persistence


def _format_cell(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def write_results(rows: list[ResultRow], path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COLUMNS)
            for r in rows:
                writer.writerow([_format_cell(v) for v in r.as_tuple()])
    elif fmt == "json":
        data = [dict(zip(COLUMNS, r.as_tuple())) for r in rows]
        path.write_text(json.dumps(data, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")


def load_results(path, fmt: str | None = None) -> list[ResultRow]:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    types = {f.name: f.type for f in fields(ResultRow)}
    conv = {"int": int, "float": float, "str": str}
    if fmt == "csv":
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != COLUMNS:
                raise ValueError(f"{path}: unexpected header {header}")
            records = [dict(zip(header, row)) for row in reader if row]
    elif fmt == "json":
        records = json.loads(path.read_text())
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    return [ResultRow(**{k: conv[types[k]](rec[k]) for k in COLUMNS}) for rec in records]


def write_metadata(cfg: ExperimentConfig, path, extra: dict | None = None) -> None:
    meta = {"config": cfg.to_dict(), "columns": list(COLUMNS), "slot_convention": SLOT0_NOTE}
    if extra:
        meta.update(extra)
    Path(path).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
