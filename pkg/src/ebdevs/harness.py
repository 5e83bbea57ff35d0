"""Replicated experiments: configuration, runs, CSV output and aggregation.

Replication ``i`` of an experiment uses random stream ``i`` under the
configured seed, so every output byte is a function of the configuration.
Files are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .core import CapacityError, LegitimacyError
from .gallery import ConfigError, get_model
from .simulator import GridSampler, LegitimacyGuard, RootCoordinator, Trace

log = logging.getLogger(__name__)

GRANULARITIES = ("series", "events")
DEFAULT_BUDGET = 10**6


@dataclass
class ExperimentConfig:
    model: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    replications: int = 1
    horizon: float | None = None
    out: str | None = None
    trace: str = "series"
    sample_dt: float | None = None
    budget: int = DEFAULT_BUDGET
    workers: int = 1

    def __post_init__(self):
        entry = get_model(self.model)
        if not isinstance(self.params, dict):
            raise ConfigError("params must be a mapping")
        self.model_params = entry.params(self.params)
        if int(self.replications) != self.replications or self.replications < 1:
            raise ConfigError("replications must be an integer >= 1")
        self.replications = int(self.replications)
        if self.trace not in GRANULARITIES:
            raise ConfigError(f"trace must be one of {GRANULARITIES}")
        if self.horizon is None:
            self.horizon = float(self.model_params.horizon)
        if not self.horizon >= 0:
            raise ConfigError("horizon must be >= 0")
        if self.sample_dt is None:
            self.sample_dt = entry.sample_dt
        if not self.sample_dt > 0:
            raise ConfigError("sample_dt must be positive")
        if self.budget < 1 or self.workers < 1:
            raise ConfigError("budget and workers must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        if "model" not in data:
            raise ConfigError("configuration needs a model name")
        return cls(**data)

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        """Read a JSON configuration; non-None ``overrides`` win over the file."""
        data = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError("configuration must be a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    @property
    def columns(self):
        return get_model(self.model).columns


@dataclass
class Replication:
    index: int
    seed: int
    stream: int
    rows: list | None  # [(time, values), ...] or None when aborted
    trace: Trace | None = None
    error: str | None = None

    @property
    def ok(self):
        return self.rows is not None


def run_replication(config: ExperimentConfig, index: int) -> Replication:
    entry = get_model(config.model)
    trace = Trace() if config.trace == "events" else None
    sampler = GridSampler(config.sample_dt, entry.observe)
    try:
        model = entry.build(config.model_params, config.seed, index)
        root = RootCoordinator(model, recorder=trace, guard=LegitimacyGuard(config.budget))
        root.run_until(config.horizon, sampler)
    except (CapacityError, LegitimacyError) as exc:
        log.warning("replication %d aborted: %s", index, exc)
        return Replication(index, config.seed, index, None, None, f"{type(exc).__name__}: {exc}")
    return Replication(index, config.seed, index, sampler.rows, trace)


def _run_one(args):
    config, index = args
    return run_replication(config, index)


def run_replications(config: ExperimentConfig) -> list[Replication]:
    jobs = [(config, i) for i in range(config.replications)]
    if config.workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


# ---------------------------------------------------------------------------
# Aggregation

@dataclass
class ReplicationSummary:
    columns: tuple  # value columns, without time
    grid: np.ndarray
    mean: np.ndarray  # (len(grid), len(columns))
    std: np.ndarray
    n_completed: int
    seeds: list


def zero_order_hold(times, values, grid) -> np.ndarray:
    """Value of the last sample at or before each grid point (the first sample
    before the series starts)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    idx = np.searchsorted(times, grid, side="right") - 1
    return values[np.clip(idx, 0, len(times) - 1)]


def aggregate(series, dt: float, horizon: float, columns=None, seeds=None) -> ReplicationSummary:
    """Mean and sample standard deviation per grid point of several series.

    Each series is a list of ``(time, values)`` rows.  A single series gets a
    standard deviation of zero.
    """
    series = [s for s in series if s]
    if not series:
        raise ValueError("aggregate needs at least one completed replication")
    grid = np.arange(int(math.floor(horizon / dt + 1e-9)) + 1) * dt
    stack = np.stack([
        zero_order_hold([t for t, _ in s], [list(v) for _, v in s], grid) for s in series
    ])
    if stack.ndim == 2:
        stack = stack[:, :, None]
    mean = stack.mean(axis=0)
    std = stack.std(axis=0, ddof=1) if len(series) > 1 else np.zeros_like(mean)
    ncol = stack.shape[2]
    return ReplicationSummary(tuple(columns or range(ncol)), grid, mean, std, len(series),
                              list(seeds or []))


# ---------------------------------------------------------------------------
# Output

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def series_csv(columns, rows, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for t, values in rows:
        w.writerow([_fmt(t)] + [_fmt(v) for v in values])
    return buf.getvalue()


def summary_csv(summary: ReplicationSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["time"]
    for c in summary.columns:
        head += [f"{c}_mean", f"{c}_std"]
    w.writerow(head + ["n_completed"])
    for k, t in enumerate(summary.grid):
        row = [_fmt(t)]
        for j in range(len(summary.columns)):
            row += [_fmt(summary.mean[k, j]), _fmt(summary.std[k, j])]
        w.writerow(row + [str(summary.n_completed)])
    return buf.getvalue()


def default_out_dir() -> str:
    return os.environ.get("EBDEVS_OUT", "results")


@dataclass
class ExperimentResult:
    replications: list
    summary: ReplicationSummary | None
    out_dir: Path

    @property
    def failed(self):
        return [r for r in self.replications if not r.ok]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every replication and write per-replication, status and summary CSVs."""
    out = Path(config.out or default_out_dir())
    reps = run_replications(config)
    columns = config.columns
    width = len(str(config.replications - 1))
    status = io.StringIO()
    sw = csv.writer(status, lineterminator="\n")
    sw.writerow(["replication", "seed", "stream", "status", "error"])
    for r in reps:
        tag = f"{r.index:0{width}d}"
        header = [f"model={config.model}, seed={r.seed}, stream={r.stream}"]
        sw.writerow([r.index, r.seed, r.stream, "ok" if r.ok else "aborted", r.error or ""])
        if r.ok:
            write_atomic(out / f"rep_{tag}.csv", series_csv(columns, r.rows, header))
            if r.trace is not None:
                write_atomic(out / f"trace_{tag}.csv", r.trace.to_csv(header))
    write_atomic(out / "replications.csv", status.getvalue())
    done = [r for r in reps if r.ok]
    summary = None
    if done:
        summary = aggregate([r.rows for r in done], config.sample_dt, config.horizon,
                            columns[1:], [r.seed for r in done])
        write_atomic(out / "summary.csv", summary_csv(summary))
    return ExperimentResult(reps, summary, out)
