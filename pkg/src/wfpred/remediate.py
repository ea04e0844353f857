"""Proactive kill simulation: resources saved by stopping jobs predicted to fail.

At checkpoint ``t`` every job still running (wallclock > t) is re-scored
with its usage so far, assuming usage grows linearly with elapsed time.
Jobs predicted to fail are killed. Killing a real failure saves what it
would still have burned (``fru - cru(t)``); killing a job that would have
succeeded wastes what it already used (``cru(t)``, or its full usage with
``rw_mode="full"``, since it must be rerun).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, SchemaMismatchError
from .evaluation import ConfusionCounts, MetricScores, metrics
from .features import encode, numeric_matrix
from .reports import write_csv
from .trace import RecordSet, WorkloadRecord, labels

NODE_CORES = 36
RW_MODES = ("consumed", "full")
DEFAULT_GRID = tuple(range(600, 21601, 600))
REPORT_HEADER = ("t", "r_saving_cpu", "r_saving_mem", "node_days_saved", "n_running",
                 "n_killed_correct", "n_killed_wrong", "recall", "precision", "f1")


@dataclass(frozen=True)
class ResourceSnapshot:
    t: int
    cru_cpu: float
    cru_mem: float
    fru_cpu: float
    fru_mem: float


def current_usage(r: WorkloadRecord, t: int) -> ResourceSnapshot:
    """Usage after ``t`` seconds: final usage scaled by ``min(t, wallclock) / wallclock``."""
    if r.wallclock <= 0:
        raise ContractError(f"job {r.job_id} has non-positive wallclock")
    if t < 0:
        raise ContractError("checkpoint time must be non-negative")
    frac = min(t, r.wallclock) / r.wallclock
    return ResourceSnapshot(t, r.cpu * frac, r.mem * frac, r.cpu, r.mem)


def node_days(cpu_seconds: float, node_cores: int = NODE_CORES) -> float:
    if node_cores < 1:
        raise ContractError("node_cores must be at least 1")
    return cpu_seconds / (node_cores * 86400)


@dataclass(frozen=True)
class SavingsPoint:
    t: int
    r_saving_cpu: float
    r_saving_mem: float
    r_s_cpu: float
    r_w_cpu: float
    r_total_cpu: float
    r_s_mem: float
    r_w_mem: float
    r_total_mem: float
    n_running: int
    n_evaluated: int
    n_killed_correct: int
    n_killed_wrong: int
    metrics_at_t: MetricScores

    def node_days_saved(self, node_cores: int = NODE_CORES) -> float:
        return node_days(self.r_s_cpu - self.r_w_cpu, node_cores)


@dataclass
class SavingsCurve:
    points: list
    node_cores: int = NODE_CORES
    rw_mode: str = "consumed"
    absorbing: bool = True

    def rows(self) -> list:
        return [[p.t, p.r_saving_cpu, p.r_saving_mem, p.node_days_saved(self.node_cores),
                 p.n_running, p.n_killed_correct, p.n_killed_wrong, p.metrics_at_t.recall,
                 p.metrics_at_t.precision, p.metrics_at_t.f1] for p in self.points]

    def write(self, path) -> None:
        write_csv(path, REPORT_HEADER, self.rows())

    def chart(self, path) -> None:
        from .charts import ChartSpec, render_chart

        render_chart(ChartSpec(
            "line", {"cpu": [p.r_saving_cpu for p in self.points],
                     "memory": [p.r_saving_mem for p in self.points]},
            "checkpoint (s since job start)", "resource saving",
            x_values=[p.t for p in self.points], title="Resource savings by checkpoint"), path)


class _Prepared:
    """Per-test-set arrays shared by every checkpoint."""

    def __init__(self, model, test: RecordSet, schema):
        if len(test) == 0:
            raise ContractError("empty test set")
        if schema.mode != "runtime":
            raise ContractError("kill simulation needs a runtime-mode feature schema")
        fp = getattr(model, "schema_fingerprint", None)
        if fp is not None and fp != schema.fingerprint():
            raise SchemaMismatchError("model was trained against a different feature schema")
        self.model = model
        self.test = test
        self.schema = schema
        self.y = labels(test).astype(bool)
        self.wall = test.column("wallclock").astype(np.int64)
        self.cpu = test.column("cpu").astype(np.float64)
        self.mem = test.column("mem").astype(np.float64)
        self.total_cpu = float(self.cpu.sum())
        self.total_mem = float(self.mem.sum())
        self.raw = numeric_matrix(test, schema.numeric_columns, schema.tz_offset)
        cols = list(schema.numeric_columns)
        self.col = {c: cols.index(c) for c in ("cpu", "mem", "wallclock")}

    def rows_at(self, idx: np.ndarray, t: int) -> np.ndarray:
        frac = np.minimum(t, self.wall[idx]) / self.wall[idx]
        raw = self.raw[idx].copy()
        raw[:, self.col["cpu"]] = self.cpu[idx] * frac
        raw[:, self.col["mem"]] = self.mem[idx] * frac
        raw[:, self.col["wallclock"]] = t
        return encode(self.test.take(idx), self.schema, with_labels=False, raw_numeric=raw).rows


def _point(prep: _Prepared, t: int, rw_mode: str, alive: np.ndarray | None):
    if rw_mode not in RW_MODES:
        raise ContractError(f"rw_mode must be one of {RW_MODES}")
    if t < 0:
        raise ContractError("checkpoint time must be non-negative")
    running = prep.wall > t
    evaluated = running if alive is None else running & alive
    idx = np.flatnonzero(evaluated)
    if idx.size:
        pred, _ = prep.model.predict_batch(prep.rows_at(idx, t))
        pred = np.asarray(pred).astype(bool)
    else:
        pred = np.zeros(0, dtype=bool)
    y = prep.y[idx]
    frac = np.minimum(t, prep.wall[idx]) / prep.wall[idx] if idx.size else np.zeros(0)
    cpu, mem = prep.cpu[idx], prep.mem[idx]
    good, bad = pred & y, pred & ~y
    r_s_cpu = float(np.sum(cpu[good] - cpu[good] * frac[good]))
    r_s_mem = float(np.sum(mem[good] - mem[good] * frac[good]))
    if rw_mode == "consumed":
        r_w_cpu = float(np.sum(cpu[bad] * frac[bad]))
        r_w_mem = float(np.sum(mem[bad] * frac[bad]))
    else:
        r_w_cpu = float(np.sum(cpu[bad]))
        r_w_mem = float(np.sum(mem[bad]))

    def share(s, w, total):
        return (s - w) / total if total > 0 else 0.0

    point = SavingsPoint(
        t=int(t),
        r_saving_cpu=share(r_s_cpu, r_w_cpu, prep.total_cpu),
        r_saving_mem=share(r_s_mem, r_w_mem, prep.total_mem),
        r_s_cpu=r_s_cpu, r_w_cpu=r_w_cpu, r_total_cpu=prep.total_cpu,
        r_s_mem=r_s_mem, r_w_mem=r_w_mem, r_total_mem=prep.total_mem,
        n_running=int(running.sum()), n_evaluated=int(idx.size),
        n_killed_correct=int(good.sum()), n_killed_wrong=int(bad.sum()),
        metrics_at_t=metrics(ConfusionCounts.from_predictions(y, pred)),
    )
    return point, idx[pred]


def simulate_kill(model, test: RecordSet, schema, t: int, rw_mode: str = "consumed") -> SavingsPoint:
    """Savings from killing every running job predicted to fail at checkpoint ``t``."""
    return _point(_Prepared(model, test, schema), int(t), rw_mode, None)[0]


def savings_curve(model, test: RecordSet, schema, t_grid=DEFAULT_GRID, rw_mode: str = "consumed",
                  absorbing: bool = True, node_cores: int = NODE_CORES) -> SavingsCurve:
    """One :class:`SavingsPoint` per checkpoint.

    With ``absorbing`` a job killed at one checkpoint is not scored again at
    later ones; each point then reports the kills made at that checkpoint.
    Otherwise every point is an independent snapshot. ``n_running`` always
    counts jobs whose wallclock exceeds ``t``.
    """
    grid = [int(t) for t in t_grid]
    if not grid:
        raise ContractError("empty checkpoint grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ContractError("checkpoint grid must be strictly increasing")
    prep = _Prepared(model, test, schema)
    alive = np.ones(len(test), dtype=bool) if absorbing else None
    points = []
    for t in grid:
        point, killed = _point(prep, t, rw_mode, alive)
        if absorbing:
            alive[killed] = False
        points.append(point)
    return SavingsCurve(points, node_cores, rw_mode, absorbing)
