"""Holdout splits, recall/precision/F1, the training-size sweep and trace characterization."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError
from .features import encode, fit_schema, normalize_job_names
from .reports import write_csv
from .trace import RecordSet, labels

log = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.65, 0.15, 0.20)
DEFAULT_BIN_WIDTH = 6000


def split_holdout(data, fractions=DEFAULT_FRACTIONS, seed: int = 0):
    """Seeded shuffle, then contiguous (train, val, test) blocks.

    Val and test get ``floor(n * f)`` rows; the remainder goes to train.
    Works on anything with ``len`` and ``take`` (datasets and record sets).
    """
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3 or any(f <= 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
        raise ContractError("fractions must be three positive numbers summing to 1")
    n = len(data)
    if n < 3:
        raise ContractError("need at least 3 rows to split")
    order = np.random.default_rng(seed).permutation(n)
    n_val = math.floor(n * fr[1])
    n_test = math.floor(n * fr[2])
    n_train = n - n_val - n_test
    return (data.take(order[:n_train]), data.take(order[n_train:n_train + n_val]),
            data.take(order[n_train + n_val:]))


def split_assignment(n: int, fractions=DEFAULT_FRACTIONS, seed: int = 0) -> np.ndarray:
    """Part index per row (0 train, 1 val, 2 test), consistent with :func:`split_holdout`."""
    parts = np.empty(n, dtype=np.int8)
    idx = split_holdout(_Range(n), fractions, seed)
    for k, block in enumerate(idx):
        parts[block.indices] = k
    return parts


@dataclass
class _Range:
    n: int
    indices: np.ndarray = None

    def __len__(self):
        return self.n

    def take(self, idx):
        return _Range(len(idx), np.asarray(idx))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ContractError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionCounts":
        t = np.asarray(y_true).astype(bool)
        p = np.asarray(y_pred).astype(bool)
        if t.shape != p.shape:
            raise ContractError("label and prediction arrays differ in length")
        return cls(int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(~t & ~p)),
                   int(np.sum(t & ~p)))


@dataclass(frozen=True)
class MetricScores:
    recall: float
    precision: float
    f1: float
    training_time: float = 0.0


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def metrics(c: ConfusionCounts, training_time: float = 0.0) -> MetricScores:
    """Recall, precision and F1 for the failure class; 0/0 counts as 0."""
    recall = _ratio(c.tp, c.tp + c.fn)
    precision = _ratio(c.tp, c.tp + c.fp)
    f1 = _ratio(2 * recall * precision, recall + precision)
    return MetricScores(recall, precision, f1, training_time)


def evaluate(model, test, predictions_out=None):
    """Predict every test row and score it; optionally write per-row predictions."""
    model.check_dataset(test)
    pred, score = model.predict_batch(test.rows)
    counts = ConfusionCounts.from_predictions(test.labels, pred)
    if predictions_out is not None:
        write_csv(predictions_out, ["row", "label", "predicted", "score"],
                  ((int(r), int(y), int(p), float(s))
                   for r, y, p, s in zip(test.row_provenance, test.labels, pred, score)))
    return counts, metrics(counts, model.training_time)


# training-size sweep

@dataclass(frozen=True)
class SweepRow:
    days: int
    n_train: int
    n_test: int
    recall: float
    precision: float
    f1: float
    training_time: float


@dataclass
class SweepReport:
    mode: str
    kind: str
    test_start: int
    rows: list = field(default_factory=list)

    HEADER = ("days", "n_train", "n_test", "recall", "precision", "f1", "training_time")

    def table(self, with_time: bool = True) -> tuple:
        header = self.HEADER if with_time else self.HEADER[:-1]
        body = [[getattr(r, h) for h in header] for r in self.rows]
        return header, body

    def write(self, path, with_time: bool = True) -> None:
        header, body = self.table(with_time)
        write_csv(path, header, body)


def sweep_windows(full: RecordSet, test_fraction: float = 0.2, tz_offset: int = 0):
    """(trace start, test window start, trace end) by submission time.

    Start and end are rounded out to whole days (local midnight).
    """
    sub = full.column("submission")
    t0 = (int(sub.min()) + tz_offset) // 86400 * 86400 - tz_offset
    t1 = -(-(int(sub.max()) + 1 + tz_offset) // 86400) * 86400 - tz_offset
    return t0, t1 - math.floor((t1 - t0) * test_fraction), t1


def sweep_training_size(full: RecordSet, day_grid, mode: str, spec, test_fraction: float = 0.2,
                        tz_offset: int = 0, normalize: bool = True) -> SweepReport:
    """Train on the first ``d`` days for each ``d`` and score a fixed final test window.

    The test window is the last ``test_fraction`` of the trace's submission
    span; training days are counted from the first submission and must fit
    before the test window.
    """
    from .learn import train
    from .learn.tree import warmup

    grid = [int(d) for d in day_grid]
    if not grid or min(grid) < 1:
        raise ContractError("day grid must hold positive day counts")
    if len(full) == 0:
        raise ContractError("cannot sweep an empty trace")
    if normalize:
        full = normalize_job_names(full)
    t0, test_start, _ = sweep_windows(full, test_fraction, tz_offset)
    span_days = (test_start - t0) / 86400
    if max(grid) > span_days:
        raise ContractError(
            f"day grid reaches {max(grid)} days but only {span_days:.2f} days precede the test window")
    sub = full.column("submission")
    test_rs = full.take(np.flatnonzero(sub >= test_start))
    if spec.kind in ("dt", "rf"):
        warmup()
    report = SweepReport(mode, spec.kind, test_start)
    for d in grid:
        train_rs = full.take(np.flatnonzero(sub < t0 + d * 86400))
        schema = fit_schema(train_rs, mode, tz_offset)
        data = encode(train_rs, schema)
        test = encode(test_rs, schema)
        if len(np.unique(data.labels)) < 2 and spec.kind in ("lr", "lda"):
            raise ContractError(f"first {d} days hold a single class; cannot fit {spec.kind}")
        model = train(spec, data)
        counts, m = evaluate(model, test)
        log.info("sweep %s %s days=%d n=%d f1=%.4f time=%.2fs", mode, spec.kind, d, len(data),
                 m.f1, m.training_time)
        report.rows.append(SweepRow(d, len(data), len(test), m.recall, m.precision, m.f1,
                                    m.training_time))
    return report


# characterization

_HOST = re.compile(r"^(?P<prefix>.*?)-(?P<rack>\d+)-(?P<chassis>\d+)$")


def rack_chassis(hosts, n_racks: int = 10) -> dict:
    """Map hostnames to (rack, chassis).

    ``<prefix>-<rack>-<chassis>`` names are parsed directly. Others fall back
    to the generator's layout over sorted hostnames: node i sits in rack
    ``i mod n_racks + 1``, chassis ``i div n_racks + 1``.
    """
    out = {}
    for i, h in enumerate(sorted(set(hosts))):
        m = _HOST.match(h)
        out[h] = ((int(m["rack"]), int(m["chassis"])) if m
                  else (i % n_racks + 1, i // n_racks + 1))
    return out


@dataclass
class CharacterizationReport:
    total: int
    failures: int
    by_node: dict
    rack_labels: list
    chassis_labels: list
    by_rack_chassis: np.ndarray  # rates, NaN where no jobs ran
    by_user: dict
    by_hour: list  # (count, rate) per hour
    by_dow: list
    by_wallclock_bin: list  # (bin_start, count, rate)
    bin_width: int = DEFAULT_BIN_WIDTH

    @property
    def failure_rate(self) -> float:
        return self.failures / self.total

    def write(self, outdir, charts: bool = True) -> list:
        """One CSV per grouping (plus SVG charts); returns the written paths."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []

        def csv_out(name, header, rows):
            p = outdir / name
            write_csv(p, header, rows)
            written.append(p)

        csv_out("by_node.csv", ["hostname", "count", "failure_rate"],
                [[k, c, r] for k, (c, r) in self.by_node.items()])
        csv_out("by_rack_chassis.csv", ["rack"] + [f"chassis_{c}" for c in self.chassis_labels],
                [[rk] + list(row) for rk, row in zip(self.rack_labels, self.by_rack_chassis)])
        csv_out("by_user.csv", ["owner", "count", "failure_rate"],
                [[k, c, r] for k, (c, r) in self.by_user.items()])
        csv_out("by_hour.csv", ["hour", "count", "failure_rate"],
                [[h, c, r] for h, (c, r) in enumerate(self.by_hour)])
        csv_out("by_dow.csv", ["day_of_week", "count", "failure_rate"],
                [[d, c, r] for d, (c, r) in enumerate(self.by_dow)])
        csv_out("by_wallclock.csv", ["bin_start", "count", "failure_rate"],
                [list(b) for b in self.by_wallclock_bin])
        if charts:
            written.extend(self._charts(outdir))
        return written

    def _charts(self, outdir) -> list:
        from .charts import ChartSpec, render_chart

        specs = {
            "by_hour.svg": ChartSpec("bar", {"failure rate": [r for _, r in self.by_hour]},
                                     "hour of day", "failure rate",
                                     categories=[str(h) for h in range(24)]),
            "by_dow.svg": ChartSpec("bar", {"failure rate": [r for _, r in self.by_dow]},
                                    "day of week (0 = Monday)", "failure rate",
                                    categories=[str(d) for d in range(7)]),
            "by_wallclock.svg": ChartSpec(
                "bar", {"failure rate": [b[2] for b in self.by_wallclock_bin]},
                "wallclock bin start (s)", "failure rate",
                categories=[str(b[0]) for b in self.by_wallclock_bin]),
            "by_rack_chassis.svg": ChartSpec(
                "heatmap", {f"rack {r}": list(row) for r, row in
                            zip(self.rack_labels, self.by_rack_chassis)},
                "chassis", "rack", categories=[str(c) for c in self.chassis_labels]),
        }
        paths = []
        for name, spec in specs.items():
            render_chart(spec, outdir / name)
            paths.append(outdir / name)
        return paths


def _grouped(keys, y) -> dict:
    uniq, inv = np.unique(keys, return_inverse=True)
    count = np.bincount(inv)
    fail = np.bincount(inv, weights=y)
    return {(k.item() if hasattr(k, "item") else k): (int(c), float(f / c))
            for k, c, f in zip(uniq, count, fail)}


def _dense(keys, y, size) -> list:
    count = np.bincount(keys, minlength=size)
    fail = np.bincount(keys, weights=y, minlength=size)
    return [(int(c), float(f / c) if c else 0.0) for c, f in zip(count, fail)]


def characterize(rs: RecordSet, wallclock_bin_width: int = DEFAULT_BIN_WIDTH,
                 n_racks: int = 10, tz_offset: int = 0) -> CharacterizationReport:
    """Failure counts and rates grouped by node, rack/chassis, user, time and wallclock."""
    if len(rs) == 0:
        raise ContractError("cannot characterize an empty record set")
    if wallclock_bin_width < 1:
        raise ContractError("wallclock bin width must be positive")
    y = labels(rs).astype(np.float64)
    hosts = rs.column("hostname")
    by_node = _grouped(hosts, y)
    placement = rack_chassis(by_node, n_racks)
    racks = sorted({rc[0] for rc in placement.values()})
    chassis = sorted({rc[1] for rc in placement.values()})
    r_index = {r: i for i, r in enumerate(racks)}
    c_index = {c: i for i, c in enumerate(chassis)}
    cnt = np.zeros((len(racks), len(chassis)))
    fail = np.zeros_like(cnt)
    for h, (c, rate) in by_node.items():
        i, j = r_index[placement[h][0]], c_index[placement[h][1]]
        cnt[i, j] += c
        fail[i, j] += rate * c
    with np.errstate(invalid="ignore", divide="ignore"):
        heat = np.where(cnt > 0, fail / np.where(cnt > 0, cnt, 1), np.nan)
    sub = rs.column("submission") + tz_offset
    wall = rs.column("wallclock")
    bins = wall // wallclock_bin_width
    wc = _dense(bins, y, int(bins.max()) + 1)
    return CharacterizationReport(
        total=len(rs), failures=int(y.sum()), by_node=by_node, rack_labels=racks,
        chassis_labels=chassis, by_rack_chassis=heat, by_user=_grouped(rs.column("owner"), y),
        by_hour=_dense((sub // 3600) % 24, y, 24), by_dow=_dense((sub // 86400 + 3) % 7, y, 7),
        by_wallclock_bin=[(b * wallclock_bin_width, c, r) for b, (c, r) in enumerate(wc)],
        bin_width=wallclock_bin_width)


def peak_offpeak_rates(report: CharacterizationReport, peak=(8, 18)) -> tuple:
    """Pooled failure rates inside and outside the peak submission hours."""
    inside = [report.by_hour[h] for h in range(peak[0], peak[1])]
    outside = [report.by_hour[h] for h in range(24) if not peak[0] <= h < peak[1]]

    def pooled(groups):
        n = sum(c for c, _ in groups)
        return sum(c * r for c, r in groups) / n if n else 0.0

    return pooled(inside), pooled(outside)
