"""Feature engineering: derived features, job-name clustering, encoding."""

from __future__ import annotations

import hashlib
import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, ModelFormatError
from .trace import RecordSet, WorkloadRecord, label_record

CATEGORICAL = ("owner", "group", "job_name", "granted_pe", "hostname")
QUEUE_NUMERIC = ("hour_of_day", "day_of_week", "slots")
RUNTIME_NUMERIC = QUEUE_NUMERIC + (
    "cpu", "mem", "io", "iow", "maxvmem", "wallclock", "wait_time",
    "cpu_intensity", "avg_mem",
)
MODES = ("queue", "runtime")
SCHEMA_FORMAT = "wfpred-feature-schema"
SCHEMA_VERSION = 1
DEFAULT_SIMILARITY = 0.8

_DIGITS = re.compile(r"\d+")


@dataclass(frozen=True)
class DerivedFeatures:
    hour_of_day: int
    day_of_week: int  # Monday = 0
    cpu_intensity: float
    avg_mem: float


def derive_features(r: WorkloadRecord, tz_offset: int = 0) -> DerivedFeatures:
    if r.wallclock <= 0:
        raise ContractError(f"job {r.job_id}: wallclock must be positive")
    if r.slots <= 0:
        raise ContractError(f"job {r.job_id}: slots must be positive")
    hour, dow = submission_hour_dow(r.submission, tz_offset)
    return DerivedFeatures(hour, dow, (r.cpu / r.slots) / r.wallclock, r.mem / r.wallclock)


def submission_hour_dow(submission: int, tz_offset: int = 0) -> tuple[int, int]:
    local = submission + tz_offset
    hour = (local // 3600) % 24
    # the epoch fell on a Thursday
    dow = (local // 86400 + 3) % 7
    return int(hour), int(dow)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def name_similarity(a: str, b: str) -> float:
    """1 - edit distance / longer length; two empty strings are identical."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def canonical_name(name: str) -> str:
    return _DIGITS.sub("", name).lower()


def cluster_names(names, threshold: float = DEFAULT_SIMILARITY) -> dict:
    """Map each name to the smallest name in its single-link cluster."""
    by_canon = defaultdict(list)
    for n in sorted(set(names)):
        by_canon[canonical_name(n)].append(n)
    canon = sorted(by_canon)
    parent = list(range(len(canon)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(canon)):
        for j in range(i + 1, len(canon)):
            if name_similarity(canon[i], canon[j]) >= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    rep = {}
    for i, c in enumerate(canon):
        root = find(i)
        smallest = by_canon[c][0]
        if root not in rep or smallest < rep[root]:
            rep[root] = smallest
    return {n: rep[find(i)] for i, c in enumerate(canon) for n in by_canon[c]}


def normalize_job_names(rs: RecordSet, similarity_threshold: float = DEFAULT_SIMILARITY) -> RecordSet:
    """Give similar job names of the same owner one shared name.

    Names are compared after stripping digit runs and lower-casing. Owners
    are clustered independently, so two users' jobs never share a cluster.
    """
    if not 0 < similarity_threshold <= 1:
        raise ContractError(f"similarity threshold {similarity_threshold} not in (0, 1]")
    per_owner = defaultdict(set)
    for r in rs:
        per_owner[r.owner].add(r.job_name)
    mapping = {owner: cluster_names(names, similarity_threshold)
               for owner, names in per_owner.items()}
    out = tuple(
        r if mapping[r.owner][r.job_name] == r.job_name
        else r.replace(job_name=mapping[r.owner][r.job_name])
        for r in rs
    )
    return RecordSet(out, rs.provenance)


@dataclass
class FeatureSchema:
    mode: str
    categorical_vocab: dict
    numeric_stats: dict  # column -> (mean, std); std == 0 marks a constant column
    tz_offset: int = 0

    @property
    def numeric_columns(self) -> tuple:
        return RUNTIME_NUMERIC if self.mode == "runtime" else QUEUE_NUMERIC

    @property
    def output_dimension(self) -> int:
        return sum(len(v) for v in self.categorical_vocab.values()) + len(self.numeric_stats)

    def column_names(self) -> list:
        names = [f"{col}={cat}" for col in CATEGORICAL for cat in self.categorical_vocab[col]]
        return names + list(self.numeric_columns)

    def blocks(self) -> list:
        """(column, start, stop) for every one-hot block in encoded rows."""
        out, start = [], 0
        for col in CATEGORICAL:
            stop = start + len(self.categorical_vocab[col])
            out.append((col, start, stop))
            start = stop
        return out

    def to_dict(self) -> dict:
        return {
            "format": SCHEMA_FORMAT,
            "version": SCHEMA_VERSION,
            "mode": self.mode,
            "tz_offset": self.tz_offset,
            "categorical_vocab": {c: list(self.categorical_vocab[c]) for c in CATEGORICAL},
            "numeric_stats": {c: list(self.numeric_stats[c]) for c in self.numeric_columns},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureSchema":
        if doc.get("format") != SCHEMA_FORMAT:
            raise ModelFormatError("not a feature schema document")
        if doc.get("version") != SCHEMA_VERSION:
            raise ModelFormatError(f"unsupported schema version {doc.get('version')}")
        try:
            return cls(
                mode=doc["mode"],
                categorical_vocab={c: list(doc["categorical_vocab"][c]) for c in CATEGORICAL},
                numeric_stats={c: tuple(float(v) for v in s) for c, s in doc["numeric_stats"].items()},
                tz_offset=int(doc.get("tz_offset", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed feature schema: {exc}") from exc

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FeatureSchema":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ModelFormatError(f"cannot read schema {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ModelFormatError(f"cannot read schema {path}: not a JSON object")
        return cls.from_dict(doc)


def numeric_matrix(rs: RecordSet, columns, tz_offset: int = 0) -> np.ndarray:
    """Raw (unscaled) numeric features, one column per name in ``columns``."""
    n = len(rs)
    out = np.empty((n, len(columns)), dtype=np.float64)
    if n == 0:
        return out
    sub = rs.column("submission") + tz_offset
    wall = rs.column("wallclock").astype(np.float64)
    slots = rs.column("slots").astype(np.float64)
    if np.any(wall <= 0) and any(c in ("cpu_intensity", "avg_mem") for c in columns):
        raise ContractError("records with non-positive wallclock cannot be encoded")
    for j, col in enumerate(columns):
        if col == "hour_of_day":
            out[:, j] = (sub // 3600) % 24
        elif col == "day_of_week":
            out[:, j] = (sub // 86400 + 3) % 7
        elif col == "cpu_intensity":
            out[:, j] = (rs.column("cpu") / slots) / wall
        elif col == "avg_mem":
            out[:, j] = rs.column("mem") / wall
        else:
            out[:, j] = rs.column(col)
    return out


def fit_schema(train: RecordSet, mode: str, tz_offset: int = 0) -> FeatureSchema:
    """Learn one-hot vocabularies and numeric moments from the training split only."""
    if mode not in MODES:
        raise ContractError(f"unknown mode {mode!r}")
    if len(train) == 0:
        raise ContractError("cannot fit a feature schema on an empty training set")
    vocab = {c: sorted(set(train.column(c).tolist())) for c in CATEGORICAL}
    columns = RUNTIME_NUMERIC if mode == "runtime" else QUEUE_NUMERIC
    raw = numeric_matrix(train, columns, tz_offset)
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    stats = {}
    for j, col in enumerate(columns):
        s = float(std[j])
        # round-off on a constant column can leave a tiny positive std
        if s <= 1e-12 * max(1.0, abs(float(mean[j]))):
            s = 0.0
        stats[col] = (float(mean[j]), s)
    return FeatureSchema(mode, vocab, stats, tz_offset)


@dataclass
class Dataset:
    rows: np.ndarray
    labels: np.ndarray
    schema: FeatureSchema
    row_provenance: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.row_provenance is None:
            self.row_provenance = np.arange(len(self.labels))
        if self.rows.shape[0] != len(self.labels):
            raise ContractError("row count and label count differ")

    def __len__(self):
        return len(self.labels)

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.rows[idx], self.labels[idx], self.schema, self.row_provenance[idx])

    def save(self, path, parts=None) -> None:
        extra = {} if parts is None else {"parts": np.asarray(parts, dtype=np.int8)}
        with open(path, "wb") as fh:
            np.savez_compressed(
                fh, rows=self.rows, labels=self.labels, row_provenance=self.row_provenance,
                schema=np.array(json.dumps(self.schema.to_dict(), sort_keys=True)), **extra)

    @classmethod
    def load(cls, path, with_parts: bool = False):
        try:
            with np.load(path, allow_pickle=False) as z:
                schema = FeatureSchema.from_dict(json.loads(str(z["schema"])))
                ds = cls(z["rows"], z["labels"], schema, z["row_provenance"])
                parts = z["parts"] if "parts" in z.files else None
        except (OSError, ValueError, KeyError) as exc:
            raise ModelFormatError(f"cannot read dataset {path}: {exc}") from exc
        return (ds, parts) if with_parts else ds


def encode(rs: RecordSet, schema: FeatureSchema, with_labels: bool = True,
           raw_numeric: np.ndarray | None = None) -> Dataset:
    """One-hot categoricals against the schema vocab, z-score the numerics.

    An unseen category leaves its block all zero; constant numeric columns
    encode as 0. ``raw_numeric`` substitutes precomputed unscaled values for
    the schema's numeric columns (see :func:`numeric_matrix`).
    """
    n = len(rs)
    rows = np.zeros((n, schema.output_dimension), dtype=np.float64)
    for col, start, stop in schema.blocks():
        index = {cat: i for i, cat in enumerate(schema.categorical_vocab[col])}
        pos = np.fromiter((index.get(v, -1) for v in rs.column(col)) if n else (),
                          dtype=np.int64, count=n)
        hit = np.flatnonzero(pos >= 0)
        rows[hit, start + pos[hit]] = 1.0
    columns = schema.numeric_columns
    if raw_numeric is None:
        raw = numeric_matrix(rs, columns, schema.tz_offset)
    else:
        raw = np.asarray(raw_numeric, dtype=np.float64)
        if raw.shape != (n, len(columns)):
            raise ContractError(f"raw numeric block must have shape {(n, len(columns))}")
    base = schema.output_dimension - len(columns)
    for j, col in enumerate(columns):
        mean, std = schema.numeric_stats[col]
        rows[:, base + j] = 0.0 if std == 0 else (raw[:, j] - mean) / std
    y = (np.fromiter((label_record(r) for r in rs), dtype=np.int8, count=n)
         if with_labels else np.zeros(n, dtype=np.int8))
    return Dataset(rows, y, schema, np.arange(n))
