"""Accounting-trace ingestion: parsing, filtering and failure labels.

The canonical input is a UTF-8 CSV whose header lists the eighteen accounting
fields in the order of ``FIELDS``. A trailing ``label`` column (as written by
:func:`write_trace` with ``with_label=True``) is accepted and ignored on read;
labels are always recomputed from ``exit_status``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, fields
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ContractError, TraceFormatError

log = logging.getLogger(__name__)

FIELDS = (
    "job_id", "owner", "group", "job_name", "granted_pe", "hostname",
    "submission", "start_time", "end_time", "wallclock", "cpu", "mem",
    "io", "iow", "maxvmem", "slots", "wait_time", "exit_status",
)
TEXT_FIELDS = frozenset({"owner", "group", "job_name", "granted_pe", "hostname"})
INT_FIELDS = frozenset({
    "job_id", "submission", "start_time", "end_time", "wallclock", "slots",
    "wait_time", "exit_status",
})
FLOAT_FIELDS = frozenset({"cpu", "mem", "io", "iow", "maxvmem"})

SCHEMA_VERSION = 1
USER_KILL_EXIT = 137  # 128 + SIGKILL: cancelled by the owner, not a failure


@dataclass(frozen=True, slots=True)
class WorkloadRecord:
    job_id: int
    owner: str
    group: str
    job_name: str
    granted_pe: str
    hostname: str
    submission: int
    start_time: int
    end_time: int
    wallclock: int
    cpu: float
    mem: float
    io: float
    iow: float
    maxvmem: float
    slots: int
    wait_time: int
    exit_status: int

    def replace(self, **changes) -> "WorkloadRecord":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return WorkloadRecord(**values)


@dataclass(frozen=True)
class RecordSet:
    """Immutable ordered collection of records plus where they came from."""

    records: tuple
    provenance: str = ""

    def __post_init__(self):
        if not isinstance(self.records, tuple):
            object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def take(self, indices: Iterable[int], provenance: str | None = None) -> "RecordSet":
        recs = self.records
        return RecordSet(tuple(recs[int(i)] for i in indices),
                         self.provenance if provenance is None else provenance)

    def column(self, name: str) -> np.ndarray:
        """Column ``name`` as a numpy array (object dtype for text fields)."""
        return self._columns[name]

    @cached_property
    def _columns(self) -> dict:
        cols = {}
        for name in FIELDS:
            values = [getattr(r, name) for r in self.records]
            if name in TEXT_FIELDS:
                cols[name] = np.array(values, dtype=object)
            elif name in INT_FIELDS:
                cols[name] = np.array(values, dtype=np.int64)
            else:
                cols[name] = np.array(values, dtype=np.float64)
        return cols


def _parse_int(text: str, column: str, row) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise TraceFormatError(f"non-numeric value {text!r}", column, row) from None
    if not math.isfinite(value) or not value.is_integer():
        raise TraceFormatError(f"expected an integer, got {text!r}", column, row)
    return int(value)


def _parse_float(text: str, column: str, row) -> float:
    try:
        value = float(text)
    except ValueError:
        raise TraceFormatError(f"non-numeric value {text!r}", column, row) from None
    if not math.isfinite(value):
        raise TraceFormatError(f"non-finite value {text!r}", column, row)
    return value


def parse_fields(values: Sequence[str], row=None) -> WorkloadRecord:
    """Build a record from already-split CSV fields."""
    if len(values) != len(FIELDS):
        raise TraceFormatError(
            f"field-count mismatch: expected {len(FIELDS)}, got {len(values)}", row=row)
    parsed = {}
    for name, text in zip(FIELDS, values):
        text = text.strip()
        if name in TEXT_FIELDS:
            parsed[name] = text
        elif name in INT_FIELDS:
            parsed[name] = _parse_int(text, name, row)
        else:
            parsed[name] = _parse_float(text, name, row)
    if parsed["wallclock"] < 0:
        raise TraceFormatError("negative wallclock", "wallclock", row)
    if not 0 <= parsed["exit_status"] <= 255:
        raise TraceFormatError(
            f"exit status {parsed['exit_status']} outside 0..255", "exit_status", row)
    if parsed["slots"] < 0:
        raise TraceFormatError("negative slots", "slots", row)
    for name in FLOAT_FIELDS:
        if parsed[name] < 0:
            raise TraceFormatError(f"negative {name}", name, row)
    return WorkloadRecord(**parsed)


def parse_accounting_line(line: str, schema_version: int = SCHEMA_VERSION,
                          row=None) -> WorkloadRecord:
    """Parse one non-header CSV row in canonical field order."""
    if schema_version != SCHEMA_VERSION:
        raise TraceFormatError(f"unsupported schema version {schema_version}", row=row)
    values = next(csv.reader([line.rstrip("\r\n")]), [])
    return parse_fields(values, row=row)


def _format_value(name: str, value) -> str:
    if name in FLOAT_FIELDS:
        return repr(float(value))
    return str(value)


def format_record(r: WorkloadRecord) -> list:
    return [_format_value(name, getattr(r, name)) for name in FIELDS]


def serialize_record(r: WorkloadRecord) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="").writerow(format_record(r))
    return buf.getvalue()


def load_trace(path, window: tuple[int, int] | None = None,
               strict: bool = False) -> RecordSet:
    """Read a canonical trace, keeping rows submitted in ``[start, end)``.

    Malformed rows are skipped with a warning unless ``strict`` is set, in
    which case the first one raises :class:`TraceFormatError`.
    """
    if window is not None and window[0] > window[1]:
        raise ContractError(f"window start {window[0]} is after end {window[1]}")
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise TraceFormatError(f"cannot read {path}: {exc}") from exc
    records = []
    skipped = 0
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            return RecordSet((), str(path))
        header = [h.strip() for h in header]
        if tuple(header[:len(FIELDS)]) != FIELDS or len(header) - len(FIELDS) not in (0, 1):
            raise TraceFormatError(f"unexpected header in {path}: {','.join(header)}", row=1)
        extra = len(header) - len(FIELDS)
        for row_no, values in enumerate(reader, start=2):
            if not values:
                continue
            if extra and len(values) == len(FIELDS) + extra:
                values = values[:len(FIELDS)]
            try:
                rec = parse_fields(values, row=row_no)
            except TraceFormatError:
                if strict:
                    raise
                skipped += 1
                log.warning("skipping malformed row %d in %s", row_no, path)
                continue
            if window is None or window[0] <= rec.submission < window[1]:
                records.append(rec)
    if skipped:
        log.warning("%d malformed rows skipped in %s", skipped, path)
    return RecordSet(tuple(records), str(path))


def write_trace(rs: RecordSet | Iterable[WorkloadRecord], path, with_label: bool = False) -> None:
    """Write records as canonical CSV, optionally with a trailing label column."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIELDS + (("label",) if with_label else ()))
        for r in rs:
            row = format_record(r)
            if with_label:
                row.append(str(label_record(r)))
            writer.writerow(row)


def never_started(r: WorkloadRecord) -> bool:
    """Default predicate for jobs the scheduler could not start on a host."""
    return r.start_time == 0 or not r.hostname


def filter_records(rs: RecordSet, drop_exit_codes=(USER_KILL_EXIT,),
                   not_started: Callable[[WorkloadRecord], bool] = never_started) -> RecordSet:
    """Drop never-started jobs and user-cancelled jobs, keeping order."""
    drop = frozenset(drop_exit_codes)
    kept = tuple(r for r in rs if not not_started(r) and r.exit_status not in drop)
    return RecordSet(kept, rs.provenance)


def label_record(r: WorkloadRecord) -> int:
    """0 for a successful job, 1 for any non-zero exit status."""
    if r.exit_status == USER_KILL_EXIT:
        raise ContractError(f"job {r.job_id} has exit status 137; filter it before labelling")
    return 0 if r.exit_status == 0 else 1


def labels(rs: RecordSet) -> np.ndarray:
    return np.fromiter((label_record(r) for r in rs), dtype=np.int8, count=len(rs))


@dataclass(frozen=True)
class ExitStatus:
    kind: str  # "normal" or "signal"
    value: int


def decompose_exit_status(code: int) -> ExitStatus:
    """Split a scheduler exit status into a plain return code or 128 + signal."""
    if not 0 <= code <= 255:
        raise ContractError(f"exit status {code} outside 0..255")
    if code >= 128:
        return ExitStatus("signal", code - 128)
    return ExitStatus("normal", code)
