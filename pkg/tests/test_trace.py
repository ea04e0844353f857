import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SAMPLE_LINE
from wfpred.errors import ContractError, TraceFormatError
from wfpred.trace import (
    FIELDS,
    RecordSet,
    WorkloadRecord,
    decompose_exit_status,
    filter_records,
    label_record,
    labels,
    load_trace,
    parse_accounting_line,
    serialize_record,
    write_trace,
)


def record(**kw):
    base = parse_accounting_line(SAMPLE_LINE)
    return base.replace(**kw)


def test_parse_sample_line():
    r = parse_accounting_line(SAMPLE_LINE)
    assert r.wallclock == 3600
    assert r.slots == 36
    assert r.exit_status == 0
    assert r.maxvmem == 4.2e9
    assert r.owner == "alice" and r.hostname == "cpu-23-1"


def test_short_line_reports_field_count():
    line = SAMPLE_LINE.rsplit(",", 1)[0]
    with pytest.raises(TraceFormatError, match="field-count mismatch"):
        parse_accounting_line(line, row=7)


def test_exit_status_seven_is_kept():
    line = SAMPLE_LINE[:-1] + "7"
    assert parse_accounting_line(line).exit_status == 7


@pytest.mark.parametrize("column,value,match", [
    ("cpu", "abc", "column 'cpu'"),
    ("wallclock", "-5", "column 'wallclock'"),
    ("exit_status", "300", "column 'exit_status'"),
    ("slots", "2.5", "column 'slots'"),
])
def test_bad_values_name_column_and_row(column, value, match):
    values = SAMPLE_LINE.split(",")
    values[FIELDS.index(column)] = value
    with pytest.raises(TraceFormatError, match=match) as info:
        parse_accounting_line(",".join(values), row=12)
    assert "row 12" in str(info.value)
    assert info.value.column == column


def test_scientific_notation_in_integer_column():
    values = SAMPLE_LINE.split(",")
    values[FIELDS.index("submission")] = "1.59624e9"
    assert parse_accounting_line(",".join(values)).submission == 1596240000


def test_load_window_half_open(tmp_path):
    rs = RecordSet(tuple(record(job_id=i, submission=s) for i, s in enumerate((100, 200, 300))), "t")
    path = tmp_path / "t.csv"
    write_trace(rs, path)
    assert len(load_trace(path)) == 3
    got = load_trace(path, window=(150, 300))
    assert [r.submission for r in got] == [200]


def test_load_rejects_inverted_window(tmp_path):
    path = tmp_path / "t.csv"
    write_trace(RecordSet((record(),), "t"), path)
    with pytest.raises(ContractError):
        load_trace(path, window=(10, 5))


def test_load_empty_file_is_empty_set(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(FIELDS) + "\n")
    assert len(load_trace(path)) == 0


def test_load_skips_malformed_rows_unless_strict(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text(",".join(FIELDS) + "\n" + SAMPLE_LINE + "\n1,2,3\n" + SAMPLE_LINE + "\n")
    assert len(load_trace(path)) == 2
    with pytest.raises(TraceFormatError, match="row 3"):
        load_trace(path, strict=True)


def test_load_accepts_label_column(tmp_path):
    path = tmp_path / "t.csv"
    rs = RecordSet((record(exit_status=2), record(exit_status=0)), "t")
    write_trace(rs, path, with_label=True)
    assert path.read_text().splitlines()[0].endswith(",label")
    back = load_trace(path)
    assert back.records == rs.records


def test_load_bad_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(TraceFormatError, match="header"):
        load_trace(path)


def test_unreadable_file(tmp_path):
    with pytest.raises(TraceFormatError):
        load_trace(tmp_path / "missing.csv")


def test_window_matches_generator_ledger(tmp_path):
    from wfpred.synth import GeneratorConfig, daily_counts, generate_trace

    cfg = GeneratorConfig(n_users=20, days=60, jobs_per_day_mean=20.0, seed=5)
    path = tmp_path / "gen.csv"
    write_trace(generate_trace(cfg), path)
    first30 = load_trace(path, window=(cfg.start_epoch, cfg.start_epoch + 30 * 86400))
    assert len(first30) == int(daily_counts(cfg)[:30].sum())


def test_filter_rules():
    kept = record(exit_status=1)
    rs = RecordSet((record(exit_status=137), record(start_time=0), record(hostname=""), kept), "t")
    assert filter_records(rs).records == (kept,)


def test_filter_keeps_order_and_is_idempotent(small_trace):
    once = filter_records(small_trace)
    assert filter_records(once).records == once.records
    ids = [id(r) for r in once]
    positions = {id(r): i for i, r in enumerate(small_trace)}
    assert [positions[i] for i in ids] == sorted(positions[i] for i in ids)


@pytest.mark.parametrize("code,label", [(0, 0), (255, 1), (2, 1), (1, 1)])
def test_labels(code, label):
    assert label_record(record(exit_status=code)) == label


def test_label_of_user_kill_is_a_contract_error():
    with pytest.raises(ContractError):
        label_record(record(exit_status=137))


@pytest.mark.parametrize("code,kind,value", [(137, "signal", 9), (0, "normal", 0),
                                             (130, "signal", 2), (127, "normal", 127)])
def test_decompose_examples(code, kind, value):
    e = decompose_exit_status(code)
    assert (e.kind, e.value) == (kind, value)


@given(st.integers(0, 127))
def test_decompose_signal_range(s):
    e = decompose_exit_status(128 + s)
    assert (e.kind, e.value) == ("signal", s)


@pytest.mark.parametrize("code", [-1, 256])
def test_decompose_out_of_range(code):
    with pytest.raises(ContractError):
        decompose_exit_status(code)


# fields are whitespace-stripped on parse, so only generate stripped text
text = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zs", "Zl", "Zp")),
               max_size=12)
nonneg = st.floats(min_value=0, max_value=1e15, allow_nan=False, allow_infinity=False)
epoch = st.integers(0, 2 ** 40)


@st.composite
def records(draw):
    sub = draw(epoch)
    wait = draw(st.integers(0, 10 ** 6))
    wall = draw(st.integers(0, 172800))
    return WorkloadRecord(
        job_id=draw(st.integers(0, 2 ** 40)), owner=draw(text), group=draw(text),
        job_name=draw(text), granted_pe=draw(text), hostname=draw(text), submission=sub,
        start_time=sub + wait, end_time=sub + wait + wall, wallclock=wall, cpu=draw(nonneg),
        mem=draw(nonneg), io=draw(nonneg), iow=draw(nonneg), maxvmem=draw(nonneg),
        slots=draw(st.integers(1, 4096)), wait_time=wait, exit_status=draw(st.integers(0, 255)))


@given(records())
def test_serialize_parse_round_trip(r):
    assert parse_accounting_line(serialize_record(r)) == r


@given(st.lists(records(), max_size=8))
def test_file_round_trip_preserves_order(tmp_path_factory, rs):
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    write_trace(RecordSet(tuple(rs), "x"), path)
    assert load_trace(path, strict=True).records == tuple(rs)


@given(st.lists(records(), max_size=20))
def test_labels_zero_iff_success(rs):
    kept = filter_records(RecordSet(tuple(rs), "x"))
    y = labels(kept)
    assert set(np.unique(y)) <= {0, 1}
    assert all((lab == 0) == (r.exit_status == 0) for lab, r in zip(y, kept))


def test_columns_are_typed(small_trace):
    assert small_trace.column("cpu").dtype == np.float64
    assert small_trace.column("slots").dtype == np.int64
    assert small_trace.column("owner").dtype == object


def test_take_keeps_provenance(small_trace):
    sub = small_trace.take([2, 0])
    assert sub.records == (small_trace[2], small_trace[0])
    assert sub.provenance == small_trace.provenance


def test_record_replace_is_a_copy():
    r = record()
    r2 = r.replace(owner="bob")
    assert r.owner == "alice" and r2.owner == "bob"
    assert dataclasses.asdict(r2)["job_id"] == r.job_id
