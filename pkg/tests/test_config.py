import json
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wfpred.config import RunConfig, derive_seed, parse_grid, read_document, write_flat_document
from wfpred.errors import ContractError

DEMO = Path(__file__).resolve().parents[1] / "configs" / "demo.toml"


def test_demo_config_loads():
    cfg = RunConfig.load(DEMO)
    assert cfg.seed == 7
    assert cfg.model_spec.kind == "rf" and cfg.model_spec.rf_n_trees == 50
    assert cfg.sweep_days == [1, 4, 8, 16]
    assert cfg.checkpoints == list(range(600, 21601, 600))
    assert cfg.calibrate_targets == (0.085, 0.211, 0.202)
    assert cfg.path("outdir") == DEMO.parent / "../out/demo"
    assert cfg.path("trace") is None


def test_sub_seeds_flow_from_run_seed():
    cfg = RunConfig.from_dict({"seed": 3, "paths": {"outdir": "o"}})
    assert cfg.generator.seed == derive_seed(3, "generate")
    assert cfg.model_spec.seed == derive_seed(3, "train")
    explicit = RunConfig.from_dict({"seed": 3, "paths": {"outdir": "o"}, "generator": {"seed": 5}})
    assert explicit.generator.seed == 5


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, "split") == derive_seed(0, "split")
    seeds = {derive_seed(s, stage) for s in range(5) for stage in ("split", "train", "generate")}
    assert len(seeds) == 15
    assert all(0 <= s < 2 ** 64 for s in seeds)


@pytest.mark.parametrize("doc", [
    {"paths": {"outdir": "o"}, "colour": 1},
    {"paths": {"outdir": "o", "scratch": "s"}},
    {"paths": {"trace": "t.csv"}},
    {"paths": {"outdir": "o"}, "generator": {"colour": 1}},
    {"paths": {"outdir": "o"}, "grids": {"days": "1..3"}},
    {"paths": {"outdir": "o"}, "model": {"kind": "svm"}},
    {"paths": {"outdir": "o"}, "rw_mode": "half"},
    {"paths": {"outdir": "o"}, "seed": -4},
])
def test_rejects_bad_documents(doc):
    with pytest.raises(ContractError):
        RunConfig.from_dict(doc)


def test_digest_ignores_outdir_only():
    a = RunConfig.from_dict({"seed": 1, "paths": {"outdir": "x"}})
    b = RunConfig.from_dict({"seed": 1, "paths": {"outdir": "y"}})
    c = RunConfig.from_dict({"seed": 2, "paths": {"outdir": "x"}})
    assert a.digest() == b.digest() != c.digest()


@pytest.mark.parametrize("text,expected", [
    ("600:2400:600", [600, 1200, 1800, 2400]),
    ("1..4", [1, 2, 3, 4]),
    ("1,7,30", [1, 7, 30]),
    ("5", [5]),
])
def test_parse_grid(text, expected):
    assert parse_grid(text) == expected


@pytest.mark.parametrize("text", ["a..b", "1:2", "1:10:0", "x,y"])
def test_parse_grid_errors(text):
    with pytest.raises(ContractError):
        parse_grid(text)


@given(st.integers(1, 100), st.integers(0, 100), st.integers(1, 20))
def test_colon_grid_is_inclusive_range(lo, extra, step):
    grid = parse_grid(f"{lo}:{lo + extra}:{step}")
    assert grid == list(range(lo, lo + extra + 1, step))


def test_json_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 9, "paths": {"outdir": "out"},
                                "grids": {"sweep_days": "1,2"}, "calibrate": {"targets": "0.1,0.2,0.3"}}))
    cfg = RunConfig.load(path)
    assert cfg.sweep_days == [1, 2]
    assert cfg.calibrate_targets == (0.1, 0.2, 0.3)
    assert cfg.path("outdir") == tmp_path / "out"


def test_unreadable_documents(tmp_path):
    with pytest.raises(ContractError):
        read_document(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = = 3\n")
    with pytest.raises(ContractError):
        read_document(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ContractError):
        read_document(arr)


@given(st.dictionaries(st.from_regex(r"[a-z][a-z_]{0,10}", fullmatch=True),
                       st.one_of(st.integers(-10 ** 12, 10 ** 12), st.booleans(),
                                 st.floats(allow_nan=False, allow_infinity=False),
                                 st.text(max_size=10),
                                 st.lists(st.integers(0, 100), max_size=4)), max_size=6),
       st.sampled_from([".toml", ".json"]))
def test_flat_document_round_trip(tmp_path_factory, doc, suffix):
    path = tmp_path_factory.mktemp("doc") / f"d{suffix}"
    write_flat_document(doc, path)
    assert read_document(path) == doc


def test_flat_document_rejects_nan(tmp_path):
    with pytest.raises(ContractError):
        write_flat_document({"x": float("nan")}, tmp_path / "d.toml")
