"""Command-line entry point: ``wfpred <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors and 2 on data or contract
errors. Every report gets a ``<name>.meta.json`` sidecar.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_grid, read_document, tomllib
from .errors import ContractError, SchemaMismatchError, WfpredError
from .reports import write_csv, write_metadata

log = logging.getLogger("wfpred")

COMMANDS = ("ingest", "generate", "calibrate", "featurize", "train", "evaluate", "sweep",
            "characterize", "simulate-kill", "pipeline")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _args_hash(args) -> str:
    doc = {k: str(v) for k, v in sorted(vars(args).items()) if k != "func"}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _meta(path, args, seed=None, config_hash=None, **extra):
    write_metadata(path, config_hash or _args_hash(args), seed, command=args.command, **extra)


def _check_writable(*paths):
    for p in paths:
        if p is None:
            continue
        parent = Path(p).resolve().parent
        if not parent.is_dir():
            raise ContractError(f"output directory {parent} does not exist")


def _window(args):
    if args.start is None and args.end is None:
        return None
    return (args.start if args.start is not None else -(2 ** 63),
            args.end if args.end is not None else 2 ** 63 - 1)


def _value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _generator_config(args):
    from .synth import GeneratorConfig

    doc = read_document(args.config) if args.config else {}
    if "generator" in doc and isinstance(doc["generator"], dict):
        doc = dict(doc["generator"])  # accept a run config too
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ContractError(f"--set expects key=value, got {item!r}")
        doc[key.strip()] = _value(value.strip())
    if args.seed is not None:
        doc["seed"] = args.seed
    return GeneratorConfig.from_dict(doc)


def _load_records(path, window=None):
    from .trace import filter_records, load_trace

    return filter_records(load_trace(path, window))


# subcommands

def cmd_ingest(args):
    from .trace import write_trace

    _check_writable(args.output)
    rs = _load_records(args.input, _window(args))
    write_trace(rs, args.output, with_label=True)
    _meta(args.output, args, records=len(rs))
    print(f"{len(rs)} records written to {args.output}")


def cmd_generate(args):
    from .synth import generate_trace, write_ledger

    cfg = _generator_config(args)
    _check_writable(args.output, args.ledger)
    from .trace import write_trace

    rs = generate_trace(cfg)
    write_trace(rs, args.output)
    _meta(args.output, args, seed=cfg.seed, generator=cfg.to_dict(), records=len(rs))
    if args.ledger:
        write_ledger(cfg, args.ledger)
        _meta(args.ledger, args, seed=cfg.seed)
    print(f"{len(rs)} records written to {args.output}")


def cmd_calibrate(args):
    from .synth import calibration_run, save_generator_config

    cfg = _generator_config(args)
    try:
        targets = tuple(float(x) for x in args.targets.split(","))
    except ValueError as exc:
        raise ContractError(f"malformed targets {args.targets!r}") from exc
    if len(targets) != 3:
        raise ContractError("--targets needs count rate, cpu share and mem share")
    _check_writable(args.output)
    tuned, rounds, stats = calibration_run(cfg, targets, args.max_iters, args.tol)
    save_generator_config(tuned, args.output)
    _meta(args.output, args, seed=tuned.seed, rounds=rounds, achieved=list(stats.headline()))
    print(f"calibrated in {rounds} round(s): count rate {stats.failure_count_rate:.4f}, "
          f"cpu share {stats.failed_cpu_share:.4f}, mem share {stats.failed_mem_share:.4f}")


def cmd_featurize(args):
    from .evaluation import split_assignment
    from .features import FeatureSchema, encode, fit_schema, normalize_job_names
    from .trace import write_trace

    if args.schema_in is None and args.schema_out is None:
        raise ContractError("featurize needs --schema-out or --schema-in")
    fractions = tuple(float(x) for x in args.split.split(","))
    _check_writable(args.output, args.schema_out, args.test_out)
    rs = _load_records(args.input)
    if len(rs) == 0:
        raise ContractError(f"no usable records in {args.input}")
    if not args.no_normalize:
        rs = normalize_job_names(rs, args.similarity)
    if args.schema_in:
        schema = FeatureSchema.load(args.schema_in)
        if schema.mode != args.mode:
            raise SchemaMismatchError(f"schema mode {schema.mode} differs from --mode {args.mode}")
        parts = np.full(len(rs), 2, dtype=np.int8)
    else:
        parts = split_assignment(len(rs), fractions, args.seed)
        schema = fit_schema(rs.take(np.flatnonzero(parts == 0)), args.mode, args.tz_offset)
    data = encode(rs, schema)
    data.save(args.output, parts=parts)
    _meta(args.output, args, seed=args.seed, mode=args.mode, rows=len(data),
          schema_fingerprint=schema.fingerprint())
    if args.schema_out:
        schema.save(args.schema_out)
        _meta(args.schema_out, args, seed=args.seed)
    if args.test_out:
        write_trace(rs.take(np.flatnonzero(parts == 2)), args.test_out, with_label=True)
        _meta(args.test_out, args, seed=args.seed)
    print(f"{len(data)} rows x {data.rows.shape[1]} features "
          f"(train {int(np.sum(parts == 0))}, val {int(np.sum(parts == 1))}, "
          f"test {int(np.sum(parts == 2))})")


def _part(data, parts, which: str):
    if parts is None or which == "all":
        return data
    code = {"train": 0, "val": 1, "test": 2}[which]
    return data.take(np.flatnonzero(parts == code))


def cmd_train(args):
    from .features import Dataset, FeatureSchema
    from .learn import ModelSpec, save_model, train

    data, parts = Dataset.load(args.data, with_parts=True)
    schema = FeatureSchema.load(args.schema)
    if schema.fingerprint() != data.schema.fingerprint():
        raise SchemaMismatchError("dataset was not encoded with this schema")
    doc = {"kind": args.model, "seed": args.seed}
    if args.trees is not None:
        doc["rf_n_trees"] = args.trees
    if args.c is not None:
        doc["lr_c"] = args.c
    spec = ModelSpec.from_dict(doc)
    subset = _part(data, parts, args.part)
    if len(subset) == 0:
        raise ContractError(f"no rows in the {args.part} part")
    _check_writable(args.output)
    model = train(spec, subset)
    save_model(model, args.output)
    _meta(args.output, args, seed=args.seed, spec=dataclasses.asdict(spec))
    print(f"trained {args.model} on {len(subset)} rows; training time {model.training_time:.3f} s")


def cmd_evaluate(args):
    from .evaluation import evaluate
    from .features import Dataset
    from .learn import load_model

    model = load_model(args.model)
    data, parts = Dataset.load(args.data, with_parts=True)
    test = _part(data, parts, args.part)
    model.check_dataset(test)
    _check_writable(args.predictions_out, args.report)
    c, m = evaluate(model, test, args.predictions_out)
    if args.predictions_out:
        _meta(args.predictions_out, args)
    if args.report:
        write_csv(args.report, ["model", "mode", "n", "tp", "fp", "tn", "fn", "recall",
                                "precision", "f1"],
                  [[model.spec.kind, model.mode, c.total, c.tp, c.fp, c.tn, c.fn, m.recall,
                    m.precision, m.f1]])
        _meta(args.report, args)
    print(f"rows {c.total}  tp {c.tp} fp {c.fp} tn {c.tn} fn {c.fn}")
    print(f"recall {m.recall:.4f}  precision {m.precision:.4f}  f1 {m.f1:.4f}  "
          f"training time {m.training_time:.3f} s")


def cmd_sweep(args):
    from .evaluation import sweep_training_size
    from .learn import ModelSpec

    grid = parse_grid(args.days)
    doc = {"kind": args.model, "seed": args.seed}
    if args.trees is not None:
        doc["rf_n_trees"] = args.trees
    spec = ModelSpec.from_dict(doc)
    _check_writable(args.report)
    rs = _load_records(args.data)
    report = sweep_training_size(rs, grid, args.mode, spec, args.test_fraction, args.tz_offset)
    report.write(args.report)
    _meta(args.report, args, seed=args.seed, mode=args.mode, model=args.model)
    for r in report.rows:
        print(f"{r.days:4d} days  n={r.n_train:7d}  recall {r.recall:.4f}  precision "
              f"{r.precision:.4f}  f1 {r.f1:.4f}  time {r.training_time:.2f} s")


def cmd_characterize(args):
    from .evaluation import characterize

    rs = _load_records(args.input)
    report = characterize(rs, args.bin_width, args.n_racks, args.tz_offset)
    for p in report.write(args.outdir, charts=not args.no_charts):
        _meta(p, args)
    print(f"{report.total} records, failure rate {report.failure_rate:.4f}; reports in {args.outdir}")


def cmd_simulate_kill(args):
    from .features import FeatureSchema
    from .learn import load_model
    from .remediate import savings_curve

    model = load_model(args.model)
    schema = FeatureSchema.load(args.schema)
    grid = parse_grid(args.grid)
    _check_writable(args.report, args.svg)
    rs = _load_records(args.test)
    curve = savings_curve(model, rs, schema, grid, args.rw_mode, args.absorbing, args.node_cores)
    curve.write(args.report)
    _meta(args.report, args, rw_mode=args.rw_mode, absorbing=args.absorbing)
    if args.svg:
        curve.chart(args.svg)
        _meta(args.svg, args)
    first = curve.points[0]
    print(f"t={first.t}: cpu saving {first.r_saving_cpu:.4f}, mem saving {first.r_saving_mem:.4f}, "
          f"{first.node_days_saved(args.node_cores):.2f} node-days")


def cmd_pipeline(args):
    from .pipeline import run_pipeline

    doc = read_document(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
        # stage seeds are re-derived from the new run seed
        doc.setdefault("generator", {}).pop("seed", None)
        doc.setdefault("model", {}).pop("seed", None)
    paths = dict(doc.get("paths", {}))
    base = Path(args.config).parent
    if args.outdir:
        paths["outdir"] = str(Path(args.outdir).resolve())
    if args.trace:
        paths["trace"] = str(Path(args.trace).resolve())
    if paths:
        doc["paths"] = paths
    if args.model:
        doc.setdefault("model", {})["kind"] = args.model
    if args.trees is not None:
        doc.setdefault("model", {})["rf_n_trees"] = args.trees
    if args.rw_mode:
        doc["rw_mode"] = args.rw_mode
    if args.absorbing is not None:
        doc["absorbing"] = args.absorbing
    if args.no_charts:
        doc["charts"] = False
    cfg = RunConfig.from_dict(doc, base_dir=base)
    kinds = tuple(args.kinds.split(",")) if args.kinds else None
    result = run_pipeline(cfg, kinds) if kinds else run_pipeline(cfg)
    print(f"pipeline wrote {len(result['written'])} files to {cfg.path('outdir')}")


# parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wfpred", description="Workload failure prediction toolkit.")
    p.add_argument("--log-level", default="WARNING",
                   choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("ingest", help="filter and label a canonical trace CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--from", dest="start", type=int, help="first submission epoch (inclusive)")
    s.add_argument("--to", dest="end", type=int, help="last submission epoch (exclusive)")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("generate", help="write a synthetic trace")
    s.add_argument("--config", help="generator config (TOML or JSON)")
    s.add_argument("--output", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    s.add_argument("--ledger", help="also write per-day record counts (JSON)")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("calibrate", help="tune a generator config to failure-rate targets")
    s.add_argument("--config")
    s.add_argument("--targets", default="0.085,0.211,0.202",
                   help="count rate, failed cpu share, failed mem share")
    s.add_argument("--output", required=True, help="calibrated config (.toml or .json)")
    s.add_argument("--seed", type=int)
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.add_argument("--max-iters", type=int, default=10)
    s.add_argument("--tol", type=float, default=0.02)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("featurize", help="encode a trace into a feature matrix")
    s.add_argument("--input", required=True)
    s.add_argument("--mode", required=True, choices=("queue", "runtime"))
    s.add_argument("--output", required=True, help="dataset (.npz)")
    s.add_argument("--schema-out")
    s.add_argument("--schema-in")
    s.add_argument("--split", default="0.65,0.15,0.20")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--similarity", type=float, default=0.8)
    s.add_argument("--no-normalize", action="store_true", help="skip job-name clustering")
    s.add_argument("--tz-offset", type=int, default=0)
    s.add_argument("--test-out", help="also write the test-part records as CSV")
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("train", help="fit one classifier")
    s.add_argument("--data", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--model", required=True, choices=("gnb", "lr", "lda", "dt", "rf"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trees", type=int)
    s.add_argument("--c", type=float, help="inverse L2 strength for lr")
    s.add_argument("--part", default="train", choices=("train", "val", "test", "all"))
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="score a model on a dataset")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--part", default="test", choices=("train", "val", "test", "all"))
    s.add_argument("--predictions-out")
    s.add_argument("--report")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="metrics and training time against training days")
    s.add_argument("--data", required=True, help="trace CSV")
    s.add_argument("--days", default="1..60", help="'1..60', '1,7,30' or 'start:stop:step'")
    s.add_argument("--model", default="rf", choices=("gnb", "lr", "lda", "dt", "rf"))
    s.add_argument("--mode", default="runtime", choices=("queue", "runtime"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trees", type=int)
    s.add_argument("--test-fraction", type=float, default=0.2)
    s.add_argument("--tz-offset", type=int, default=0)
    s.add_argument("--report", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("characterize", help="failure rates by node, user, time and wallclock")
    s.add_argument("--input", required=True)
    s.add_argument("--outdir", required=True)
    s.add_argument("--bin-width", type=int, default=6000)
    s.add_argument("--n-racks", type=int, default=10)
    s.add_argument("--tz-offset", type=int, default=0)
    s.add_argument("--no-charts", action="store_true")
    s.set_defaults(func=cmd_characterize)

    s = sub.add_parser("simulate-kill", help="resource savings from killing predicted failures")
    s.add_argument("--model", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--test", required=True, help="test trace CSV")
    s.add_argument("--grid", default="600:21600:600")
    s.add_argument("--rw-mode", default="consumed", choices=("consumed", "full"))
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--absorbing", dest="absorbing", action="store_true", default=True)
    mode.add_argument("--snapshots", dest="absorbing", action="store_false")
    s.add_argument("--node-cores", type=int, default=36)
    s.add_argument("--report", required=True)
    s.add_argument("--svg")
    s.set_defaults(func=cmd_simulate_kill)

    s = sub.add_parser("pipeline", help="run every stage from one config")
    s.add_argument("--config", required=True)
    s.add_argument("--outdir")
    s.add_argument("--trace", help="use this trace instead of generating one")
    s.add_argument("--seed", type=int)
    s.add_argument("--model", choices=("gnb", "lr", "lda", "dt", "rf"))
    s.add_argument("--kinds", help="comma-separated model kinds to evaluate")
    s.add_argument("--trees", type=int)
    s.add_argument("--rw-mode", choices=("consumed", "full"))
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--absorbing", dest="absorbing", action="store_true", default=None)
    mode.add_argument("--snapshots", dest="absorbing", action="store_false")
    s.add_argument("--no-charts", action="store_true")
    s.set_defaults(func=cmd_pipeline)
    return p


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, stream=sys.stderr,
                        format="level=%(levelname)s logger=%(name)s msg=%(message)s")
    try:
        args.func(args)
    except (WfpredError, OSError) as exc:
        print(f"wfpred {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
