"""End-to-end run: trace -> characterization -> models -> evaluation -> savings -> sweep.

Every CSV written here is a pure function of the run config and its input
files. Wall-clock training times are collected separately in
``timings.json``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, replace
from pathlib import Path

from .config import RunConfig, derive_seed
from .errors import ContractError
from .evaluation import characterize, evaluate, split_holdout, sweep_training_size
from .features import encode, fit_schema, normalize_job_names
from .learn import KINDS, save_model, train
from .remediate import savings_curve
from .reports import write_csv, write_metadata
from .synth import calibrate, generate_trace, summary_stats
from .trace import filter_records, load_trace, write_trace

log = logging.getLogger(__name__)

EVAL_HEADER = ("mode", "model", "n_train", "n_test", "tp", "fp", "tn", "fn", "recall",
               "precision", "f1")


class _Outputs:
    def __init__(self, root: Path, cfg: RunConfig):
        self.root = root
        self.cfg = cfg
        self.written = []

    def path(self, *parts) -> Path:
        p = self.root.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def done(self, path, **extra) -> None:
        write_metadata(path, self.cfg.digest(), self.cfg.seed, **extra)
        self.written.append(Path(path))


def run_pipeline(cfg: RunConfig, kinds=KINDS) -> dict:
    """Run every stage; returns ``{"written": [...], "timings": {...}}``."""
    kinds = tuple(kinds)
    if cfg.model_spec.kind not in kinds:
        kinds = kinds + (cfg.model_spec.kind,)
    trace_path = cfg.path("trace")
    if trace_path is not None and not trace_path.exists():
        raise ContractError(f"trace file {trace_path} does not exist")
    out = _Outputs(cfg.path("outdir"), cfg)
    timings = {}

    # trace
    gen = cfg.generator
    if trace_path is None:
        if cfg.calibrate_targets is not None:
            gen = calibrate(gen, cfg.calibrate_targets)
        raw = generate_trace(gen)
        p = out.path("trace.csv")
        write_trace(raw, p)
        out.done(p, generator=gen.to_dict())
    else:
        raw = load_trace(trace_path)
    rs = normalize_job_names(filter_records(raw))
    if len(rs) < 3:
        raise ContractError("trace holds fewer than 3 usable records")

    stats = summary_stats(rs)
    p = out.path("summary.csv")
    write_csv(p, ["records", "failure_count_rate", "failed_cpu_share", "failed_mem_share"],
              [[len(rs), *stats.headline()]])
    out.done(p)

    report = characterize(rs, tz_offset=cfg.tz_offset)
    for p in report.write(out.path("characterize", "x").parent, charts=cfg.charts):
        out.done(p)

    # holdout models
    train_rs, _val_rs, test_rs = split_holdout(rs, cfg.fractions, derive_seed(cfg.seed, "split"))
    rows = []
    primary = {}
    for mode in ("queue", "runtime"):
        schema = fit_schema(train_rs, mode, cfg.tz_offset)
        schema_path = out.path("models", f"schema_{mode}.json")
        schema.save(schema_path)
        out.done(schema_path)
        data, test = encode(train_rs, schema), encode(test_rs, schema)
        for kind in kinds:
            spec = replace(cfg.model_spec, kind=kind)
            model = train(spec, data)
            timings[f"train_{mode}_{kind}"] = model.training_time
            model_path = out.path("models", f"{mode}_{kind}.json")
            save_model(replace(model, training_time=0.0), model_path)
            out.done(model_path, spec=asdict(spec))
            c, m = evaluate(model, test)
            rows.append([mode, kind, len(data), len(test), c.tp, c.fp, c.tn, c.fn,
                         m.recall, m.precision, m.f1])
            if kind == cfg.model_spec.kind:
                primary[mode] = (model, schema)
            log.info("%s %s recall=%.4f precision=%.4f f1=%.4f", mode, kind, m.recall,
                     m.precision, m.f1)
    p = out.path("evaluation.csv")
    write_csv(p, EVAL_HEADER, rows)
    out.done(p)

    # proactive kill on the held-out jobs
    model, schema = primary["runtime"]
    curve = savings_curve(model, test_rs, schema, cfg.checkpoints, cfg.rw_mode, cfg.absorbing)
    p = out.path("savings.csv")
    curve.write(p)
    out.done(p, rw_mode=cfg.rw_mode, absorbing=cfg.absorbing)
    if cfg.charts:
        p = out.path("savings.svg")
        curve.chart(p)
        out.done(p)

    # training-size sweep
    if cfg.sweep_days:
        sweep = sweep_training_size(rs, cfg.sweep_days, "runtime", cfg.model_spec,
                                    tz_offset=cfg.tz_offset, normalize=False)
        for r in sweep.rows:
            timings[f"sweep_{r.days}d"] = r.training_time
        p = out.path("sweep.csv")
        sweep.write(p, with_time=False)
        out.done(p, mode="runtime", model=cfg.model_spec.kind)

    p = out.path("timings.json")
    p.write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    out.written.append(p)
    return {"written": out.written, "timings": timings}
