"""Queue-time and runtime model comparison on a calibrated synthetic trace.

Trains all five classifiers in both modes on a 65/15/20 holdout split and
prints recall, precision, F1 and training time. Writes ``tables.csv``.

    python scripts/reproduce_tables.py --outdir out/tables
"""

import argparse
import logging
from pathlib import Path

from wfpred.evaluation import evaluate, split_holdout
from wfpred.features import encode, fit_schema, normalize_job_names
from wfpred.learn import KINDS, ModelSpec, train
from wfpred.reports import write_csv
from wfpred.synth import GeneratorConfig, calibrate, generate_trace, reference_targets, summary_stats
from wfpred.trace import filter_records


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="out/tables")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--days", type=int, default=60)
    ap.add_argument("--trees", type=int, default=100)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = calibrate(GeneratorConfig(days=args.days, seed=args.seed), reference_targets())
    rs = normalize_job_names(filter_records(generate_trace(cfg)))
    stats = summary_stats(rs)
    print(f"{len(rs)} jobs; failure rate {stats.failure_count_rate:.4f}, "
          f"failed cpu {stats.failed_cpu_share:.4f}, failed mem {stats.failed_mem_share:.4f}")

    train_rs, _, test_rs = split_holdout(rs, seed=args.seed)
    rows = []
    for mode in ("queue", "runtime"):
        schema = fit_schema(train_rs, mode)
        data, test = encode(train_rs, schema), encode(test_rs, schema)
        print(f"\n{mode} model ({data.rows.shape[1]} features)")
        print(f"{'model':6s} {'recall':>8s} {'precision':>10s} {'f1':>8s} {'time (s)':>9s}")
        for kind in KINDS:
            model = train(ModelSpec(kind, rf_n_trees=args.trees, seed=args.seed), data)
            _, m = evaluate(model, test)
            print(f"{kind:6s} {m.recall:8.4f} {m.precision:10.4f} {m.f1:8.4f} {m.training_time:9.2f}")
            rows.append([mode, kind, m.recall, m.precision, m.f1, m.training_time])

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "tables.csv", ["mode", "model", "recall", "precision", "f1", "training_time"], rows)


if __name__ == "__main__":
    main()
