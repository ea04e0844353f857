"""Metrics and training time against the number of training days.

The trace spans ``days`` days; the last 20% is the fixed test window, so
75 days leave room for a 60-day training set.

    python scripts/training_size_sweep.py --days 75 --grid 1,7,14,30,45,60
"""

import argparse
from pathlib import Path

from wfpred.charts import ChartSpec, render_chart
from wfpred.config import parse_grid
from wfpred.evaluation import sweep_training_size
from wfpred.learn import ModelSpec
from wfpred.synth import GeneratorConfig, calibrate, generate_trace, reference_targets
from wfpred.trace import filter_records


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="out/sweep")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--days", type=int, default=75)
    ap.add_argument("--grid", default="1,7,14,30,45,60")
    ap.add_argument("--mode", default="runtime", choices=("queue", "runtime"))
    ap.add_argument("--model", default="rf", choices=("gnb", "lr", "lda", "dt", "rf"))
    ap.add_argument("--trees", type=int, default=100)
    args = ap.parse_args()

    cfg = calibrate(GeneratorConfig(days=args.days, seed=args.seed), reference_targets())
    rs = filter_records(generate_trace(cfg))
    spec = ModelSpec(args.model, rf_n_trees=args.trees, seed=args.seed)
    report = sweep_training_size(rs, parse_grid(args.grid), args.mode, spec)

    print(f"{'days':>5s} {'n_train':>8s} {'recall':>8s} {'precision':>10s} {'f1':>8s} {'time (s)':>9s}")
    for r in report.rows:
        print(f"{r.days:5d} {r.n_train:8d} {r.recall:8.4f} {r.precision:10.4f} {r.f1:8.4f} "
              f"{r.training_time:9.2f}")
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    report.write(out / "sweep.csv")
    days = [r.days for r in report.rows]
    render_chart(ChartSpec("line", {"f1": [r.f1 for r in report.rows],
                                    "precision": [r.precision for r in report.rows],
                                    "recall": [r.recall for r in report.rows]},
                           "training days", "score", x_values=days,
                           title="Scores by training size"), out / "sweep_scores.svg")
    render_chart(ChartSpec("line", {"training time (s)": [r.training_time for r in report.rows]},
                           "training days", "seconds", x_values=days,
                           title="Training time by training size"), out / "sweep_time.svg")


if __name__ == "__main__":
    main()
