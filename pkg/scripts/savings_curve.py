"""Resource savings from killing predicted failures at each checkpoint.

Trains the runtime random forest on a calibrated trace and simulates
proactive kills on the held-out jobs. Writes ``savings.csv`` and
``savings.svg``.

    python scripts/savings_curve.py --outdir out/savings --rw-mode full
"""

import argparse
from pathlib import Path

from wfpred.config import parse_grid
from wfpred.evaluation import split_holdout
from wfpred.features import encode, fit_schema, normalize_job_names
from wfpred.learn import ModelSpec, train
from wfpred.remediate import savings_curve
from wfpred.synth import GeneratorConfig, calibrate, generate_trace, reference_targets
from wfpred.trace import filter_records


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="out/savings")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--grid", default="600:21600:600")
    ap.add_argument("--rw-mode", default="consumed", choices=("consumed", "full"))
    ap.add_argument("--snapshots", action="store_true", help="score every checkpoint independently")
    ap.add_argument("--trees", type=int, default=100)
    args = ap.parse_args()

    cfg = calibrate(GeneratorConfig(seed=args.seed), reference_targets())
    rs = normalize_job_names(filter_records(generate_trace(cfg)))
    train_rs, _, test_rs = split_holdout(rs, seed=args.seed)
    schema = fit_schema(train_rs, "runtime")
    model = train(ModelSpec("rf", rf_n_trees=args.trees, seed=args.seed), encode(train_rs, schema))
    curve = savings_curve(model, test_rs, schema, parse_grid(args.grid), args.rw_mode,
                          absorbing=not args.snapshots)

    print(f"{'t':>6s} {'cpu':>8s} {'mem':>8s} {'node-days':>10s} {'running':>8s}")
    for p in curve.points:
        print(f"{p.t:6d} {p.r_saving_cpu:8.4f} {p.r_saving_mem:8.4f} "
              f"{p.node_days_saved():10.2f} {p.n_running:8d}")
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    curve.write(out / "savings.csv")
    curve.chart(out / "savings.svg")


if __name__ == "__main__":
    main()
