"""Run one preset Monte Carlo study and write its CSV and JSON.

    python scripts/run_study.py one-sample-ci --preset desk --out results/
"""

import argparse
import json
import sys
from pathlib import Path

from fima.harness import PRESETS, preset_spec, run_experiment


def main(argv=None):
    p = argparse.ArgumentParser(description="Run a preset Monte Carlo study.")
    p.add_argument("task", choices=sorted({t for t, _ in PRESETS}))
    p.add_argument("--preset", choices=["desk", "full"], default="desk")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--B", type=int)
    p.add_argument("--H", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("results"))
    args = p.parse_args(argv)

    overrides = {k: getattr(args, k) for k in ("epsilon", "B", "H") if getattr(args, k) is not None}
    spec = preset_spec(args.task, args.preset, seed=args.seed, workers=args.workers, **overrides)
    result = run_experiment(spec)

    args.out.mkdir(parents=True, exist_ok=True)
    stem = args.out / f"{args.task}_{args.preset}"
    result.to_csv(stem.with_suffix(".csv"))
    stem.with_suffix(".json").write_text(json.dumps(result.to_json(), indent=2))
    for r in result.rows:
        print(f"{r.method:>8} n={r.n} theta={r.theta} gamma={r.gamma} "
              f"{r.metric}={r.value:.4f} se={r.stderr:.4f} ms={r.ms:.3f}", file=sys.stderr)


if __name__ == "__main__":
    main()
