"""Command-line entry point: ``fima <subcommand> [flags]``.

Analyst mode (default) takes already-privatized statistics. Curator mode takes
raw counts, privatizes them with the given budget and seed, then infers.
Exit codes: 0 ok, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .chisq import TABLE_SENSITIVITY, ContingencyTable, fima_chisq_test
from .core import FimaConfig, fima_sample
from .harness import PRESETS, make_design, preset_spec, run_experiment
from .inference import one_sample_test, percentile_ci, two_sample_test
from .logistic import logistic_inference
from .mechanisms import (DpRelease, NoiseFamily, PrivacyParams, ReleaseKind, privatize_counts,
                         privatize_proportions)

# HIV diagnoses quoted in the applications: national MSM counts and Alabama Q3 2024.
HIV_TWO_SAMPLE = dict(x1=9374, x2=8831, n=37981)
HIV_ONE_SAMPLE = dict(x=232, n=374, gamma=0.7)
HIV_SWEEP_EPSILONS = (0.001, 0.01, 0.1, 0.5, 1, 3, 5, 10)


class UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _unit_open(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return value


def _common(p: argparse.ArgumentParser, H_default=10_000):
    p.add_argument("--epsilon", type=_positive_float, default=1.0)
    p.add_argument("--family", choices=[f.value for f in NoiseFamily], default="laplace")
    p.add_argument("--H", type=_positive_int, default=H_default, help="number of fiducial draws")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--delta", type=_unit_open, default=None)
    p.add_argument("--method", choices=["beta", "order"], default="beta")
    p.add_argument("--mode", choices=["analyst", "curator"], default="analyst",
                   help="analyst: inputs are privatized; curator: inputs are raw and get privatized")
    p.add_argument("--out", choices=["json", "csv", "plain"], default="json")
    p.add_argument("--verbose", action="store_true", help="human-readable summary on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fima", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("privatize", help="privatize a proportion, counts, or a table")
    _common(p)
    p.add_argument("--x", type=float, nargs="+", help="success counts (proportion release needs --n)")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--kind", choices=["proportion", "count"], default="proportion")
    p.add_argument("--input", help="CSV contingency table to privatize at table sensitivity")

    p = sub.add_parser("ci", help="percentile confidence interval for one proportion")
    _common(p)
    p.add_argument("--pi-hat", type=float)
    p.add_argument("--x", type=int)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--level", type=_unit_open, default=0.95)
    p.add_argument("--sided", choices=["two-sided", "lower", "upper"], default="two-sided")

    p = sub.add_parser("test-one", help="one-sample proportion test")
    _common(p)
    p.add_argument("--pi-hat", type=float)
    p.add_argument("--x", type=int)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--direction", choices=["less", "greater"], default="less")
    p.add_argument("--alpha", type=_unit_open, default=0.05)
    p.add_argument("--level", type=_unit_open, default=0.95)

    p = sub.add_parser("test-two", help="two-sample proportion test on theta1 - theta2")
    _common(p, H_default=1000)
    p.add_argument("--pi-hat1", type=float)
    p.add_argument("--pi-hat2", type=float)
    p.add_argument("--x1", type=int)
    p.add_argument("--x2", type=int)
    p.add_argument("--n1", type=_positive_int, required=True)
    p.add_argument("--n2", type=_positive_int, required=True)
    p.add_argument("--split-budget", action="store_true",
                   help="each sample's release uses epsilon/2")
    p.add_argument("--direction", choices=["less", "greater"], default="less")
    p.add_argument("--alpha", type=_unit_open, default=0.05)

    p = sub.add_parser("chisq", help="independence test on a (privatized) CSV table")
    _common(p)
    p.add_argument("--input", required=True, help="CSV grid of cell counts, optional header row")
    p.add_argument("--n", type=_positive_int, help="public grand total (default: table sum)")
    p.add_argument("--alpha", type=_unit_open, default=0.05)

    p = sub.add_parser("logit", help="logistic coefficients from per-cell success counts")
    _common(p)
    p.add_argument("--design", default="one-binary",
                   help="one-binary, two-binary or saturated-K")
    p.add_argument("--counts", type=float, nargs="+", required=True,
                   help="per-cell success counts (privatized in analyst mode)")
    p.add_argument("--n-per-cell", type=_positive_int, nargs="+", required=True)
    p.add_argument("--level", type=_unit_open, default=0.95)

    p = sub.add_parser("bench", help="Monte Carlo study from a preset")
    p.add_argument("--task", required=True, choices=sorted({t for t, _ in PRESETS}))
    p.add_argument("--preset", default="desk", choices=["desk", "full"])
    p.add_argument("--B", type=_positive_int)
    p.add_argument("--H", type=_positive_int)
    p.add_argument("--epsilon", type=_positive_float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", choices=["json", "csv", "plain"], default="csv")
    p.add_argument("--csv", dest="csv_path", help="also write CSV here")
    p.add_argument("--json", dest="json_path", help="also write JSON here")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("apps", help="rerun the HIV applications from their published counts")
    p.add_argument("which", choices=["hiv-two-sample", "hiv-one-sample", "hiv-sweep"])
    p.add_argument("--epsilon", type=_positive_float)
    p.add_argument("--H", type=_positive_int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", choices=["json", "csv", "plain"], default="json")
    p.add_argument("--verbose", action="store_true")
    return parser


def _config(args) -> FimaConfig:
    kwargs = {"H": args.H, "method": args.method}
    if args.delta is not None:
        kwargs["delta"] = args.delta
    return FimaConfig(**kwargs)


def _seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    return args.seed


def _pick(args, private: str, raw: str):
    """Return the privatized value in analyst mode or the raw value in curator mode."""
    if args.mode == "analyst":
        value = getattr(args, private)
        if value is None:
            raise UsageError(f"--{private.replace('_', '-')} is required in analyst mode")
    else:
        value = getattr(args, raw)
        if value is None:
            raise UsageError(f"--{raw} is required in curator mode")
    return value


def _proportion_release(args, rng, value, n, epsilon) -> tuple[DpRelease, bool]:
    params = PrivacyParams.for_proportion(n, epsilon, args.family)
    if args.mode == "curator":
        if not 0 <= value <= n:
            raise UsageError(f"count {value} outside [0, {n}]")
        return privatize_proportions([value / n], n, params, rng), True
    return DpRelease([value], n, params, ReleaseKind.PROPORTION), False


def read_table_csv(path: str) -> np.ndarray:
    """Numeric grid from CSV; a first row that is entirely non-numeric is a header."""
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if any(c.strip() for c in r)]
    if not rows:
        raise UsageError(f"{path}: empty table")

    def numeric(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    if not any(numeric(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise UsageError(f"{path}: table has a header but no data rows")
    width = len(rows[0])
    grid = []
    for i, row in enumerate(rows, start=1):
        if len(row) != width:
            raise UsageError(f"{path}: data row {i} has {len(row)} columns, expected {width}")
        values = []
        for j, cell in enumerate(row, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise UsageError(f"{path}: data row {i}, column {j}: {cell!r} is not a number") from None
        grid.append(values)
    return np.array(grid)


def cmd_privatize(args) -> dict:
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    if args.input:
        cells = read_table_csv(args.input)
        params = PrivacyParams.for_count(args.epsilon, args.family, TABLE_SENSITIVITY)
        rel = privatize_counts(cells, params, rng)
        return {"table": rel.values.reshape(cells.shape).tolist(), "n": rel.n,
                "epsilon": args.epsilon, "family": args.family, "seed": seed}
    if args.x is None:
        raise UsageError("give --x counts or --input table")
    if args.kind == "proportion":
        if args.n is None:
            raise UsageError("--n is required for a proportion release")
        params = PrivacyParams.for_proportion(args.n, args.epsilon, args.family)
        rel = privatize_proportions(np.asarray(args.x) / args.n, args.n, params, rng)
    else:
        params = PrivacyParams.for_count(args.epsilon, args.family)
        rel = privatize_counts(args.x, params, rng, n=args.n)
    return {**rel.to_dict(), "seed": seed}


def cmd_ci(args) -> dict:
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    value = _pick(args, "pi_hat", "x")
    release, _ = _proportion_release(args, rng, value, args.n, args.epsilon)
    draws = fima_sample(release, _config(args), rng)[0]
    ci = percentile_ci(draws, args.level, args.sided)
    return {"pi_hat": float(release.values[0]), "n": args.n, **ci.to_dict(),
           "draws": draws.summary(), "epsilon": args.epsilon, "family": args.family,
           "mode": args.mode, "seed": seed}


def cmd_test_one(args) -> dict:
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    value = _pick(args, "pi_hat", "x")
    release, _ = _proportion_release(args, rng, value, args.n, args.epsilon)
    draws = fima_sample(release, _config(args), rng)[0]
    res = one_sample_test(draws, args.gamma, args.direction, args.alpha)
    ci = percentile_ci(draws, args.level)
    return {"pi_hat": float(release.values[0]), "n": args.n, "gamma": args.gamma,
            **res.to_dict(), "ci": ci.to_dict(), "epsilon": args.epsilon,
            "family": args.family, "mode": args.mode, "seed": seed}


def cmd_test_two(args) -> dict:
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    eps = args.epsilon / 2 if args.split_budget else args.epsilon
    v1 = _pick(args, "pi_hat1", "x1")
    v2 = _pick(args, "pi_hat2", "x2")
    r1, _ = _proportion_release(args, rng, v1, args.n1, eps)
    r2, _ = _proportion_release(args, rng, v2, args.n2, eps)
    cfg = _config(args)
    d1 = fima_sample(r1, cfg, rng)[0]
    d2 = fima_sample(r2, cfg, rng)[0]
    res = two_sample_test(d1, d2, args.direction, args.alpha)
    return {"pi_hat1": float(r1.values[0]), "pi_hat2": float(r2.values[0]),
            "n1": args.n1, "n2": args.n2, **res.to_dict(), "epsilon": args.epsilon,
            "epsilon_per_sample": eps, "family": args.family, "mode": args.mode, "seed": seed}


def cmd_chisq(args) -> dict:
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    cells = read_table_csv(args.input)
    if args.mode == "curator":
        if np.any(cells < 0) or np.any(cells != np.round(cells)):
            raise UsageError("curator mode needs a raw table of nonnegative integer counts")
        n = int(cells.sum())
        params = PrivacyParams.for_count(args.epsilon, args.family, TABLE_SENSITIVITY)
        cells = privatize_counts(cells, params, rng, n=n).values.reshape(cells.shape)
    else:
        n = args.n if args.n is not None else max(int(round(cells.sum())), 1)
    res = fima_chisq_test(ContingencyTable(cells, n), args.epsilon, _config(args), rng,
                          args.alpha, args.family)
    return {**res.to_dict(), "n": n, "table": cells.tolist(), "epsilon": args.epsilon,
            "family": args.family, "mode": args.mode, "seed": seed}


def cmd_logit(args) -> dict:
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    design = make_design(args.design)
    counts = np.asarray(args.counts, dtype=float)
    if counts.size != design.n_cells:
        raise UsageError(f"design {args.design} needs {design.n_cells} counts, got {counts.size}")
    sizes = args.n_per_cell if len(args.n_per_cell) > 1 else args.n_per_cell * design.n_cells
    if len(sizes) != design.n_cells:
        raise UsageError("--n-per-cell takes one value or one per cell")
    if args.mode == "curator":
        params = PrivacyParams.for_count(args.epsilon, args.family)
        counts = privatize_counts(counts, params, rng).values
    res = logistic_inference(counts, sizes, args.epsilon, design, _config(args), rng,
                             args.level, args.family)
    return {"design": args.design, "counts": counts.tolist(), "n_per_cell": list(sizes),
            "coefficients": res.to_dict(), "epsilon": args.epsilon, "family": args.family,
            "mode": args.mode, "seed": seed}


def cmd_bench(args):
    overrides = {k: getattr(args, k) for k in ("B", "H", "epsilon") if getattr(args, k) is not None}
    spec = preset_spec(args.task, args.preset, seed=args.seed, workers=args.workers, **overrides)
    result = run_experiment(spec)
    if args.csv_path:
        result.to_csv(args.csv_path)
    if args.json_path:
        with open(args.json_path, "w") as f:
            json.dump(result.to_json(), f, indent=2)
    return result


def cmd_apps(args) -> dict:
    seed = args.seed if args.seed is not None else int(np.random.SeedSequence().entropy % (2 ** 63))
    if args.which == "hiv-one-sample":
        ns = argparse.Namespace(mode="curator", x=HIV_ONE_SAMPLE["x"], pi_hat=None,
                                n=HIV_ONE_SAMPLE["n"], gamma=HIV_ONE_SAMPLE["gamma"],
                                direction="less", alpha=0.05, level=0.95,
                                epsilon=args.epsilon or 1.0, family="laplace",
                                H=args.H or 10_000, delta=None, method="beta", seed=seed)
        return cmd_test_one(ns)
    epsilons = HIV_SWEEP_EPSILONS if args.which == "hiv-sweep" else (args.epsilon or 0.1,)
    rows = []
    for i, eps in enumerate(epsilons):
        ns = argparse.Namespace(mode="curator", x1=HIV_TWO_SAMPLE["x1"], x2=HIV_TWO_SAMPLE["x2"],
                                pi_hat1=None, pi_hat2=None, n1=HIV_TWO_SAMPLE["n"],
                                n2=HIV_TWO_SAMPLE["n"], split_budget=True, direction="greater",
                                alpha=0.05, epsilon=eps, family="laplace", H=args.H or 1000,
                                delta=None, method="beta", seed=seed + i)
        rows.append(cmd_test_two(ns))
    return rows[0] if args.which == "hiv-two-sample" else {"seed": seed, "results": rows}


COMMANDS = {
    "privatize": cmd_privatize, "ci": cmd_ci, "test-one": cmd_test_one, "test-two": cmd_test_two,
    "chisq": cmd_chisq, "logit": cmd_logit, "bench": cmd_bench, "apps": cmd_apps,
}


def _flatten(d: dict, prefix="") -> dict:
    flat = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            flat[key] = json.dumps(v)
        else:
            flat[key] = v
    return flat


def render(result, fmt: str) -> str:
    if hasattr(result, "to_csv"):
        if fmt == "json":
            return json.dumps(result.to_json(), indent=2)
        buf = io.StringIO()
        result.to_csv(buf)
        return buf.getvalue().rstrip("\n")
    if fmt == "json":
        return json.dumps(result, indent=2)
    records = result["results"] if "results" in result else [result]
    flat = [_flatten(r) for r in records]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(flat[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(flat)
        return buf.getvalue().rstrip("\n")
    return "\n\n".join("\n".join(f"{k:>20}: {v}" for k, v in r.items()) for r in flat)


def run(argv=None):
    """Parse ``argv`` and return the command's in-memory result."""
    parser = build_parser()
    args = parser.parse_args(argv)
    return args, COMMANDS[args.command](args)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fima: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OverflowError, OSError) as exc:
        print(f"fima: runtime error: {exc}", file=sys.stderr)
        return 1
    print(render(result, args.out))
    if args.verbose:
        print(render(result, "plain"), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
