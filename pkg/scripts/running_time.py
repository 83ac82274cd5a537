"""Mean per-call running time of FIMA and the classical baselines across n."""

import argparse

from fima.harness import FIMA, preset_spec, run_experiment


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--preset", choices=["desk", "full"], default="desk")
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--out", default="running_time.csv")
    args = p.parse_args(argv)

    spec = preset_spec("running-time", args.preset, B=args.B)
    result = run_experiment(spec)
    result.to_csv(args.out)
    print(f"{'n':>6} " + " ".join(f"{m:>10}" for m in spec.methods))
    for n in spec.n_values:
        print(f"{n:>6} " + " ".join(f"{result.value(method=m, n=n):>10.3f}" for m in spec.methods))
    fima = [result.value(method=FIMA, n=n) for n in spec.n_values]
    print(f"FIMA max/min ratio: {max(fima) / min(fima):.2f}")


if __name__ == "__main__":
    main()
