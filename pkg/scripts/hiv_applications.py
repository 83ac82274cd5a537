"""HIV applications: two-sample test across privacy budgets and the one-sample Alabama test.

p-values for the two-sample comparison are summarized over repeated seeds.
"""

import argparse
import statistics

from fima.cli import HIV_SWEEP_EPSILONS, run


def main(argv=None):
    p = argparse.ArgumentParser(description="HIV application reruns.")
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--H", type=int, default=1000)
    args = p.parse_args(argv)

    print("two-sample, H1: theta1 > theta2")
    print(f"{'epsilon':>8} {'median p':>9} {'max p':>8}")
    runs = [run(["apps", "hiv-sweep", "--H", str(args.H), "--seed", str(1000 * s)])[1]["results"]
            for s in range(args.repeats)]
    for i, eps in enumerate(HIV_SWEEP_EPSILONS):
        ps = [r[i]["p_value"] for r in runs]
        print(f"{eps:>8} {statistics.median(ps):>9.4f} {max(ps):>8.4f}")

    _, one = run(["apps", "hiv-one-sample", "--seed", "0"])
    print(f"\none-sample vs gamma=0.7: p={one['p_value']:.4f} "
          f"CI=({one['ci']['lower']:.4f}, {one['ci']['upper']:.4f})")


if __name__ == "__main__":
    main()
