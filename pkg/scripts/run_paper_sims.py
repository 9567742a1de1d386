"""Run both bundled scenarios and write plot-ready CSVs under OUT/<name>/."""
import argparse
import sys

from motionforce.cli import main
from motionforce.model import bundled_scenario_path


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out", help="output root (default: out)")
    parser.add_argument("--workers", type=int, default=None, help="parallel workers")
    return parser.parse_args()


if __name__ == "__main__":
    args = parse_args()
    batch = ",".join(str(bundled_scenario_path(n)) for n in ("sim1", "sim2"))
    argv = ["run", "--batch", batch, "--out", args.out, "--check", "force-bound"]
    if args.workers is not None:
        argv += ["--workers", str(args.workers)]
    sys.exit(main(argv))
