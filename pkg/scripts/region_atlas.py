"""Tabulate admissible (p, m) regions for several dimensions and the Gaussian limit."""
import argparse
import sys

from gaussflow import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", nargs="+", default=["3", "5", "10", "50", "inf"])
    ap.add_argument("--resolution", type=int, default=201)
    ap.add_argument("--out", default="results/atlas")
    a = ap.parse_args()
    return cli.main(["atlas", "--d", *a.dims, "--resolution", str(a.resolution), "--out", a.out])


if __name__ == "__main__":
    sys.exit(main())
