"""Convergence of the finite-dimensional sphere quantities to the Gaussian deficit."""
import argparse
import sys

from gaussflow import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", default="1.5")
    ap.add_argument("--out", default="results/bridge")
    a = ap.parse_args()
    dims = ["1e2", "3e2", "1e3", "3e3", "1e4", "3e4", "1e5", "1e6"]
    code = cli.main(["bridge", "--p", a.p, "--d", *dims, "--grid-n", "8192", "--out", a.out])
    return code or cli.main(["bridge", "--d", *dims, "--grid-n", "8192",
                             "--out", a.out + "-logsob"])


if __name__ == "__main__":
    sys.exit(main())
