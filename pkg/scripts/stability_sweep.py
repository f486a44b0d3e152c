"""Stability estimate on the mixed family for several exponents."""
import argparse
import sys

from gaussflow import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ps", nargs="+", default=["1.1", "1.5", "1.9"])
    ap.add_argument("--out", default="results/stability")
    ap.add_argument("--workers", default="1")
    a = ap.parse_args()
    for p in a.ps:
        code = cli.main(["stability", "--p", p, "--workers", a.workers,
                         "--out", f"{a.out}/p{p}"])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
