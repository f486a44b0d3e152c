"""Search for data whose deficit initially increases, across a line of m values at fixed p."""
import argparse

import numpy as np

from gaussflow import atlas, flow
from gaussflow.measure import build_gaussian


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=1.5)
    ap.add_argument("--grid-n", type=int, default=1024)
    a = ap.parse_args()
    mu = build_gaussian(10.0, a.grid_n)
    lo, hi = atlas.m_pm_gauss(a.p)
    print(f"admissible interval at p={a.p}: [{lo:.6f}, {hi:.6f}]")
    for m in np.round(np.linspace(0.2, 2.4, 12), 3):
        r = flow.counterexample_search(a.p, float(m), mu)
        print(f"m={m:5.3f} inside={lo <= m <= hi!s:5} status={r.status:9} "
              f"best rate={r.best_rate:+.3e} params={np.round(r.params, 3)}")


if __name__ == "__main__":
    main()
