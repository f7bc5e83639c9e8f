"""Normalized theta sums for a few g=1 data, with running-max growth fits.

Usage: python scripts/theta_growth.py [n_max]
"""
import math
import sys

import numpy as np

from siegel_theta.theta import QuadraticData, growth_fit, theta_sum

DATA = {
    "sqrt2": math.sqrt(2),
    "golden": (1 + math.sqrt(5)) / 2,
    "pi": math.pi,
    "1/3": 1 / 3,
}


def main(n_max: int = 10**6) -> None:
    print(f"{'q':>8} {'slope':>8} {'max |Theta|/sqrt N':>20}")
    for name, q in DATA.items():
        r = theta_sum(QuadraticData([[q]], [0.0]), n_max=n_max, n_checkpoints=24)
        fit = growth_fit(r, window=(n_max // 1000, n_max))
        print(f"{name:>8} {fit.slope:8.4f} {np.max(r.normalized):20.4f}")


if __name__ == "__main__":
    main(int(float(sys.argv[1])) if len(sys.argv) > 1 else 10**6)
