"""Tame-estimate ratio as a function of the central character h.

The max ratio decays like a power of |h| (about 1/|h| for the default
orders); this prints the scan and the fitted log-log slope.
"""
import math

import numpy as np

from siegel_theta.cohomology.forms import closed_sampler, tame_ratio


def main() -> None:
    hs = np.array([0.5, 1.0, 2.0, 2 * math.pi, 4 * math.pi, 8 * math.pi])
    vals = []
    for h in hs:
        r = tame_ratio(closed_sampler(2, 1, 16), 1.0, 1, 2, 2, 0.1, 100, 0, cutoff=64, h=float(h))
        vals.append(r.max_ratio)
        print(f"h={h:8.4f}  max ratio {r.max_ratio:.4e}")
    slope = np.polyfit(np.log(hs), np.log(vals), 1)[0]
    print(f"log-log slope {slope:.3f}")


if __name__ == "__main__":
    main()
