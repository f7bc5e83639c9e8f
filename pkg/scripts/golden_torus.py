"""Small-divisor constant of the golden line on the 2-torus up to K = 1e4."""
import math

from siegel_theta.cohomology.torus import TorusFrame, torus_diophantine

PHI = (1 + math.sqrt(5)) / 2


def main() -> None:
    fr = TorusFrame(((1.0, PHI),))
    for K in (10, 100, 1000, 10**4):
        c, mode = torus_diophantine(fr, 1.0, K)
        print(f"K={K:6d}  c={c:.6f}  worst mode {tuple(int(v) for v in mode)}")
    print(f"1/sqrt 5 = {1 / math.sqrt(5):.6f}")


if __name__ == "__main__":
    main()
