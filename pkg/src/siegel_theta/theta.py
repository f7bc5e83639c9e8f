"""Finite theta sums ``sum_{n in [0,N]^g} e(Q[n] + l.n)`` and growth fits.

Phases are reduced mod 1 in exact rational arithmetic (floats are binary
rationals) at every anchor, so integer shifts of ``l`` or of ``Q`` leave the
computed terms bit-for-bit unchanged.  Between anchors the terms follow the
second-difference recurrence ``term_{j+1} = term_j * e(b + q(2j+1))``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError, FitError, NoPredictionError
from .reduction import DiophantineReport, thread_cap

ANCHOR_BLOCK = 1 << 16
DEFAULT_BUDGET = 2 * 10**9
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class QuadraticData:
    Q: np.ndarray
    l: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        Q = np.atleast_2d(np.array(self.Q, dtype=float))
        l = np.atleast_1d(np.array(self.l, dtype=float))
        if Q.shape[0] != Q.shape[1] or l.shape != (Q.shape[0],):
            raise DimensionError("Q must be g x g and l of length g")
        if np.abs(Q - Q.T).max() > 1e-14:
            raise DomainError("Q must be symmetric")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(l)) and math.isfinite(self.t)):
            raise DomainError("non-finite data")
        # exact symmetry so that the rational phases are well defined
        Q = 0.5 * (Q + Q.T)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "t", float(self.t))

    @property
    def g(self) -> int:
        return self.Q.shape[0]

    def scaled(self, k: int) -> "QuadraticData":
        """``(kQ, 2k l)``, the data of the k-th Fourier mode of a pretheta sum."""
        return QuadraticData(k * self.Q, 2 * k * self.l, 0.0)


@dataclass(frozen=True)
class SumResult:
    g: int
    checkpoints: tuple  # of (N, raw, normalized)
    complete: bool = True

    @property
    def N(self) -> np.ndarray:
        return np.array([c[0] for c in self.checkpoints], dtype=np.int64)

    @property
    def raw(self) -> np.ndarray:
        return np.array([c[1] for c in self.checkpoints], dtype=complex)

    @property
    def normalized(self) -> np.ndarray:
        return np.array([c[2] for c in self.checkpoints])

    def to_csv_rows(self) -> list[tuple]:
        return [(N, r.real, r.imag, z) for N, r, z in self.checkpoints]


def term_phase(data: QuadraticData, n: Sequence[int]) -> Fraction:
    """Exact ``Q[n] + l.n mod 1`` of one term."""
    n = [int(v) for v in n]
    g = data.g
    s = Fraction(0)
    for i in range(g):
        s += Fraction(float(data.l[i])) * n[i]
        for j in range(g):
            s += Fraction(float(data.Q[i, j])) * n[i] * n[j]
    return s % 1


def _e(frac: Fraction) -> complex:
    a = TWO_PI * float(frac)
    return complex(math.cos(a), math.sin(a))


def _line_segments(q: Fraction, b: Fraction, c: Fraction, M: int, bounds: Sequence[int]) -> list[complex]:
    """Sums of ``e(c + b j + q j^2)`` over ``j`` in consecutive segments.

    ``bounds`` is increasing; segment ``i`` covers ``bounds[i-1] < j <= bounds[i]``
    (the first covers ``0 <= j <= bounds[0]``).  ``M = bounds[-1]``.
    """
    seg_re: list[list[float]] = [[] for _ in bounds]
    seg_im: list[list[float]] = [[] for _ in bounds]
    edges = np.asarray(bounds, dtype=np.int64)
    twoq = float((2 * q) % 1)
    for n0 in range(0, M + 1, ANCHOR_BLOCK):
        L = min(ANCHOR_BLOCK, M + 1 - n0)
        # fresh anchor: constant and linear coefficient at n0, reduced exactly
        c0 = (c + b * n0 + q * n0 * n0) % 1
        b0 = (b + 2 * q * n0 + q) % 1  # ratio term_{1}/term_{0}
        j = np.arange(L - 1, dtype=float)
        steps = np.exp(1j * TWO_PI * (float(b0) + np.mod(twoq * j, 1.0)))
        terms = np.empty(L, dtype=complex)
        terms[0] = _e(c0)
        if L > 1:
            terms[1:] = terms[0] * np.cumprod(steps)
        # split the block at segment edges
        idx = n0 + np.arange(L)
        seg = np.searchsorted(edges, idx, side="left")
        cuts = np.flatnonzero(np.diff(seg)) + 1
        for part, sid in zip(np.split(terms, cuts), seg[np.r_[0, cuts]]):
            seg_re[sid].append(math.fsum(part.real))
            seg_im[sid].append(math.fsum(part.imag))
    return [complex(math.fsum(r), math.fsum(i)) for r, i in zip(seg_re, seg_im)]


def _cube_sums(Qf: list, lf: list, c: Fraction, bounds: Sequence[int], threads: int) -> list[complex]:
    """Cube sums ``sum_{n in [0,N]^k} e(c + Q[n] + l.n)`` for each ``N`` in ``bounds``."""
    k = len(lf)
    M = bounds[-1]
    if k == 1:
        segs = _line_segments(Qf[0][0], lf[0], c, M, bounds)
        out, acc = [], []
        for s in segs:
            acc.append(s)
            out.append(complex(math.fsum(z.real for z in acc), math.fsum(z.imag for z in acc)))
        return out

    Qin = [row[1:] for row in Qf[1:]]

    def row(n1: int) -> list[complex]:
        li = [(lf[i] + 2 * Qf[0][i] * n1) % 1 for i in range(1, k)]
        ci = (c + lf[0] * n1 + Qf[0][0] * n1 * n1) % 1
        # only the cubes that contain this row
        sub = [N for N in bounds if N >= n1]
        vals = _cube_sums(Qin, li, ci, sub, 1)
        return [complex(0)] * (len(bounds) - len(sub)) + vals

    if threads > 1 and M > 0:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(row, range(M + 1)))
    else:
        rows = [row(n1) for n1 in range(M + 1)]
    # fixed-order compensated reduction, independent of the thread count
    return [
        complex(math.fsum(rows[n1][i].real for n1 in range(M + 1)), math.fsum(rows[n1][i].imag for n1 in range(M + 1)))
        for i in range(len(bounds))
    ]


def dyadic_checkpoints(n_max: int, n_checkpoints: int) -> list[int]:
    """``floor(n_max 2^{-j})`` for ``j < n_checkpoints``, positive and increasing."""
    pts = {n_max >> j for j in range(n_checkpoints)}
    return sorted(p for p in pts if p > 0)


def theta_sum(
    data: QuadraticData,
    n_max: int | None = None,
    n_checkpoints: int = 12,
    checkpoints: Sequence[int] | None = None,
    budget: int = DEFAULT_BUDGET,
    threads: int | None = None,
) -> SumResult:
    """Partial theta sums at a list of cube sizes.

    Parameters
    ----------
    data : QuadraticData
        ``data.t`` is ignored here (it only enters pretheta sums).
    n_max, n_checkpoints
        Default checkpoints ``floor(n_max 2^{-j})``.
    checkpoints : sequence of int, optional
        Explicit cube sizes; overrides the dyadic grid.
    budget : int
        Largest admissible number of terms ``(N+1)^g``.  Checkpoints beyond it
        are dropped and the result is flagged incomplete.
    """
    if checkpoints is None:
        if n_max is None:
            raise DomainError("give n_max or explicit checkpoints")
        checkpoints = dyadic_checkpoints(int(n_max), n_checkpoints)
    pts = sorted({int(N) for N in checkpoints})
    if not pts or pts[0] < 0:
        raise DomainError("checkpoints must be non-negative")
    g = data.g
    keep = [N for N in pts if (N + 1) ** g <= budget]
    complete = len(keep) == len(pts)
    if not keep:
        return SumResult(g, (), False)
    Qf = [[Fraction(float(v)) for v in row] for row in data.Q]
    lf = [Fraction(float(v)) % 1 for v in data.l]
    raws = _cube_sums(Qf, lf, Fraction(0), keep, thread_cap(threads))
    rows = tuple((N, r, abs(r) / N ** (g / 2) if N > 0 else abs(r)) for N, r in zip(keep, raws))
    return SumResult(g, rows, complete)


def naive_theta(data: QuadraticData, N: int) -> complex:
    """Per-term evaluation: exact phase mod 1, then one trig call per term.

    Independent of the recurrence; meant for cross-checks with ``(N+1)^g`` up
    to about 10^6.
    """
    g = data.g
    if (N + 1) ** g > 10**7:
        raise DomainError("naive evaluation is limited to 10^7 terms")
    Qf = [[Fraction(float(v)) for v in row] for row in data.Q]
    lf = [Fraction(float(v)) for v in data.l]
    re, im = [], []
    for n in np.ndindex(*([N + 1] * g)):
        ph = sum(lf[i] * n[i] for i in range(g)) + sum(Qf[i][j] * n[i] * n[j] for i in range(g) for j in range(g))
        a = TWO_PI * float(ph % 1)
        re.append(math.cos(a))
        im.append(math.sin(a))
    return complex(math.fsum(re), math.fsum(im))


# --- pretheta sums -----------------------------------------------------------

def _check_phi(phi) -> list[tuple[int, complex]]:
    modes = [(int(k), complex(c)) for k, c in phi]
    if any(k == 0 and c != 0 for k, c in modes):
        raise DomainError("phi must have zero mean")
    return [(k, c) for k, c in modes if c != 0]


def pretheta_sum(phi, data: QuadraticData, N: int, threads: int | None = None) -> complex:
    """``sum_{n in [0,N]^g} phi(t + l.n + Q[n]/2)`` with ``phi(tau) = sum_k c_k e(2 k tau)``.

    Mode ``k`` contributes ``c_k e(2kt) theta_sum(kQ, 2kl)``.
    """
    total = []
    for k, c in _check_phi(phi):
        raw = theta_sum(data.scaled(k), checkpoints=[N], threads=threads).raw[0]
        total.append(c * _e(Fraction(2 * k) * Fraction(data.t) % 1) * raw)
    return complex(math.fsum(z.real for z in total), math.fsum(z.imag for z in total))


def pretheta_direct(phi, data: QuadraticData, N: int) -> complex:
    """Term-by-term ``sum phi(t + l.n + Q[n]/2)`` with exact phases mod 1.

    Independent of the mode decomposition; cost ``(N+1)^g`` per mode.
    """
    g = data.g
    if (N + 1) ** g > 10**7:
        raise DomainError("direct evaluation is limited to 10^7 terms")
    modes = _check_phi(phi)
    Qf = [[Fraction(float(v)) for v in row] for row in data.Q]
    lf = [Fraction(float(v)) for v in data.l]
    t = Fraction(data.t)
    re, im = [], []
    for n in np.ndindex(*([N + 1] * g)):
        tau = t + sum(lf[i] * n[i] for i in range(g)) + sum(Qf[i][j] * n[i] * n[j] for i in range(g) for j in range(g)) / 2
        for k, c in modes:
            z = c * _e(2 * k * tau % 1)
            re.append(z.real)
            im.append(z.imag)
    return complex(math.fsum(re), math.fsum(im))


# --- growth fits -------------------------------------------------------------

RUNNING_MAX = "running-max"
DIRECT = "direct"


@dataclass(frozen=True)
class GrowthFit:
    slope: float
    intercept: float
    residual: float
    window: tuple
    statistic: str

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual, "window": list(self.window), "statistic": self.statistic}


def growth_fit(result: SumResult, statistic: str = RUNNING_MAX, window: tuple | None = None, min_points: int = 8, min_decades: float = 2.0) -> GrowthFit:
    """Least-squares slope of ``log S(N)`` against ``log N`` with ``S`` built from ``|raw|``.

    Raises
    ------
    FitError
        Fewer than ``min_points`` checkpoints in the window, a span below
        ``min_decades`` decades, or a vanishing statistic.
    """
    if statistic not in (RUNNING_MAX, DIRECT):
        raise DomainError(f"unknown statistic {statistic!r}")
    N = result.N.astype(float)
    a = np.abs(result.raw)
    if statistic == RUNNING_MAX:
        a = np.maximum.accumulate(a) if a.size else a
    lo, hi = window if window is not None else (N.min(initial=0), N.max(initial=0))
    sel = (N >= lo) & (N <= hi) & (N > 0)
    if sel.sum() < min_points:
        raise FitError(f"need >= {min_points} checkpoints in the window, have {int(sel.sum())}")
    Ns, As = N[sel], a[sel]
    if math.log10(Ns.max() / Ns.min()) < min_decades - 1e-12:
        raise FitError(f"window spans fewer than {min_decades} decades")
    if np.any(As <= 0):
        raise FitError("statistic vanishes at some checkpoint")
    x, y = np.log(Ns), np.log(As)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ np.array([slope, icpt]) - y) ** 2)))
    return GrowthFit(float(slope), float(icpt), res, (int(Ns.min()), int(Ns.max())), statistic)


# --- predicted exponents -----------------------------------------------------

@dataclass(frozen=True)
class PredictedExponent:
    """Target growth of the normalized sum: ``N^power (log N)^log_power``.

    ``plus`` marks targets that hold only with an arbitrarily small excess.
    """

    power: float
    log_power: float | None
    plus: bool = False

    def to_json(self) -> dict:
        return {"power": self.power, "log_power": self.log_power, "plus": self.plus}


def predicted_exponent(report: DiophantineReport | str, g: int, d: int | None = None) -> PredictedExponent:
    """Normalized-sum growth target for a Diophantine class.

    ``report`` may also be the string ``"LogLaw"`` for almost every datum.

    Raises
    ------
    NoPredictionError
        For ``Unclassified`` reports.
    """
    cls = report if isinstance(report, str) else report.cls
    if cls == "BoundedType":
        return PredictedExponent(0.0, None)
    if cls == "Roth":
        return PredictedExponent(0.0, None, plus=True)
    if cls == "LogLaw":
        return PredictedExponent(0.0, g + 1.0 / (2 * g + 2), plus=True)
    if cls == "DiophantineType":
        sigma = report.sigma
        return PredictedExponent(0.5 * g * (1.0 - sigma), None, plus=True)
    if cls == "Resonant":
        # a rational datum has a linearly growing sublattice sum
        return PredictedExponent(0.5 * g, None)
    raise NoPredictionError(f"no prediction for class {cls!r}")
