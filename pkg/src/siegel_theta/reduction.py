"""Modular height, Siegel reduction and Cartan height flows.

The height of ``alpha`` is ``det Im`` of the reduced representative of
``alpha^{-1}(i I)``.  Deep flows push that point exponentially close to the
real boundary, so reduction runs in multiprecision (a private mpmath context
per call) and matrices carrying an exact form are evaluated at the working
precision instead of through doubles.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import DomainError, NonTerminationError, WindowError
from .symplectic import (
    BlockSymplectic,
    CartanDirection,
    IntegerSymplectic,
    SiegelPoint,
)

BASE_DPS = 30


@dataclass(frozen=True)
class ReductionOptions:
    """Knobs for :func:`reduce_siegel`.

    ``generator_depth`` > 0 additionally runs the brute-force word search to
    that depth and fails certification if it finds a higher point.
    """

    tol: float = 1e-12
    max_iter: int = 10_000
    generator_depth: int = 0
    certify_t: float = 2.0
    dps: int = BASE_DPS


@dataclass(frozen=True, eq=False)
class ReducedPoint:
    z: SiegelPoint
    gamma: IntegerSymplectic
    certified: bool
    log_height: float
    iterations: int = 0

    @property
    def height(self) -> float:
        return math.exp(self.log_height)


# --- multiprecision plumbing -------------------------------------------------

def _new_ctx(dps: int) -> mpmath.MPContext:
    ctx = mpmath.MPContext()
    ctx.dps = int(dps)
    return ctx


def _mp_entries(ctx, alpha: BlockSymplectic) -> list[list]:
    """Entries of alpha at the context precision, exact form preferred."""
    if alpha.exact is not None:
        ex = alpha.exact
        return [[ctx.mpf(str(ex[i, j].evalf(ctx.dps + 10))) for j in range(ex.shape[1])] for i in range(ex.shape[0])]
    M = alpha.matrix
    return [[ctx.mpf(float(v)) for v in row] for row in M]


def _mp_point(ctx, Z: SiegelPoint):
    g = Z.g
    return ctx.matrix([[ctx.mpc(float(Z.X[i, j]), float(Z.Y[i, j])) for j in range(g)] for i in range(g)])


def _mp_mobius(ctx, M, Z):
    g = Z.rows
    A = ctx.matrix([[M[i][j] for j in range(g)] for i in range(g)])
    B = ctx.matrix([[M[i][j + g] for j in range(g)] for i in range(g)])
    C = ctx.matrix([[M[i + g][j] for j in range(g)] for i in range(g)])
    D = ctx.matrix([[M[i + g][j + g] for j in range(g)] for i in range(g)])
    num = A * Z + B
    den = C * Z + D
    W = num * ctx.inverse(den) if g > 1 else ctx.matrix([[num[0, 0] / den[0, 0]]])
    if g > 1:
        W = (W + W.T) * ctx.mpf(0.5)
    return W


def _mp_imag_det(ctx, Z):
    g = Z.rows
    Y = ctx.matrix([[Z[i, j].imag for j in range(g)] for i in range(g)])
    return ctx.det(Y)


def _int_matmul(P, Q):
    n, m, k = len(P), len(Q[0]), len(Q)
    return [[sum(P[i][l] * Q[l][j] for l in range(k)) for j in range(m)] for i in range(n)]


def _int_eye(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _int_inverse(U):
    """Inverse of a unimodular integer matrix, exactly."""
    n = len(U)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(U)]
    for c in range(n):
        p = next(r for r in range(c, n) if aug[r][c] != 0)
        aug[c], aug[p] = aug[p], aug[c]
        piv = aug[c][c]
        aug[c] = [v / piv for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[c])]
    inv = [[aug[i][n + j] for j in range(n)] for i in range(n)]
    if any(v.denominator != 1 for row in inv for v in row):
        raise DomainError("matrix is not unimodular")
    return [[int(v) for v in row] for row in inv]


def _block(A, B, C, D):
    return [ra + rb for ra, rb in zip(A, B)] + [rc + rd for rc, rd in zip(C, D)]


def _ldl(ctx, G):
    """G = L diag(Dd) L^T with L unit lower-triangular (mu coefficients)."""
    n = G.rows
    L = [[ctx.mpf(int(i == j)) for j in range(n)] for i in range(n)]
    Dd = [ctx.mpf(0)] * n
    for i in range(n):
        Dd[i] = G[i, i] - ctx.fsum(L[i][k] ** 2 * Dd[k] for k in range(i))
        for j in range(i + 1, n):
            L[j][i] = (G[j, i] - ctx.fsum(L[j][k] * L[i][k] * Dd[k] for k in range(i))) / Dd[i]
    return L, Dd


def lll_gram(ctx, G, delta: float = 0.75):
    """LLL on a positive definite Gram matrix.

    Returns an integer unimodular ``U`` (list of lists) such that ``U^T G U``
    is LLL reduced, i.e. size-reduced with the Lovász condition.
    """
    n = G.rows
    G = G.copy()
    U = _int_eye(n)
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 100_000:
            raise NonTerminationError("LLL did not terminate")
        for j in range(k - 1, -1, -1):
            L, _ = _ldl(ctx, G)
            r = int(ctx.floor(L[k][j] + ctx.mpf(0.5)))
            if r:
                # column k -= r * column j
                for row in U:
                    row[k] -= r * row[j]
                E = ctx.eye(n)
                E[j, k] = -r
                G = E.T * G * E
        L, Dd = _ldl(ctx, G)
        if Dd[k] < (delta - L[k][k - 1] ** 2) * Dd[k - 1]:
            for row in U:
                row[k], row[k - 1] = row[k - 1], row[k]
            P = ctx.eye(n)
            P[k, k], P[k - 1, k - 1], P[k, k - 1], P[k - 1, k] = 0, 0, 1, 1
            G = P.T * G * P
            k = max(k - 1, 1)
        else:
            k += 1
    return U


def _to_float_point(Z) -> SiegelPoint:
    g = Z.rows
    X = np.array([[float(Z[i, j].real) for j in range(g)] for i in range(g)])
    Y = np.array([[float(Z[i, j].imag) for j in range(g)] for i in range(g)])
    return SiegelPoint(X, Y)


# --- g = 1 -------------------------------------------------------------------

def _gauss_reduce(ctx, z, tol: float, max_iter: int):
    """Scalar Gauss reduction; returns (z, gamma as 2x2 int list, iterations)."""
    a, b, c, d = 1, 0, 0, 1
    half = ctx.mpf(0.5)
    thresh = ctx.mpf(1) / (1 + ctx.mpf(tol))
    for it in range(max_iter):
        n = int(ctx.floor(z.real + half))
        if n:
            z = z - n
            a, b = a - n * c, b - n * d
        if abs(z) ** 2 < thresh:
            z = -1 / z
            a, b, c, d = -c, -d, a, b
        else:
            return z, [[a, b], [c, d]], it
    raise NonTerminationError("Gauss reduction exceeded max_iter", best=z)


def _apply_int_g1(z, M):
    (a, b), (c, d) = M
    return (a * z + b) / (c * z + d)


def reduce_g1(Z: SiegelPoint, tol: float = 1e-12, dps: int = BASE_DPS, max_iter: int = 100_000) -> ReducedPoint:
    """Classical reduction to ``{|Re z| <= 1/2, |z| >= 1}``."""
    if Z.g != 1:
        raise DomainError("reduce_g1 needs g = 1")
    ctx = _new_ctx(dps)
    z0 = ctx.mpc(float(Z.X[0, 0]), float(Z.Y[0, 0]))
    z, gam, it = _gauss_reduce(ctx, z0, tol, max_iter)
    return ReducedPoint(
        z=SiegelPoint([[float(z.real)]], [[float(z.imag)]]),
        gamma=IntegerSymplectic(np.array(gam, dtype=object)),
        certified=True,
        log_height=float(ctx.log(z.imag)),
        iterations=it,
    )


# --- general g -----------------------------------------------------------------

def _partial_inversion(g: int, S: Sequence[int]):
    s = [1 if i in S else 0 for i in range(g)]
    A = [[(1 - s[i]) * int(i == j) for j in range(g)] for i in range(g)]
    B = [[-s[i] * int(i == j) for j in range(g)] for i in range(g)]
    C = [[s[i] * int(i == j) for j in range(g)] for i in range(g)]
    return _block(A, B, C, A)


def _check_S(ctx, Z, t: float) -> bool:
    """Membership in the fundamental open set with parameter t."""
    g = Z.rows
    X = ctx.matrix([[Z[i, j].real for j in range(g)] for i in range(g)])
    Y = ctx.matrix([[Z[i, j].imag for j in range(g)] for i in range(g)])
    if any(abs(X[i, j]) >= t for i in range(g) for j in range(g)):
        return False
    L, Dd = _ldl(ctx, Y)
    if any(abs(L[j][i]) >= t for i in range(g) for j in range(i + 1, g)):
        return False
    if not 1 < t * Dd[0]:
        return False
    return all(Dd[k] < t * Dd[k + 1] for k in range(g - 1))


def _reduce_mp(ctx, Z, opts: ReductionOptions):
    """Greedy ascent on an mp complex matrix; returns (Z, gamma, iterations)."""
    g = Z.rows
    gamma = _int_eye(2 * g)
    best = Z
    half = ctx.mpf(0.5)
    one_tol = 1 + ctx.mpf(opts.tol)
    subsets = [S for r in range(1, g + 1) for S in itertools.combinations(range(g), r)]
    for it in range(opts.max_iter):
        # unimodular move from LLL of Y
        if g > 1:
            Y = ctx.matrix([[Z[i, j].imag for j in range(g)] for i in range(g)])
            U = lll_gram(ctx, Y)
            if U != _int_eye(g):
                Um = ctx.matrix(U)
                Z = Um.T * Z * Um
                Ut = [list(r) for r in zip(*U)]
                step = _block(Ut, [[0] * g for _ in range(g)], [[0] * g for _ in range(g)], _int_inverse(U))
                gamma = _int_matmul(step, gamma)
        # integer translation of X
        T = [[int(ctx.floor(Z[i, j].real + half)) for j in range(g)] for i in range(g)]
        if any(any(r) for r in T):
            Z = Z - ctx.matrix(T)
            negT = [[-v for v in r] for r in T]
            step = _block(_int_eye(g), negT, [[0] * g for _ in range(g)], _int_eye(g))
            gamma = _int_matmul(step, gamma)
        best = Z
        # partial inversions: det Im(J_S Z) = det Im Z / |det Z_SS|^2
        gain, S_best = ctx.mpf(1), None
        for S in subsets:
            minor = ctx.matrix([[Z[i, j] for j in S] for i in S])
            val = 1 / abs(ctx.det(minor)) ** 2
            if val > gain:
                gain, S_best = val, S
        if S_best is None or gain <= one_tol:
            return Z, gamma, it
        J = _partial_inversion(g, S_best)
        Z = _mp_mobius(ctx, [[ctx.mpf(v) for v in r] for r in J], Z)
        gamma = _int_matmul(J, gamma)
    raise NonTerminationError("Siegel reduction exceeded max_iter", best=_to_float_point(best))


def _finish(ctx, Z, gamma, it, opts: ReductionOptions, certified_extra: bool = True) -> ReducedPoint:
    g = Z.rows
    if g == 1:
        zz = Z[0, 0]
        cert = bool(abs(zz.real) <= 0.5 + 1e-12 and abs(zz) >= 1 - 1e-12)
    else:
        cert = _check_S(ctx, Z, opts.certify_t)
    det = _mp_imag_det(ctx, Z)
    return ReducedPoint(
        z=_to_float_point(Z),
        gamma=IntegerSymplectic(np.array(gamma, dtype=object)),
        certified=bool(cert and certified_extra),
        log_height=float(ctx.log(det)),
        iterations=it,
    )


def reduce_siegel(Z: SiegelPoint, opts: ReductionOptions | None = None) -> ReducedPoint:
    """Reduce ``Z`` by greedy ascent of ``det Im``.

    Each round applies the LLL move on Y, subtracts the rounded X, then the
    best partial inversion ``J_S`` if it raises ``det Im`` by more than
    ``1 + tol``.  The result is certified when it satisfies the (S1)-(S3)
    conditions with ``t = opts.certify_t``.

    Raises
    ------
    NonTerminationError
        After ``max_iter`` rounds; ``.best`` holds the best point seen.
    """
    opts = opts or ReductionOptions()
    ctx = _new_ctx(opts.dps)
    Zm = _mp_point(ctx, Z)
    Zr, gamma, it = _reduce_mp(ctx, Zm, opts)
    extra = True
    if opts.generator_depth > 0:
        bf = brute_force_height(_to_float_point(Zr), opts.generator_depth)
        extra = bf <= float(_mp_imag_det(ctx, Zr)) * (1 + 1e-9)
    return _finish(ctx, Zr, gamma, it, opts, extra)


def _dps_for(alpha: BlockSymplectic, extra_digits: float = 0.0) -> int:
    mag = max(1.0, float(np.abs(alpha.matrix).max()))
    return BASE_DPS + int(math.ceil(4 * math.log10(mag) + extra_digits))


def _reduce_point_of(ctx, M, g: int, diag_y, opts: ReductionOptions, warm=None):
    """Reduce ``M(diag(i * diag_y))`` starting from an optional warm gamma."""
    if g == 1:
        z = ctx.mpc(0, diag_y[0])
        (a, b), (c, d) = (M[0][0], M[0][1]), (M[1][0], M[1][1])
        z = (a * z + b) / (c * z + d)
        if warm is not None:
            z = _apply_int_g1(z, warm)
        z, gam, it = _gauss_reduce(ctx, z, opts.tol, opts.max_iter)
        if warm is not None:
            gam = _int_matmul(gam, warm)
        Z = ctx.matrix([[z]])
        return Z, gam, it
    Z0 = ctx.matrix(g, g)
    for i in range(g):
        Z0[i, i] = ctx.mpc(0, diag_y[i])
    Z = _mp_mobius(ctx, M, Z0)
    if warm is not None:
        Z = _mp_mobius(ctx, [[ctx.mpf(v) for v in r] for r in warm], Z)
    Z, gam, it = _reduce_mp(ctx, Z, opts)
    if warm is not None:
        gam = _int_matmul(gam, warm)
    return Z, gam, it


def hgt(alpha: BlockSymplectic, opts: ReductionOptions | None = None) -> tuple[float, bool]:
    """Modular height of ``alpha``: reduced ``det Im`` of ``alpha^{-1}(i I)``."""
    r = hgt_reduced(alpha, opts)
    return r.height, r.certified


def hgt_reduced(alpha: BlockSymplectic, opts: ReductionOptions | None = None) -> ReducedPoint:
    opts = opts or ReductionOptions()
    ctx = _new_ctx(max(opts.dps, _dps_for(alpha)))
    M = _mp_entries(ctx, alpha.inverse())
    Z, gam, it = _reduce_point_of(ctx, M, alpha.g, [ctx.mpf(1)] * alpha.g, opts)
    return _finish(ctx, Z, gam, it, opts)


# --- flows -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HeightTrajectory:
    alpha: BlockSymplectic
    dhat: CartanDirection
    samples: tuple
    certified: tuple = ()

    def __post_init__(self):
        samples = tuple((float(t), float(v)) for t, v in self.samples)
        ts = [t for t, _ in samples]
        if any(b <= a for a, b in zip(ts[:-1], ts[1:])):
            raise DomainError("trajectory times must be strictly increasing")
        object.__setattr__(self, "samples", samples)

    @property
    def t(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def log_hgt(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    def trivial_bound_excess(self, log_hgt0: float | None = None) -> float:
        """Largest ``logHgt(t) - 2 t sum(delta) - logHgt(0)`` over samples with t >= 0."""
        if log_hgt0 is None:
            log_hgt0 = math.log(hgt(self.alpha)[0])
        t, v = self.t, self.log_hgt
        m = t >= 0
        if not m.any():
            return -math.inf
        return float(np.max(v[m] - 2 * t[m] * self.dhat.weight - log_hgt0))

    def subsample(self, step: int) -> "HeightTrajectory":
        return HeightTrajectory(self.alpha, self.dhat, self.samples[::step], self.certified[::step])

    def to_csv_rows(self) -> list[tuple[float, float]]:
        return list(self.samples)


def height_flow(
    alpha: BlockSymplectic,
    dhat: CartanDirection,
    t_grid: Sequence[float],
    opts: ReductionOptions | None = None,
) -> HeightTrajectory:
    """``log Hgt(e^{-t dhat} alpha)`` on ``t_grid``.

    The flowed point is ``alpha^{-1}(i e^{2 t delta})``; precision grows with
    ``t`` so the reduced point is accurate at the end of the grid.  Each
    sample starts from the previous sample's reducing element.
    """
    opts = opts or ReductionOptions()
    ts = [float(t) for t in t_grid]
    if not ts:
        raise DomainError("empty time grid")
    if any(b <= a for a, b in zip(ts[:-1], ts[1:])):
        raise DomainError("time grid must be increasing")
    if alpha.g != dhat.g:
        raise DomainError("genus mismatch between alpha and dhat")
    w = dhat.weight
    tmax = max(abs(ts[0]), abs(ts[-1]))
    dps = max(opts.dps, _dps_for(alpha, 4 * tmax * w / math.log(10)))
    ctx = _new_ctx(dps)
    M = _mp_entries(ctx, alpha.inverse())
    deltas = [ctx.mpf(v) for v in dhat.delta]
    warm = None
    out, cert = [], []
    for t in ts:
        ys = [ctx.exp(2 * ctx.mpf(t) * dl) for dl in deltas]
        Z, gam, it = _reduce_point_of(ctx, M, alpha.g, ys, opts, warm)
        warm = gam
        r = _finish(ctx, Z, gam, it, opts)
        out.append((t, r.log_height))
        cert.append(r.certified)
    return HeightTrajectory(alpha, dhat, tuple(out), tuple(cert))


# --- classification ----------------------------------------------------------

@dataclass(frozen=True)
class ClassifierOptions:
    bounded_margin: float = math.log(50.0)
    eps_roth: float = 0.1
    window_fraction: float = 0.5
    residual_bound: float = 1.0
    rational_cutoff: int = 10**6
    min_span: float = 10.0
    min_samples: int = 100


@dataclass(frozen=True)
class DiophantineReport:
    cls: str
    sigma: float | None
    sup_log_hgt: float
    fitted_slope: float
    fit_window: tuple
    residual: float

    def __post_init__(self):
        if self.cls not in ("BoundedType", "Roth", "DiophantineType", "Resonant", "Unclassified"):
            raise DomainError(f"unknown class {self.cls!r}")
        if self.cls == "DiophantineType" and not (self.sigma is not None and 0 < self.sigma < 1):
            raise DomainError("DiophantineType needs sigma in (0, 1)")

    def to_json(self) -> dict:
        return {
            "class": self.cls,
            "sigma": self.sigma,
            "slope": self.fitted_slope,
            "window": list(self.fit_window),
            "residual": self.residual,
            "sup_log_hgt": self.sup_log_hgt,
        }


def rational_datum(alpha: BlockSymplectic, cutoff: int) -> Fraction | None:
    """For g = 1 lower-triangular alpha, the exact rational q if it has a small denominator."""
    if alpha.g != 1 or alpha.A[0, 0] != 1 or alpha.B[0, 0] != 0 or alpha.D[0, 0] != 1:
        return None
    if alpha.exact is not None:
        q = alpha.exact[1, 0]
        if not q.is_Rational:
            return None
        q = Fraction(int(q.p), int(q.q))
    else:
        q = Fraction(float(alpha.C[0, 0]))
    return q if q.denominator <= cutoff else None


def classify_diophantine(
    traj: HeightTrajectory, d: int, opts: ClassifierOptions | None = None
) -> DiophantineReport:
    """Finite-horizon surrogate for the Diophantine class of a trajectory.

    Raises
    ------
    WindowError
        If the trajectory is shorter than ``opts.min_span`` or has too few samples.
    """
    opts = opts or ClassifierOptions()
    t, v = traj.t, traj.log_hgt
    if len(t) < opts.min_samples or t[-1] < opts.min_span:
        raise WindowError(
            f"need t_max >= {opts.min_span} and >= {opts.min_samples} samples, got t_max={t[-1] if len(t) else None}, n={len(t)}"
        )
    t0 = v[0] if t[0] == 0 else math.log(hgt(traj.alpha)[0])
    sup = float(v.max())
    tmax = float(t[-1])
    window = (opts.window_fraction * tmax, tmax)
    run = np.maximum.accumulate(v)
    m = (t >= window[0]) & (t <= window[1])
    if m.sum() >= 2:
        coef = np.polyfit(t[m], run[m], 1)
        slope = float(coef[0])
        resid = float(np.sqrt(np.mean((np.polyval(coef, t[m]) - run[m]) ** 2)))
    else:
        slope, resid = 0.0, 0.0
    full = 2.0 * d

    def report(cls, sigma=None):
        return DiophantineReport(cls, sigma, sup, slope, window, resid)

    if rational_datum(traj.alpha, opts.rational_cutoff) is not None:
        return report("Resonant")
    if sup <= t0 + opts.bounded_margin:
        return report("BoundedType")
    if resid > opts.residual_bound:
        return report("Unclassified")
    if slope < opts.eps_roth:
        return report("Roth")
    if slope >= full - opts.eps_roth:
        return report("Resonant")
    return report("DiophantineType", 1.0 - slope / full)


# --- logarithm law -----------------------------------------------------------

@dataclass(frozen=True)
class LogLawSummary:
    statistics: tuple
    median: float
    q25: float
    q75: float
    t_max: float
    seed: int

    @property
    def iqr(self) -> float:
        return self.q75 - self.q25

    def to_json(self) -> dict:
        return {
            "median": self.median,
            "q25": self.q25,
            "q75": self.q75,
            "iqr": self.iqr,
            "t_max": self.t_max,
            "seed": self.seed,
            "statistics": list(self.statistics),
        }


def thread_cap(requested: int | None = None) -> int:
    env = os.environ.get("SIEGEL_THETA_THREADS")
    n = requested or os.cpu_count() or 1
    if env:
        n = min(n, max(1, int(env)))
    return max(1, n)


def _random_Q(g: int, rng: np.random.Generator) -> np.ndarray:
    U = rng.random((g, g))
    return np.triu(U) + np.triu(U, 1).T


def loglaw_statistic(alpha: BlockSymplectic, dhat: CartanDirection, t_grid: np.ndarray) -> float:
    traj = height_flow(alpha, dhat, t_grid)
    return float(np.max(traj.log_hgt / np.log(traj.t)))


def loglaw_grid(t_max: float, step: float = 0.05, window_fraction: float = 0.5) -> np.ndarray:
    """Grid on ``[max(e, window_fraction * t_max), t_max]``, endpoints included.

    Starting at ``e`` or later keeps ``log t >= 1``, so the statistic of the
    identity, ``2t / log t``, is maximal at ``t_max``.  The tail window matches
    the classifier's fit window: the statistic targets a limsup, and early
    times where ``log t`` is small only add finite-horizon bias.
    """
    t0 = max(math.e, window_fraction * t_max)
    if t_max <= t0:
        raise DomainError(f"t_max must exceed {t0}")
    n = max(2, int(math.ceil((t_max - t0) / step)) + 1)
    return np.linspace(t0, t_max, n)


def loglaw_mc(
    g: int,
    dhat: CartanDirection,
    n_samples: int,
    t_max: float,
    seed: int,
    threads: int | None = None,
    step: float = 0.05,
    window_fraction: float = 0.5,
    alphas: Sequence[BlockSymplectic] | None = None,
) -> LogLawSummary:
    """Monte-Carlo of ``max_t logHgt(t) / log t`` over random lower-triangular alpha.

    The maximum runs over the grid of :func:`loglaw_grid`.

    Sample ``j`` draws its symmetric ``Q`` from the ``j``-th child of
    ``SeedSequence(seed)``, so the output does not depend on ``threads``.
    ``alphas`` overrides the random draw (used for degenerate checks).
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    grid = loglaw_grid(t_max, step, window_fraction)
    if alphas is None:
        children = np.random.SeedSequence(seed).spawn(n_samples)
        alphas = [BlockSymplectic.lower_triangular(_random_Q(g, np.random.default_rng(c))) for c in children]
    else:
        alphas = list(alphas)[:n_samples]

    def one(a):
        return loglaw_statistic(a, dhat, grid)

    n_thr = thread_cap(threads)
    if n_thr == 1:
        stats = [one(a) for a in alphas]
    else:
        with ThreadPoolExecutor(max_workers=n_thr) as ex:
            stats = list(ex.map(one, alphas))
    arr = np.array(stats)
    q25, med, q75 = np.quantile(arr, [0.25, 0.5, 0.75])
    return LogLawSummary(tuple(float(s) for s in stats), float(med), float(q25), float(q75), float(t_max), int(seed))


# --- daleth ------------------------------------------------------------------

@dataclass(frozen=True)
class DalethValue:
    value: float


def daleth(delta) -> DalethValue:
    """``prod(delta_i + 1/delta_i)``."""
    dl = np.atleast_1d(np.asarray(delta, dtype=float))
    if np.any(dl <= 0) or not np.all(np.isfinite(dl)):
        raise DomainError("daleth needs positive entries")
    return DalethValue(float(np.prod(dl + 1.0 / dl)))


# --- brute-force oracles -----------------------------------------------------

def brute_force_g1(z: np.ndarray, max_len: int = 12) -> np.ndarray:
    """Max of Im over all words of length <= max_len in S, T, T^{-1}.

    Words containing ``SS``, ``T T^{-1}`` or ``T^{-1} T`` are skipped since
    they shorten.  ``z`` is a complex array; the search is vectorized.
    """
    z = np.asarray(z, dtype=complex)
    best = z.imag.copy()
    # frontier: points (words, ...) and last letter code: 0 none, 1 S, 2 T, 3 Tinv
    pts = z[None, :]
    last = np.zeros(1, dtype=np.int8)
    for _ in range(max_len):
        new_pts, new_last = [], []
        for code in (1, 2, 3):
            if code == 1:
                keep = last != 1
                p = -1.0 / pts[keep]
            elif code == 2:
                keep = last != 3
                p = pts[keep] + 1.0
            else:
                keep = last != 2
                p = pts[keep] - 1.0
            new_pts.append(p)
            new_last.append(np.full(p.shape[0], code, dtype=np.int8))
        pts = np.concatenate(new_pts)
        last = np.concatenate(new_last)
        best = np.maximum(best, pts.imag.max(axis=0))
    return best


def _generators_g2() -> list[np.ndarray]:
    g = 2
    I = np.eye(g, dtype=int)
    O = np.zeros((g, g), dtype=int)
    gens = []
    for T in ([[1, 0], [0, 0]], [[0, 0], [0, 1]], [[0, 1], [1, 0]]):
        T = np.array(T)
        gens.append(np.block([[I, T], [O, I]]))
        gens.append(np.block([[I, -T], [O, I]]))
    for S in ((0,), (1,), (0, 1)):
        gens.append(np.array(_partial_inversion(g, S), dtype=int))
    for U in ([[0, 1], [1, 0]], [[1, 1], [0, 1]], [[1, -1], [0, 1]]):
        U = np.array(U)
        Ui = np.round(np.linalg.inv(U)).astype(int)
        gens.append(np.block([[U.T, O], [O, Ui]]))
    return gens


def brute_force_height(Z: SiegelPoint, depth: int, chunk: int = 200_000) -> float:
    """Max det Im over all words of length <= depth in a fixed generator set.

    For g = 1 this is :func:`brute_force_g1`; for g = 2 the generators are the
    six unit translations, the three partial inversions and three GL moves.
    """
    if Z.g == 1:
        return float(brute_force_g1(np.array([Z.Z[0, 0]]), depth)[0])
    if Z.g != 2:
        raise DomainError("brute force implemented for g <= 2")
    gens = np.array(_generators_g2(), dtype=float)
    g = 2

    def act(Ms, Zs):
        A, B, C, D = Ms[:, :g, :g], Ms[:, :g, g:], Ms[:, g:, :g], Ms[:, g:, g:]
        num = A @ Zs + B
        den = C @ Zs + D
        W = np.linalg.solve(np.swapaxes(den, 1, 2), np.swapaxes(num, 1, 2))
        W = np.swapaxes(W, 1, 2)
        return 0.5 * (W + np.swapaxes(W, 1, 2))

    def detim(Zs):
        Y = Zs.imag
        return Y[:, 0, 0] * Y[:, 1, 1] - Y[:, 0, 1] * Y[:, 1, 0]

    frontier = Z.Z[None, :, :]
    best = float(detim(frontier)[0])
    for _ in range(depth):
        outs = []
        for s in range(0, frontier.shape[0], chunk):
            F = frontier[s : s + chunk]
            n = F.shape[0]
            Ms = np.repeat(gens[None], n, axis=0).reshape(-1, 2 * g, 2 * g)
            Zs = np.repeat(F, len(gens), axis=0)
            with np.errstate(all="ignore"):
                W = act(Ms, Zs)
            ok = np.all(np.isfinite(W), axis=(1, 2)) & (W.imag[:, 0, 0] > 0)
            W = W[ok]
            dets = detim(W)
            best = max(best, float(dets.max(initial=best)))
            outs.append(W)
        frontier = np.concatenate(outs)
        # prune duplicates to keep the tree finite in memory
        key = np.round(np.concatenate([frontier.real.reshape(-1, 4), frontier.imag.reshape(-1, 4)], axis=1), 9)
        _, idx = np.unique(key, axis=0, return_index=True)
        frontier = frontier[np.sort(idx)]
    return best
