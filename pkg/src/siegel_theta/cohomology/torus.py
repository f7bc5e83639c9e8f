"""Fourier solver for the cohomological equation of a linear frame on a torus.

On the mode ``n`` the frame field ``V_m`` acts by ``e_m = i (n . V_m)``, so
``d`` is a Koszul differential with scalar coefficients and the Laplacian
``H = d d* + d* d`` is the scalar ``sum_m |n . V_m|^2``.  The solver is
``d_{-1} = H^{-1} d*`` mode by mode.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import DimensionError, DomainError, ResonanceError

DIVISOR_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class TorusFrame:
    """Frame ``V_1..V_d`` in ``R^ell`` with Fourier cutoff ``K``.

    Entries given as ``Fraction`` (or ints) are kept exactly so resonances
    ``n . V_m = 0`` are detected symbolically.
    """

    V: tuple
    K: int = 16
    exact: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        rows = [list(r) for r in self.V]
        if not rows:
            raise DimensionError("frame needs at least one vector")
        ell = len(rows[0])
        if any(len(r) != ell for r in rows):
            raise DimensionError("frame vectors must share a dimension")
        exact = self.exact
        if exact is None and all(isinstance(v, (int, Fraction)) for r in rows for v in r):
            exact = tuple(tuple(Fraction(v) for v in r) for r in rows)
        Vf = np.array([[float(v) for v in r] for r in rows])
        if np.linalg.matrix_rank(Vf) < len(rows):
            raise DomainError("frame vectors must be linearly independent")
        if self.K < 1:
            raise DomainError("cutoff K must be >= 1")
        Vf.setflags(write=False)
        object.__setattr__(self, "V", Vf)
        object.__setattr__(self, "exact", exact)

    @property
    def ell(self) -> int:
        return self.V.shape[1]

    @property
    def d(self) -> int:
        return self.V.shape[0]

    def modes(self) -> np.ndarray:
        """All ``n`` with ``|n|_inf <= K`` in the array layout order, shape (N, ell)."""
        rng = np.arange(-self.K, self.K + 1)
        grids = np.meshgrid(*[rng] * self.ell, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def divisors(self, n: np.ndarray) -> np.ndarray:
        """``n . V_m`` for each mode row, shape (N, d)."""
        return np.asarray(n, dtype=float) @ self.V.T


@dataclass(frozen=True, eq=False)
class TorusForm:
    """k-form with Fourier coefficient arrays of shape ``(2K+1,)*ell`` per index set."""

    frame: TorusFrame
    k: int
    components: dict

    def __post_init__(self):
        keys = list(itertools.combinations(range(self.frame.d), self.k))
        if sorted(self.components) != keys:
            raise DimensionError(f"expected components {keys}")
        shape = (2 * self.frame.K + 1,) * self.frame.ell
        comps = {}
        for J in keys:
            c = np.array(self.components[J], dtype=complex)
            if c.shape != shape:
                raise DimensionError(f"component shape {c.shape} != {shape}")
            c.setflags(write=False)
            comps[J] = c
        object.__setattr__(self, "components", comps)

    def stacked(self) -> np.ndarray:
        return np.stack([self.components[J].ravel() for J in sorted(self.components)], axis=1)

    @classmethod
    def from_stacked(cls, frame: TorusFrame, k: int, arr: np.ndarray) -> "TorusForm":
        keys = list(itertools.combinations(range(frame.d), k))
        shape = (2 * frame.K + 1,) * frame.ell
        return cls(frame, k, {J: arr[:, i].reshape(shape) for i, J in enumerate(keys)})

    @classmethod
    def single_mode(cls, frame: TorusFrame, k: int, n, values: dict) -> "TorusForm":
        shape = (2 * frame.K + 1,) * frame.ell
        idx = tuple(int(v) + frame.K for v in n)
        comps = {}
        for J in itertools.combinations(range(frame.d), k):
            c = np.zeros(shape, dtype=complex)
            c[idx] = values.get(J, 0.0)
            comps[J] = c
        return cls(frame, k, comps)


def _sign(j: int, I: tuple) -> int:
    return -1 if sum(1 for i in I if i < j) % 2 else 1


def torus_d(w: TorusForm) -> TorusForm:
    """Frame differential ``sum_j e_j dx_j ^``, mode by mode."""
    fr = w.frame
    e = 1j * fr.divisors(fr.modes())
    keys_out = list(itertools.combinations(range(fr.d), w.k + 1))
    out = {J: np.zeros(fr.modes().shape[0], dtype=complex) for J in keys_out}
    for I, c in w.components.items():
        for j in range(fr.d):
            if j in I:
                continue
            J = tuple(sorted(I + (j,)))
            out[J] = out[J] + _sign(j, I) * e[:, j] * c.ravel()
    shape = (2 * fr.K + 1,) * fr.ell
    return TorusForm(fr, w.k + 1, {J: v.reshape(shape) for J, v in out.items()})


def _codiff(w: TorusForm, e: np.ndarray) -> dict:
    fr = w.frame
    out = {J: np.zeros(e.shape[0], dtype=complex) for J in itertools.combinations(range(fr.d), w.k - 1)}
    for J, c in w.components.items():
        for pos, j in enumerate(J):
            I = J[:pos] + J[pos + 1 :]
            out[I] = out[I] + _sign(j, I) * np.conj(e[:, j]) * c.ravel()
    return out


def _exact_resonant(frame: TorusFrame, n_rows: np.ndarray) -> np.ndarray:
    ex = frame.exact
    res = np.zeros(n_rows.shape[0], dtype=bool)
    for r, n in enumerate(n_rows):
        res[r] = all(sum(Fraction(int(a)) * b for a, b in zip(n, V)) == 0 for V in ex)
    return res


def torus_solve(frame: TorusFrame, w: TorusForm, divisor_floor: float = DIVISOR_FLOOR) -> TorusForm:
    """Primitive ``H^{-1} d* w`` of a closed form ``w`` supported on nonzero modes.

    Raises
    ------
    ResonanceError
        When a supported mode has divisor ``<= divisor_floor`` (or is exactly
        resonant for rational frames); ``.modes`` lists them.
    """
    if w.k < 1:
        raise DomainError("need degree >= 1")
    if w.frame is not frame:
        raise DimensionError("form belongs to a different frame")
    n = frame.modes()
    dv = frame.divisors(n)
    H = np.sum(dv**2, axis=1)
    support = np.any(np.abs(w.stacked()) > 0, axis=1)
    zero = np.all(n == 0, axis=1)
    if np.any(support & zero):
        raise DomainError("the zero mode must vanish")
    bad = support & (H <= divisor_floor)
    if frame.exact is not None:
        bad |= support & _exact_resonant(frame, n)
    if bad.any():
        modes = [tuple(int(v) for v in row) for row in n[bad]]
        raise ResonanceError(f"{len(modes)} resonant mode(s), e.g. {modes[0]}", modes)
    e = 1j * dv
    Hs = np.where(support, H, 1.0)
    out = _codiff(w, e)
    shape = (2 * frame.K + 1,) * frame.ell
    return TorusForm(frame, w.k - 1, {J: (v / Hs).reshape(shape) for J, v in out.items()})


def torus_diophantine(frame: TorusFrame, tau: float, K: int, chunk: int = 1 << 22) -> tuple[float, tuple]:
    """``min_{0 < |n|_inf <= K} |proj_q n| |n|^tau`` and a mode attaining it.

    ``|proj_q n|`` is ``sup_{V in q} |n . V| / |V|``.  Modes ``n`` and ``-n``
    give the same value, so only half of the cube is scanned.
    """
    if K < 1:
        raise DomainError("K must be >= 1")
    Qb, _ = np.linalg.qr(frame.V.T)
    ell = frame.ell
    best, arg = math.inf, None
    side = np.arange(-K, K + 1)
    # first coordinate >= 0 covers every +/- pair (ties on the n_1 = 0 slab are harmless)
    rest = np.stack([g.ravel() for g in np.meshgrid(*[side] * (ell - 1), indexing="ij")], axis=1) if ell > 1 else np.zeros((1, 0), int)
    rows_per = max(1, chunk // rest.shape[0])
    for start in range(0, K + 1, rows_per):
        first = np.arange(start, min(K + 1, start + rows_per))
        n = np.concatenate([np.repeat(first, rest.shape[0])[:, None], np.tile(rest, (len(first), 1))], axis=1)
        nz = np.any(n != 0, axis=1)
        n = n[nz].astype(float)
        proj = np.linalg.norm(n @ Qb, axis=1)
        val = proj * np.linalg.norm(n, axis=1) ** tau
        i = int(np.argmin(val))
        if val[i] < best:
            best, arg = float(val[i]), tuple(int(v) for v in n[i])
    return best, arg
