"""Hermite model of the Schrödinger representation.

Fields are coefficient tensors in the orthonormal eigenbasis ``psi_n`` of
``x^2 - d^2/dx^2`` (eigenvalue ``2n + 1``), one index per axis, truncated
to ``n < cutoff``.  Operators return fresh fields and accumulate an
a-posteriori truncation loss: the norm of what they would have written at
or beyond the cutoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from ..errors import DimensionError, DomainError, PreconditionError

SQRT2 = math.sqrt(2.0)
# coefficient of psi_0 in the unit-mass Gaussian (2 pi)^{-1/2} e^{-x^2/2}
GAUSS_C0 = (2 * math.pi) ** -0.5 * math.pi**0.25
PRECONDITION_TOL = 1e-10


@dataclass(frozen=True)
class HermiteTruncation:
    """Dimension ``g``, per-axis cutoff ``A`` and representation parameter ``h``."""

    g: int
    cutoff: int
    h: float = 1.0

    def __post_init__(self):
        if self.g < 0:
            raise DomainError("g must be >= 0")
        if self.cutoff < 4:
            raise DomainError("cutoff must be >= 4")
        if not np.isfinite(self.h) or self.h == 0:
            raise DomainError("h must be finite and nonzero")

    @property
    def shape(self) -> tuple:
        return (self.cutoff,) * self.g

    def with_g(self, g: int) -> "HermiteTruncation":
        return HermiteTruncation(g, self.cutoff, self.h)

    def with_cutoff(self, cutoff: int) -> "HermiteTruncation":
        return HermiteTruncation(self.g, cutoff, self.h)


@dataclass(frozen=True, eq=False)
class HermiteField:
    trunc: HermiteTruncation
    coeffs: np.ndarray
    loss: float = 0.0
    flags: tuple = ()

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.shape != self.trunc.shape:
            raise DimensionError(f"coeffs shape {c.shape} != {self.trunc.shape}")
        if not np.all(np.isfinite(c)):
            raise DomainError("non-finite coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def g(self) -> int:
        return self.trunc.g

    @property
    def cutoff(self) -> int:
        return self.trunc.cutoff

    def norm0(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def _new(self, c, extra_loss=0.0, flags=()):
        return HermiteField(self.trunc, c, self.loss + extra_loss, self.flags + tuple(flags))

    def __add__(self, other: "HermiteField") -> "HermiteField":
        _same(self, other)
        return HermiteField(self.trunc, self.coeffs + other.coeffs, self.loss + other.loss)

    def __sub__(self, other: "HermiteField") -> "HermiteField":
        _same(self, other)
        return HermiteField(self.trunc, self.coeffs - other.coeffs, self.loss + other.loss)

    def __neg__(self) -> "HermiteField":
        return self._new(-self.coeffs)

    def scale(self, a: complex) -> "HermiteField":
        return HermiteField(self.trunc, a * self.coeffs, abs(a) * self.loss)

    @classmethod
    def zeros(cls, trunc: HermiteTruncation) -> "HermiteField":
        return cls(trunc, np.zeros(trunc.shape, dtype=complex))

    @classmethod
    def basis(cls, trunc: HermiteTruncation, index) -> "HermiteField":
        c = np.zeros(trunc.shape, dtype=complex)
        c[tuple(index)] = 1.0
        return cls(trunc, c)

    @classmethod
    def random(cls, trunc: HermiteTruncation, rng: np.random.Generator, band: int | None = None) -> "HermiteField":
        """Complex Gaussian coefficients on modes ``< band`` per axis."""
        band = trunc.cutoff if band is None else band
        c = np.zeros(trunc.shape, dtype=complex)
        sl = (slice(0, band),) * trunc.g
        sub = c[sl]
        c[sl] = rng.normal(size=sub.shape) + 1j * rng.normal(size=sub.shape)
        return cls(trunc, c)

    def resized(self, cutoff: int) -> "HermiteField":
        """Zero-pad or truncate to a new cutoff; truncated mass is added to the loss."""
        t = self.trunc.with_cutoff(cutoff)
        c = np.zeros(t.shape, dtype=complex)
        m = min(cutoff, self.cutoff)
        sl = (slice(0, m),) * self.g
        c[sl] = self.coeffs[sl]
        dropped = math.sqrt(max(self.norm0() ** 2 - float(np.linalg.norm(c)) ** 2, 0.0))
        return HermiteField(t, c, self.loss + dropped, self.flags)


def _same(a: HermiteField, b: HermiteField) -> None:
    if a.trunc != b.trunc:
        raise DimensionError("fields have different truncations")


# --- spectral quantities -----------------------------------------------------

def eigenvalues(trunc: HermiteTruncation) -> np.ndarray:
    """``|h| (2|a| + g)`` on the coefficient grid."""
    if trunc.g == 0:
        return np.array(abs(trunc.h))
    grids = np.meshgrid(*[np.arange(trunc.cutoff)] * trunc.g, indexing="ij")
    return abs(trunc.h) * (2 * sum(grids) + trunc.g)


def sobolev_norm(f: HermiteField, s: float) -> float:
    """``(sum_a (|h|(2|a| + g))^s |f_a|^2)^{1/2}``; plain modulus for g = 0."""
    if f.g == 0:
        return float(abs(f.coeffs))
    lam = eigenvalues(f.trunc)
    return float(np.sqrt(np.sum(lam**s * np.abs(f.coeffs) ** 2)))


# --- ladder operators --------------------------------------------------------

def _ladder(c: np.ndarray, axis: int, sign: float) -> tuple[np.ndarray, float]:
    """``(sqrt(n+1) c_{n+1} + sign sqrt(n) c_{n-1}) / sqrt 2`` along ``axis``."""
    A = c.shape[axis]
    cm = np.moveaxis(c, axis, 0)
    out = np.zeros_like(cm)
    r = np.sqrt(np.arange(1, A, dtype=float)) / SQRT2
    shp = (A - 1,) + (1,) * (cm.ndim - 1)
    out[:-1] += r.reshape(shp) * cm[1:]
    out[1:] += sign * r.reshape(shp) * cm[:-1]
    loss = math.sqrt(A / 2.0) * float(np.linalg.norm(cm[-1]))
    return np.moveaxis(out, 0, axis), loss


def _check_axis(f: HermiteField, axis: int) -> None:
    if not 0 <= axis < f.g:
        raise DimensionError(f"axis {axis} out of range for g = {f.g}")


def apply_ddx(f: HermiteField, axis: int) -> HermiteField:
    """``|h|^{1/2} d/dx_axis``, the image of the frame field ``X_axis``."""
    _check_axis(f, axis)
    out, loss = _ladder(f.coeffs, axis, -1.0)
    s = math.sqrt(abs(f.trunc.h))
    return HermiteField(f.trunc, s * out, s * (f.loss + loss), f.flags)


def apply_x(f: HermiteField, axis: int) -> HermiteField:
    """``|h|^{1/2} x_axis`` (multiplication operator)."""
    _check_axis(f, axis)
    out, loss = _ladder(f.coeffs, axis, 1.0)
    s = math.sqrt(abs(f.trunc.h))
    return HermiteField(f.trunc, s * out, s * (f.loss + loss), f.flags)


def rho_Xi(f: HermiteField, axis: int) -> HermiteField:
    """``-i sign(h) |h|^{1/2} x_axis``, the image of ``Xi_axis``."""
    return apply_x(f, axis).scale(-1j * math.copysign(1.0, f.trunc.h))


def oscillator(f: HermiteField, axis: int) -> HermiteField:
    """``(x^2 - d^2)`` along one axis, unscaled: multiplies ``psi_a`` by ``2 a_axis + 1``."""
    _check_axis(f, axis)
    shp = [1] * f.g
    shp[axis] = f.cutoff
    return HermiteField(f.trunc, f.coeffs * (2 * np.arange(f.cutoff) + 1).reshape(shp), f.loss, f.flags)


# --- integrals of Hermite functions ------------------------------------------

def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """``psi_n(x)`` for ``n < n_max``, shape ``(n_max,) + x.shape``, by the stable recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max,) + x.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        out[1] = SQRT2 * x * out[0]
    for n in range(1, n_max - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


@lru_cache(maxsize=8)
def _gauss_hermite(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``u`` and rescaled weights ``w e^{u^2}`` (= 1 / sum_k psi_k(u)^2)."""
    u, _ = roots_hermite(n_nodes)
    W = 1.0 / np.sum(hermite_functions(n_nodes, u) ** 2, axis=0)
    return u, W


def _integrals_recurrence(n: int) -> np.ndarray:
    d = np.zeros(n)
    d[0] = SQRT2 * math.pi**0.25
    for m in range(1, n - 1):
        d[m + 1] = math.sqrt(m / (m + 1)) * d[m - 1]
    return d


def _integrals_quadrature(n: int, n_nodes: int = 200) -> np.ndarray:
    # x = sqrt2 u turns psi_m(x) dx into a polynomial against e^{-u^2}
    u, W = _gauss_hermite(n_nodes)
    return SQRT2 * hermite_functions(n, SQRT2 * u) @ W


@lru_cache(maxsize=1)
def _validated_integrals() -> np.ndarray:
    n = 256
    rec = _integrals_recurrence(n)
    quad = _integrals_quadrature(n)
    err = float(np.max(np.abs(rec - quad)))
    if err > 1e-12:
        raise RuntimeError(f"Hermite integral recurrence disagrees with quadrature ({err:.2e})")
    return rec


def hermite_integrals(n: int) -> np.ndarray:
    """``d_m = int psi_m`` for ``m < n``; the first 256 are checked against quadrature."""
    base = _validated_integrals()
    if n <= base.shape[0]:
        return base[:n].copy()
    return _integrals_recurrence(n)


# --- I, E, P -----------------------------------------------------------------

def integrate_I(f: HermiteField, d: int) -> HermiteField:
    """Integrate over the first ``d`` axes; a g = 0 field when ``d = g``."""
    if not 0 <= d <= f.g:
        raise DimensionError("need 0 <= d <= g")
    dm = hermite_integrals(f.cutoff)
    c = f.coeffs
    for _ in range(d):
        c = np.tensordot(dm, c, axes=(0, 0))
    loss = f.loss * float(np.linalg.norm(dm)) ** d
    return HermiteField(f.trunc.with_g(f.g - d), c, loss, f.flags)


def extend_E(f: HermiteField | complex, d: int, trunc: HermiteTruncation | None = None) -> HermiteField:
    """``phi_d(x) f(y)`` with ``phi_d`` the unit-mass Gaussian on the first d axes.

    A scalar ``f`` (d = g) needs ``trunc`` for the output.
    """
    if not isinstance(f, HermiteField):
        if trunc is None or trunc.g != d:
            raise DimensionError("scalar input needs the output truncation with g = d")
        f = HermiteField(trunc.with_g(0), np.array(f, dtype=complex))
    out_t = f.trunc.with_g(f.g + d)
    c = np.zeros(out_t.shape, dtype=complex)
    c[(0,) * d] = GAUSS_C0**d * f.coeffs
    return HermiteField(out_t, c, GAUSS_C0**d * f.loss, f.flags)


def gaussian(trunc: HermiteTruncation) -> HermiteField:
    """Unit-mass Gaussian ``(2 pi)^{-g/2} e^{-|x|^2/2}``."""
    return extend_E(1.0, trunc.g, trunc)


def primitive_P(f: HermiteField, axis: int = 0, tol: float = PRECONDITION_TOL) -> HermiteField:
    """Antiderivative along ``axis`` that decays at both ends.

    Solves ``|h|^{1/2} d/dx g = f`` by downward recursion from the cutoff.
    The mode-0 equation is dropped; it holds precisely when the axis integral
    of ``f`` vanishes.

    Raises
    ------
    PreconditionError
        If the axis integral exceeds ``tol * max(1, |f|_0)``; ``defect`` is
        that integral as a field over the remaining axes.
    """
    _check_axis(f, axis)
    cm = np.moveaxis(f.coeffs, axis, 0)
    dm = hermite_integrals(f.cutoff)
    defect = np.tensordot(dm, cm, axes=(0, 0))
    scale = max(1.0, f.norm0())
    dmax = float(np.max(np.abs(defect))) if defect.size else 0.0
    if dmax > tol * scale:
        raise PreconditionError(f"axis integral {dmax:.3e} is not zero", defect=defect)
    A = f.cutoff
    ft = cm / math.sqrt(abs(f.trunc.h))
    G = np.zeros((A + 2,) + cm.shape[1:], dtype=complex)
    for n in range(A - 1, 0, -1):
        G[n - 1] = (math.sqrt(n + 1) * G[n + 1] - SQRT2 * ft[n]) / math.sqrt(n)
    out = np.moveaxis(G[:A], 0, axis)
    # the recursion never writes beyond the cutoff, so only inherited loss remains
    return HermiteField(f.trunc, out, f.loss / math.sqrt(abs(f.trunc.h)), f.flags)


# --- currents ----------------------------------------------------------------

def integral_functional_norm(trunc: HermiteTruncation, d: int, s: float, density: HermiteField | None = None) -> float:
    """Order ``-s`` norm of ``f -> sum D I_{d,g} f``: ``(sum |d_{a_x} D_{a_y}|^2 lambda_a^{-s})^{1/2}``."""
    w = _current_coeffs(trunc, d, density)
    lam = eigenvalues(trunc)
    return float(np.sqrt(np.sum(np.abs(w) ** 2 * lam ** (-s))))


def _current_coeffs(trunc: HermiteTruncation, d: int, density: HermiteField | None) -> np.ndarray:
    dm = hermite_integrals(trunc.cutoff)
    w = np.ones(())
    for _ in range(d):
        w = np.multiply.outer(w, dm)
    if d < trunc.g:
        if density is None:
            raise DimensionError("d < g needs a density over the remaining axes")
        w = np.multiply.outer(w, density.coeffs)
    return w


# --- metaplectic dilation ----------------------------------------------------

@lru_cache(maxsize=64)
def dilation_matrix(cutoff: int, t: float) -> np.ndarray:
    """``M[n, m] = <psi_n, U_t psi_m>`` with ``U_t f(x) = e^{t/2} f(e^t x)``.

    Gauss-Hermite after ``x = u sqrt(2 / (1 + e^{2t}))`` makes the integrand
    polynomial, so the entries are exact up to rounding for ``n + m < 2 * nodes``.
    """
    n_nodes = cutoff + 8
    u, W = _gauss_hermite(n_nodes)
    sc = math.sqrt(2.0 / (1.0 + math.exp(2 * t)))
    Pn = hermite_functions(cutoff, sc * u)
    Pm = hermite_functions(cutoff, math.exp(t) * sc * u)
    M = math.exp(t / 2) * sc * (Pn * W) @ Pm.T
    M.setflags(write=False)
    return M


def metaplectic_U(f: HermiteField, t) -> HermiteField:
    """Unitary rescaling ``e^{sum t/2} f(e^{t} x, y)`` along the first ``len(t)`` axes.

    ``loss`` gains the mass pushed beyond the cutoff; a flag
    ``"accuracy:|t|>1"`` is attached outside the accuracy domain.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if len(t) > f.g:
        raise DimensionError("more rescaling parameters than axes")
    c = f.coeffs
    for ax, ti in enumerate(t):
        if ti == 0.0:
            continue
        M = dilation_matrix(f.cutoff, float(ti))
        c = np.moveaxis(np.tensordot(M, c, axes=(1, ax)), 0, ax)
    lost = math.sqrt(max(f.norm0() ** 2 - float(np.linalg.norm(c)) ** 2, 0.0))
    flags = ("accuracy:|t|>1",) if np.max(np.abs(t), initial=0.0) > 1 else ()
    return HermiteField(f.trunc, c, f.loss + lost, f.flags + flags)


def current_norm_under_flow(trunc: HermiteTruncation, t: float, s: float, resolved_tol: float = 1e-13) -> tuple[float, float, int]:
    """Order ``-s`` norms of ``I_g`` and of ``I_g o U_t`` (g = 1, d = 1).

    Both are restricted to modes whose image under ``U_t`` stays inside the
    cutoff (column mass ``>= 1 - resolved_tol``).  Returns
    ``(norm_t, norm_0, n_resolved)``.
    """
    if trunc.g != 1:
        raise DimensionError("implemented for g = 1")
    A = trunc.cutoff
    M = dilation_matrix(A, float(t))
    dm = hermite_integrals(A)
    col = np.sum(M**2, axis=0)
    bad = np.nonzero(np.abs(col - 1.0) > resolved_tol)[0]
    n_res = int(bad[0]) if bad.size else A
    cvec = (dm @ M)[:n_res]
    lam = abs(trunc.h) * (2 * np.arange(n_res) + 1)
    return (
        float(np.sqrt(np.sum(cvec**2 * lam ** (-s)))),
        float(np.sqrt(np.sum(dm[:n_res] ** 2 * lam ** (-s)))),
        n_res,
    )
