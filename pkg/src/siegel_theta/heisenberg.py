"""Heisenberg group arithmetic, the standard nilmanifold, frames and Birkhoff sums.

Two coordinate models of the same group:

* canonical: ``(x, xi, t)(x', xi', t') = (x + x', xi + xi', t + t' + (xi.x' - xi'.x)/2)``
* polarized: ``(x, xi, t)(x', xi', t') = (x + x', xi + xi', t + t' + xi.x')``

related by ``t_pol = t_can + xi.x / 2``.  Lattice reduction, observables and
flows use the polarized model.  Points of the nilmanifold are right cosets
``g Lambda`` of the lattice ``Z^g x Z^g x Z/2``; frames act on the left.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import AccuracyError, ConventionError, DimensionError, DomainError
from .symplectic import BlockSymplectic

CANONICAL = "canonical"
POLARIZED = "polarized"


@dataclass(frozen=True, eq=False)
class HeisElement:
    x: np.ndarray
    xi: np.ndarray
    t: float
    convention: str = POLARIZED

    def __post_init__(self):
        x = np.atleast_1d(np.array(self.x, dtype=float))
        xi = np.atleast_1d(np.array(self.xi, dtype=float))
        if x.shape != xi.shape or x.ndim != 1:
            raise DimensionError("x and xi must be vectors of equal length")
        if self.convention not in (CANONICAL, POLARIZED):
            raise ConventionError(f"unknown convention {self.convention!r}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi)) and np.isfinite(self.t)):
            raise DomainError("non-finite coordinates")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "t", float(self.t))

    @property
    def g(self) -> int:
        return self.x.shape[0]

    @classmethod
    def identity(cls, g: int, convention: str = POLARIZED) -> "HeisElement":
        return cls(np.zeros(g), np.zeros(g), 0.0, convention)

    def as_tuple(self) -> tuple:
        return (self.x.copy(), self.xi.copy(), self.t)

    def close_to(self, other: "HeisElement", tol: float = 1e-12) -> bool:
        return (
            self.convention == other.convention
            and np.allclose(self.x, other.x, atol=tol, rtol=0)
            and np.allclose(self.xi, other.xi, atol=tol, rtol=0)
            and abs(self.t - other.t) <= tol
        )


def mul(a: HeisElement, b: HeisElement) -> HeisElement:
    if a.convention != b.convention:
        raise ConventionError("cannot multiply elements in different conventions")
    if a.g != b.g:
        raise DimensionError("dimension mismatch")
    if a.convention == CANONICAL:
        c = 0.5 * (a.xi @ b.x - b.xi @ a.x)
    else:
        c = a.xi @ b.x
    return HeisElement(a.x + b.x, a.xi + b.xi, a.t + b.t + c, a.convention)


def inv(a: HeisElement) -> HeisElement:
    if a.convention == CANONICAL:
        return HeisElement(-a.x, -a.xi, -a.t, CANONICAL)
    return HeisElement(-a.x, -a.xi, -a.t + a.xi @ a.x, POLARIZED)


def to_polarized(a: HeisElement) -> HeisElement:
    if a.convention == POLARIZED:
        return a
    return HeisElement(a.x, a.xi, a.t + 0.5 * (a.xi @ a.x), POLARIZED)


def to_canonical(a: HeisElement) -> HeisElement:
    if a.convention == CANONICAL:
        return a
    return HeisElement(a.x, a.xi, a.t - 0.5 * (a.xi @ a.x), CANONICAL)


# --- nilmanifold -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NilPoint:
    """Canonical representative: ``x, xi in [0,1)^g``, ``t in [0, 1/2)`` (polarized)."""

    x: np.ndarray
    xi: np.ndarray
    t: float

    def __post_init__(self):
        x = np.atleast_1d(np.array(self.x, dtype=float))
        xi = np.atleast_1d(np.array(self.xi, dtype=float))
        if np.any((x < 0) | (x >= 1)) or np.any((xi < 0) | (xi >= 1)) or not 0 <= self.t < 0.5:
            raise DomainError("not a canonical representative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "t", float(self.t))

    @property
    def g(self) -> int:
        return self.x.shape[0]

    def lift(self) -> HeisElement:
        return HeisElement(self.x, self.xi, self.t, POLARIZED)


def _frac(v):
    f = v - np.floor(v)
    # floor can round up to exactly 1 for tiny negative inputs
    return np.where(f >= 1.0, 0.0, f)


def reduce(a: HeisElement) -> tuple[NilPoint, HeisElement]:
    """Canonical representative of ``a Lambda`` and the lattice witness ``lam``.

    ``a * lam`` equals the representative's lift.
    """
    if a.convention != POLARIZED:
        raise ConventionError("reduce works in the polarized model")
    n = -np.floor(a.x)
    m = -np.floor(a.xi)
    t1 = a.t + a.xi @ n
    s = -0.5 * math.floor(2.0 * t1)
    t2 = t1 + s
    if t2 >= 0.5:
        t2, s = t2 - 0.5, s - 0.5
    if t2 < 0:
        t2, s = t2 + 0.5, s + 0.5
    x2 = a.x + n
    xi2 = a.xi + m
    x2 = np.where(x2 >= 1.0, 0.0, x2)
    xi2 = np.where(xi2 >= 1.0, 0.0, xi2)
    return NilPoint(x2, xi2, t2), HeisElement(n, m, s, POLARIZED)


def lattice_element(n, m, s) -> HeisElement:
    s = float(s)
    if 2 * s != round(2 * s):
        raise DomainError("central lattice coordinate must lie in Z/2")
    n = np.atleast_1d(np.asarray(n, dtype=float))
    m = np.atleast_1d(np.asarray(m, dtype=float))
    if np.any(n != np.round(n)) or np.any(m != np.round(m)):
        raise DomainError("lattice coordinates must be integers")
    return HeisElement(n, m, s, POLARIZED)


# --- frames and flows --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IsotropicFrame:
    """The first ``d`` fields of the frame transported by ``alpha^{-1}``."""

    alpha: BlockSymplectic
    d: int

    def __post_init__(self):
        if not 1 <= self.d <= self.alpha.g:
            raise DomainError("need 1 <= d <= g")
        V = self.vectors
        g = self.alpha.g
        a, b = V[:g], V[g:]
        omega = a.T @ b - b.T @ a
        if np.abs(omega).max() > 1e-10 * max(1.0, np.abs(V).max() ** 2):
            raise DomainError("frame is not isotropic")

    @property
    def g(self) -> int:
        return self.alpha.g

    @property
    def vectors(self) -> np.ndarray:
        """Columns ``alpha^{-1} e_i`` for ``i < d``, shape (2g, d)."""
        return self.alpha.inverse().matrix[:, : self.d]

    def exp(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Polarized coordinates of ``exp(sum y_i X_i)`` for an array of parameters ``(..., d)``."""
        y = np.asarray(y, dtype=float)
        v = y @ self.vectors.T
        a, b = v[..., : self.g], v[..., self.g :]
        return a, b, 0.5 * np.sum(a * b, axis=-1)


def _left_mul_arrays(ax, axi, at, bx, bxi, bt):
    return ax + bx, axi + bxi, at + bt + np.sum(axi * bx, axis=-1)


def flow(frame: IsotropicFrame, m: NilPoint, y) -> NilPoint:
    """``exp(sum y_i X_i) m`` reduced to the canonical box."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (frame.d,):
        raise DimensionError(f"expected {frame.d} flow parameters")
    a, b, c = frame.exp(y)
    x, xi, t = _left_mul_arrays(a, b, c, m.x, m.xi, m.t)
    return reduce(HeisElement(x, xi, float(t)))[0]


# --- observables -------------------------------------------------------------

@dataclass(frozen=True)
class Bump:
    """``c (1 - (u/radius)^2)^order`` on ``|u| < radius``, unit mass; C^{order-1}."""

    radius: float
    order: int = 3

    def __post_init__(self):
        if not 0 < self.radius < 0.5:
            raise DomainError("bump radius must lie in (0, 1/2)")
        if self.order < 1:
            raise DomainError("bump order must be >= 1")

    @property
    def norm_const(self) -> float:
        p = self.order
        return math.exp(gammaln(p + 1.5) - gammaln(p + 1.0)) / (self.radius * math.sqrt(math.pi))

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        s = 1.0 - (u / self.radius) ** 2
        return np.where(s > 0, self.norm_const * np.clip(s, 0, None) ** self.order, 0.0)

    def mass(self) -> float:
        x, w = np.polynomial.legendre.leggauss(self.order + 2)
        return float(self.radius * np.sum(w * self(self.radius * x)))


@dataclass(frozen=True, eq=False)
class Observable:
    """``sum_n psi(x + n) phi(t + xi.n + n.Q.n/2)`` in the coordinates attached to ``Q``.

    ``phi(tau) = sum_k phi_hat[k] e(2 k tau)`` lives on ``R / (Z/2)`` and has no
    constant term.
    """

    Q: np.ndarray
    bump: Bump
    phi: tuple = field(default=())

    def __post_init__(self):
        Q = np.atleast_2d(np.array(self.Q, dtype=float))
        if Q.shape[0] != Q.shape[1] or np.abs(Q - Q.T).max() > 1e-14:
            raise DomainError("Q must be symmetric")
        modes = tuple((int(k), complex(c)) for k, c in self.phi)
        if any(k == 0 and c != 0 for k, c in modes):
            raise DomainError("phi must have zero mean")
        if abs(self.bump.mass() - 1.0) > 1e-10:
            raise DomainError("bump does not have unit mass")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "phi", modes)

    @property
    def g(self) -> int:
        return self.Q.shape[0]

    def phi_eval(self, tau: np.ndarray) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        out = np.zeros(tau.shape, dtype=complex)
        for k, c in self.phi:
            out += c * np.exp(4j * math.pi * k * tau)
        return out

    def to_json(self) -> dict:
        return {
            "q": self.Q.tolist(),
            "bump": {"radius": self.bump.radius, "order": self.bump.order},
            "phi": [{"k": k, "re": c.real, "im": c.imag} for k, c in self.phi],
        }

    @classmethod
    def from_json(cls, o: dict) -> "Observable":
        return cls(
            np.array(o["q"], dtype=float),
            Bump(float(o["bump"]["radius"]), int(o["bump"].get("order", 3))),
            tuple((int(p["k"]), complex(p["re"], p.get("im", 0.0))) for p in o["phi"]),
        )


def _observable_arrays(obs: Observable, x, xi, t) -> np.ndarray:
    """Vectorized observable on polarized lifts (arrays with trailing axis g)."""
    Q = obs.Q
    # coordinates attached to the lower-triangular alpha with block Q
    xa = x
    xia = xi + x @ Q
    ta = t + 0.5 * np.einsum("...i,ij,...j->...", x, Q, x)
    n = -np.round(xa)
    u = xa + n
    w = np.prod(obs.bump(u), axis=-1)
    tau = ta + np.sum(xia * n, axis=-1) + 0.5 * np.einsum("...i,ij,...j->...", n, Q, n)
    return w * obs.phi_eval(tau)


def observable_eval(obs: Observable, m: NilPoint | HeisElement) -> complex:
    """Value at a point; any lift gives the same result (the bump radius is < 1/2)."""
    if isinstance(m, HeisElement):
        m = to_polarized(m)
    if m.g != obs.g:
        raise DimensionError("dimension mismatch")
    return complex(_observable_arrays(obs, m.x[None], m.xi[None], np.array([m.t]))[0])


# --- Birkhoff sums -----------------------------------------------------------

@dataclass(frozen=True)
class BirkhoffResult:
    value: complex
    indicator: float
    nodes: int


def _axis_rule(lo: float, hi: float, breaks: Sequence[float], scale: float, quad: float, min_nodes: int, coarse: bool):
    pts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    xs, ws = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        L = b - a
        p = max(min_nodes, int(math.ceil(quad * scale * L)))
        if coarse:
            p = (p + 1) // 2
        gx, gw = np.polynomial.legendre.leggauss(p)
        xs.append(0.5 * (a + b) + 0.5 * L * gx)
        ws.append(0.5 * L * gw)
    return np.concatenate(xs), np.concatenate(ws)


def _breakpoints(frame: IsotropicFrame, m: NilPoint, obs: Observable, region) -> list[list[float]]:
    """Bump edges along each flow axis when the x-part of the frame is diagonal."""
    V = frame.vectors
    g, d = frame.g, frame.d
    A = V[:g, :]
    out = [[] for _ in range(d)]
    diag = all(np.count_nonzero(A[:, i]) <= 1 and (A[i, i] != 0 or not np.any(A[:, i])) for i in range(d)) and np.all(
        A[:d][~np.eye(d, dtype=bool)] == 0
    )
    if not diag:
        return out
    eps = obs.bump.radius
    for i in range(d):
        s = A[i, i]
        if s == 0:
            continue
        lo, hi = region[i]
        # x_i(y) = m.x_i + s y; edges where x_i + n = +/- eps
        xs = sorted([m.x[i] + s * lo, m.x[i] + s * hi])
        for n in range(int(math.floor(xs[0])) - 1, int(math.ceil(xs[1])) + 2):
            for e in (-eps, eps):
                out[i].append((n + e - m.x[i]) / s)
    return out


def birkhoff(
    frame: IsotropicFrame,
    obs: Observable,
    m: NilPoint,
    region,
    quad: float = 8.0,
    tol: float | None = None,
) -> BirkhoffResult:
    """``int_U f(exp(y.X) m) dy`` over a box ``U = prod [lo_i, hi_i]``.

    Composite tensor Gauss-Legendre with panels split at the bump edges when
    possible.  Nodes per panel are ``max(order+1, ceil(quad * s_i * L))``
    with ``s_i`` the length of the i-th frame vector, so node sets transform
    exactly under Cartan rescaling of the frame.  The indicator is the
    difference against the rule with half as many nodes on every panel.

    Raises
    ------
    AccuracyError
        If ``tol`` is given and the indicator exceeds it.
    """
    if quad < 8:
        raise DomainError("quad must be >= 8 nodes per unit length")
    if obs.g != frame.g or m.g != frame.g:
        raise DimensionError("dimension mismatch")
    region = [tuple(map(float, r)) for r in region]
    if len(region) != frame.d:
        raise DimensionError("region needs one interval per flow axis")
    breaks = _breakpoints(frame, m, obs, region)
    scales = np.linalg.norm(frame.vectors, axis=0)
    min_nodes = obs.bump.order + 1

    def integrate(coarse):
        rules = [_axis_rule(lo, hi, br, s, quad, min_nodes, coarse) for (lo, hi), br, s in zip(region, breaks, scales)]
        grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
        wgrid = np.ones(grids[0].shape)
        for i, r in enumerate(rules):
            shp = [1] * frame.d
            shp[i] = -1
            wgrid = wgrid * r[1].reshape(shp)
        Y = np.stack([gr.ravel() for gr in grids], axis=1)
        a, b, c = frame.exp(Y)
        x, xi, t = _left_mul_arrays(a, b, c, m.x, m.xi, m.t)
        vals = _observable_arrays(obs, x, xi, t) * wgrid.ravel()
        # deterministic tile order: fsum of per-tile sums along the first axis
        tiles = vals.reshape(grids[0].shape[0], -1)
        re = math.fsum(math.fsum(r) for r in tiles.real)
        im = math.fsum(math.fsum(r) for r in tiles.imag)
        return complex(re, im), Y.shape[0]

    full, n = integrate(False)
    half, _ = integrate(True)
    ind = abs(full - half)
    if tol is not None and ind > tol:
        raise AccuracyError(f"quadrature indicator {ind:.3e} exceeds {tol:.1e}", indicator=ind)
    return BirkhoffResult(full, float(ind), n)


def lattice_phi_sum(obs: Observable, l, t: float, N: int) -> complex:
    """``sum_{n in [0,N]^g} phi(t + l.n + n.Q.n/2)`` by direct enumeration."""
    g = obs.g
    l = np.atleast_1d(np.asarray(l, dtype=float))
    grids = np.meshgrid(*[np.arange(N + 1)] * g, indexing="ij")
    n = np.stack([gr.ravel() for gr in grids], axis=1).astype(float)
    tau = t + n @ l + 0.5 * np.einsum("ni,ij,nj->n", n, obs.Q, n)
    v = obs.phi_eval(tau)
    return complex(math.fsum(v.real), math.fsum(v.imag))


def theta_bridge_point(l, t: float, Q) -> NilPoint:
    """Point with Q-coordinates ``(0, -l, t)``.

    With ``U = [-delta, N + delta]^g`` the bump at ``y = -n`` contributes for
    ``n in [-N, 0]^g``; renaming ``n -> -n`` gives the sum over ``[0, N]^g``
    with linear coefficient ``-xi``.  Choosing ``xi = -l`` therefore yields
    ``sum_{n in [0,N]^g} phi(t + l.n + n.Q.n/2)``.
    """
    l = np.atleast_1d(np.asarray(l, dtype=float))
    # x = 0, so the polarized and Q-coordinates agree
    return reduce(HeisElement(np.zeros_like(l), -l, float(t)))[0]


def theta_frame(Q) -> IsotropicFrame:
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    return IsotropicFrame(BlockSymplectic.lower_triangular(Q), Q.shape[0])


def dumps_observable(obs: Observable) -> str:
    return json.dumps(obs.to_json())
