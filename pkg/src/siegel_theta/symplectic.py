"""Symplectic linear algebra on the Siegel upper half-space.

Matrices act on ``Z = X + iY`` by ``Z -> (AZ + B)(CZ + D)^{-1}``.  All types
are immutable; operations never modify their inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, DomainError, RefinementRequired, SingularCocycleError

SYMPLECTIC_TOL = 1e-10
DET_TOL = 1e-8
SYM_TOL = 1e-12
COND_MAX = 1e12


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _split(M: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = M.shape[0] // 2
    return M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:]


def verify_symplectic(M) -> float:
    """Max-norm residual of the three block relations.

    Parameters
    ----------
    M : array_like, shape (2g, 2g)

    Returns
    -------
    float
        ``max(|A'C - C'A|, |B'D - D'B|, |A'D - C'B - I|)``.  Thresholding is
        left to the caller.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise DimensionError(f"expected a square matrix of even size, got {M.shape}")
    A, B, C, D = _split(M)
    r1 = A.T @ C - C.T @ A
    r2 = B.T @ D - D.T @ B
    r3 = A.T @ D - C.T @ B - np.eye(A.shape[0])
    return float(max(np.abs(r1).max(), np.abs(r2).max(), np.abs(r3).max()))


def _scaled_residual(M: np.ndarray) -> float:
    # products of entries of size s lose about s^2 * eps in absolute terms
    scale = max(1.0, float(np.abs(M).max())) ** 2
    return verify_symplectic(M) / scale


@dataclass(frozen=True, eq=False)
class BlockSymplectic:
    """Real symplectic matrix ``[[A, B], [C, D]]``.

    ``exact`` optionally holds the same matrix as a sympy ``Matrix`` of exact
    entries; high-precision code paths (height flows) use it when present.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    exact: Any = field(default=None, repr=False)

    def __post_init__(self):
        blocks = [np.array(b, dtype=float) for b in (self.A, self.B, self.C, self.D)]
        blocks = [np.atleast_2d(b) for b in blocks]
        g = blocks[0].shape[0]
        for b in blocks:
            if b.shape != (g, g):
                raise DimensionError("blocks must all be g x g")
            b.setflags(write=False)
        for name, b in zip("ABCD", blocks):
            object.__setattr__(self, name, b)
        M = self.matrix
        res = _scaled_residual(M)
        if not np.isfinite(res) or res > SYMPLECTIC_TOL:
            raise DomainError(f"matrix is not symplectic (scaled residual {res:.3e})")
        det = np.linalg.det(M)
        if abs(det - 1.0) > DET_TOL * max(1.0, float(np.abs(M).max())) ** (2 * g):
            raise DomainError(f"determinant {det} != 1")

    @property
    def g(self) -> int:
        return self.A.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    @classmethod
    def from_matrix(cls, M, exact=None) -> "BlockSymplectic":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise DimensionError(f"expected a square matrix of even size, got {M.shape}")
        return cls(*_split(M), exact=exact)

    @classmethod
    def identity(cls, g: int) -> "BlockSymplectic":
        I, O = np.eye(g), np.zeros((g, g))
        return cls(I, O, O, I)

    @classmethod
    def lower_triangular(cls, Q) -> "BlockSymplectic":
        """``[[I, 0], [Q, I]]`` for symmetric Q.

        ``Q`` may contain strings or sympy expressions such as
        ``"(1+sqrt(5))/2"``; the exact matrix is then kept alongside the float one.
        Plain floats are taken as the binary rationals they represent.
        """
        import sympy

        rows = np.atleast_2d(np.array(Q, dtype=object))
        g = rows.shape[0]
        if rows.shape != (g, g):
            raise DimensionError("Q must be square")
        Qe = sympy.Matrix(g, g, lambda i, j: _to_sympy(rows[i, j]))
        if Qe != Qe.T:
            raise DomainError("Q must be symmetric")
        Qf = np.array(Qe.evalf(20).tolist(), dtype=float)
        I = sympy.eye(g)
        Z = sympy.zeros(g, g)
        exact = sympy.Matrix(sympy.BlockMatrix([[I, Z], [Qe, I]]))
        return cls(np.eye(g), np.zeros((g, g)), Qf, np.eye(g), exact=exact)

    def exact_matrix(self):
        """Exact sympy form; float entries become exact binary rationals."""
        import sympy

        if self.exact is not None:
            return self.exact
        M = self.matrix
        return sympy.Matrix(M.shape[0], M.shape[1], lambda i, j: sympy.Rational(float(M[i, j])))

    def inverse(self) -> "BlockSymplectic":
        inv_exact = None
        if self.exact is not None:
            inv_exact = _exact_inverse(self.exact)
        return BlockSymplectic(self.D.T, -self.B.T, -self.C.T, self.A.T, exact=inv_exact)

    def __matmul__(self, other: "BlockSymplectic") -> "BlockSymplectic":
        if not isinstance(other, BlockSymplectic):
            return NotImplemented
        if other.g != self.g:
            raise DimensionError("genus mismatch")
        ex = None
        if self.exact is not None or other.exact is not None:
            ex = self.exact_matrix() * other.exact_matrix()
        return BlockSymplectic.from_matrix(self.matrix @ other.matrix, exact=ex)

    def __neg__(self) -> "BlockSymplectic":
        ex = -self.exact if self.exact is not None else None
        return BlockSymplectic(-self.A, -self.B, -self.C, -self.D, exact=ex)

    def to_json(self) -> list:
        return self.matrix.tolist()

    @classmethod
    def from_json(cls, data) -> "BlockSymplectic":
        return cls.from_matrix(np.array(data, dtype=float))


def _to_sympy(v):
    import sympy

    if isinstance(v, (int, np.integer)):
        return sympy.Integer(int(v))
    if isinstance(v, (float, np.floating)):
        return sympy.Rational(float(v))
    if isinstance(v, str):
        return sympy.sympify(v, rational=True)
    return sympy.sympify(v)


def _exact_inverse(M):
    n = M.shape[0] // 2
    A, B, C, D = M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:]
    import sympy

    return sympy.Matrix(sympy.BlockMatrix([[D.T, -B.T], [-C.T, A.T]]))


@dataclass(frozen=True, eq=False)
class IntegerSymplectic:
    """Element of Sp(2g, Z), stored as exact Python integers."""

    M: np.ndarray

    def __post_init__(self):
        M = np.array([[int(v) for v in row] for row in np.asarray(self.M)], dtype=object)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise DimensionError(f"expected a square matrix of even size, got {M.shape}")
        n = M.shape[0] // 2
        A, B, C, D = M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:]
        eye = np.array([[int(i == j) for j in range(n)] for i in range(n)], dtype=object)
        ok = (
            np.all(A.T.dot(C) == C.T.dot(A))
            and np.all(B.T.dot(D) == D.T.dot(B))
            and np.all(A.T.dot(D) - C.T.dot(B) == eye)
        )
        if not ok:
            raise DomainError("integer matrix is not symplectic")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @property
    def g(self) -> int:
        return self.M.shape[0] // 2

    @classmethod
    def identity(cls, g: int) -> "IntegerSymplectic":
        return cls(np.eye(2 * g, dtype=int))

    def blocks(self):
        return _split(self.M)

    def __matmul__(self, other: "IntegerSymplectic") -> "IntegerSymplectic":
        return IntegerSymplectic(self.M.dot(other.M))

    def inverse(self) -> "IntegerSymplectic":
        A, B, C, D = self.blocks()
        return IntegerSymplectic(np.block([[D.T, -B.T], [-C.T, A.T]]))

    def as_block(self) -> BlockSymplectic:
        import sympy

        ex = sympy.Matrix(self.M.tolist())
        return BlockSymplectic.from_matrix(self.M.astype(float), exact=ex)

    def to_json(self) -> list:
        return [[int(v) for v in row] for row in self.M]


@dataclass(frozen=True, eq=False)
class SiegelPoint:
    """``Z = X + iY`` with X, Y real symmetric and Y positive definite."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.array(self.X, dtype=float))
        Y = np.atleast_2d(np.array(self.Y, dtype=float))
        g = X.shape[0]
        if X.shape != (g, g) or Y.shape != (g, g):
            raise DimensionError("X and Y must be g x g")
        for name, M in (("X", X), ("Y", Y)):
            if not np.all(np.isfinite(M)):
                raise DomainError(f"{name} has non-finite entries")
            if np.abs(M - M.T).max() > SYM_TOL * max(1.0, np.abs(M).max()):
                raise DomainError(f"{name} is not symmetric")
        X, Y = _sym(X), _sym(Y)
        try:
            np.linalg.cholesky(Y)
        except np.linalg.LinAlgError:
            raise DomainError("Y is not positive definite") from None
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def g(self) -> int:
        return self.X.shape[0]

    @property
    def Z(self) -> np.ndarray:
        return self.X + 1j * self.Y

    @classmethod
    def from_complex(cls, Z) -> "SiegelPoint":
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        return cls(Z.real, Z.imag)

    @classmethod
    def i_identity(cls, g: int) -> "SiegelPoint":
        return cls(np.zeros((g, g)), np.eye(g))

    def to_json(self) -> dict:
        return {"x": self.X.tolist(), "y": self.Y.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "SiegelPoint":
        return cls(np.array(data["x"], dtype=float), np.array(data["y"], dtype=float))


@dataclass(frozen=True, eq=False)
class IwasawaCoordinates:
    """``Z = X + i W^T diag(D) W`` with W unit upper-triangular."""

    X: np.ndarray
    W: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.array(self.W, dtype=float))
        D = np.atleast_1d(np.array(self.D, dtype=float))
        if np.any(D <= 0):
            raise DomainError("D must be positive")
        if np.abs(np.tril(W, -1)).max(initial=0.0) > 0 or np.any(np.diag(W) != 1.0):
            raise DomainError("W must be unit upper-triangular")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "X", np.atleast_2d(np.array(self.X, dtype=float)))

    def reconstruct(self) -> SiegelPoint:
        return SiegelPoint(self.X, self.W.T @ (self.D[:, None] * self.W))


@dataclass(frozen=True)
class CartanDirection:
    """Non-negative flow weights ``delta``."""

    delta: tuple

    def __post_init__(self):
        d = tuple(float(v) for v in np.atleast_1d(np.asarray(self.delta, dtype=float)))
        if any(v < 0 or not np.isfinite(v) for v in d):
            raise DomainError("Cartan weights must be finite and non-negative")
        object.__setattr__(self, "delta", d)

    @property
    def g(self) -> int:
        return len(self.delta)

    @property
    def weight(self) -> float:
        return float(sum(self.delta))

    @classmethod
    def unit(cls, g: int, d: int) -> "CartanDirection":
        """The direction with ``d`` leading ones and ``g - d`` zeros."""
        if not 0 < d <= g:
            raise DomainError("need 0 < d <= g")
        return cls(tuple([1.0] * d + [0.0] * (g - d)))

    def require_nonzero(self) -> None:
        if self.weight == 0:
            raise DomainError("a flow needs at least one positive weight")


def cartan_matrix(dhat: CartanDirection, t: float) -> BlockSymplectic:
    """``diag(e^{t delta}, e^{-t delta})``."""
    e = np.exp(t * np.asarray(dhat.delta))
    return BlockSymplectic(np.diag(e), np.zeros((dhat.g, dhat.g)), np.zeros((dhat.g, dhat.g)), np.diag(1.0 / e))


def mobius(alpha: BlockSymplectic, Z: SiegelPoint) -> SiegelPoint:
    """Generalized Möbius action ``(AZ + B)(CZ + D)^{-1}``.

    Raises
    ------
    SingularCocycleError
        If ``cond(CZ + D) > 1e12``.
    """
    if alpha.g != Z.g:
        raise DimensionError("genus mismatch")
    Zc = Z.Z
    den = alpha.C @ Zc + alpha.D
    num = alpha.A @ Zc + alpha.B
    cond = np.linalg.cond(den)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise SingularCocycleError(f"CZ + D has condition number {cond:.3e}")
    # W = num @ den^{-1}  <=>  den^T W^T = num^T
    lu = sla.lu_factor(den.T)
    W = sla.lu_solve(lu, num.T).T
    W = _sym(W)
    return SiegelPoint(W.real, W.imag)


def cocycle(alpha: BlockSymplectic, Z: SiegelPoint) -> complex:
    """``det(CZ + D)``."""
    return complex(np.linalg.det(alpha.C @ Z.Z + alpha.D))


def height_raw(Z: SiegelPoint) -> float:
    """``det Im Z``."""
    return float(np.linalg.det(Z.Y))


def iwasawa(Z: SiegelPoint) -> IwasawaCoordinates:
    """Factor ``Y = W^T diag(D) W`` reading Y from the top-left.

    >>> iwasawa(SiegelPoint([[0, 0], [0, 0]], [[2, 1], [1, 1]])).D
    array([2. , 0.5])
    """
    Y = Z.Y
    g = Z.g
    W = np.eye(g)
    D = np.zeros(g)
    for i in range(g):
        D[i] = Y[i, i] - np.sum(D[:i] * W[:i, i] ** 2)
        if D[i] <= 0:
            raise DomainError("Y is not positive definite")
        for j in range(i + 1, g):
            W[i, j] = (Y[i, j] - np.sum(D[:i] * W[:i, i] * W[:i, j])) / D[i]
    return IwasawaCoordinates(Z.X.copy(), W, D)


def path_length(path: Sequence[SiegelPoint], max_increment: float = 0.5) -> float:
    """Riemannian length of a sampled curve.

    Uses the midpoint rule on ``ds^2 = tr(dZ Y^{-1} dZbar Y^{-1})``.  For g = 1
    this is ``|dz| / y``, the standard hyperbolic metric, so the segment from
    ``i`` to ``i e`` has length 1.

    Raises
    ------
    RefinementRequired
        If any step increment is ``>= max_increment``.
    """
    pts = list(path)
    if len(pts) < 2:
        raise DomainError("a path needs at least two samples")
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        dZ = b.Z - a.Z
        Ym = 0.5 * (a.Y + b.Y)
        Yi = np.linalg.inv(Ym)
        ds2 = np.trace(dZ @ Yi @ dZ.conj() @ Yi).real
        ds = float(np.sqrt(max(ds2, 0.0)))
        if ds >= max_increment:
            raise RefinementRequired(f"step increment {ds:.3f} >= {max_increment}")
        total += ds
    return total


def random_symplectic(g: int, rng: np.random.Generator, scale: float = 1.0) -> BlockSymplectic:
    """Product of random lower/upper unipotents and a diagonal, well conditioned."""
    def sym(n):
        S = rng.normal(scale=scale, size=(n, n))
        return _sym(S)

    I, O = np.eye(g), np.zeros((g, g))
    L = np.block([[I, O], [sym(g), I]])
    U = np.block([[I, sym(g)], [O, I]])
    G = np.eye(g) + 0.3 * scale * rng.normal(size=(g, g))
    Dg = np.block([[G, O], [O, np.linalg.inv(G).T]])
    return BlockSymplectic.from_matrix(L @ Dg @ U)


def random_siegel(g: int, rng: np.random.Generator, spread: float = 1.0) -> SiegelPoint:
    X = _sym(rng.normal(scale=spread, size=(g, g)))
    R = rng.normal(size=(g, g))
    Y = R @ R.T / g + 0.2 * np.eye(g)
    return SiegelPoint(X, Y)


def dumps_point(Z: SiegelPoint) -> str:
    return json.dumps(Z.to_json())


def loads_point(s: str) -> SiegelPoint:
    return SiegelPoint.from_json(json.loads(s))
