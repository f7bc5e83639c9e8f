"""Field-valued forms for an isotropic frame in the Hermite model.

A k-form in ``d`` acting directions over ``R^g`` has one :class:`HermiteField`
per increasing index tuple ``J`` of size k from ``0..d-1``; field axes list
the acting directions first.  Direction ``j`` acts as ``|h|^{1/2} d/dx_j``.

Sign conventions: ``d(f dx^I) = sum_j X_j f dx_j ^ dx^I``.  With ``t`` the
first direction, ``I(f dt ^ dx^a) = (int f dt) dx^a`` and
``E(eta dx^a) = phi_1(t) eta dt ^ dx^a``; both anticommute with ``d``.  The
homotopy ``K(f dt ^ dx^a) = P(f - E I f) dx^a`` then satisfies
``1 - E I = d K + K d`` and the primitive of a closed form is
``K w - E d_{-1}(I w)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DimensionError, DomainError, ObstructionError, PreconditionError
from .hermite import (
    HermiteField,
    HermiteTruncation,
    apply_ddx,
    extend_E,
    integral_functional_norm,
    integrate_I,
    primitive_P,
    sobolev_norm,
)

CLOSED_TOL = 1e-9
MOMENT_TOL = 1e-9


def index_sets(d: int, k: int) -> list[tuple]:
    return list(itertools.combinations(range(d), k))


@dataclass(frozen=True, eq=False)
class PForm:
    d: int
    k: int
    components: dict = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.k <= self.d:
            raise DomainError("need 0 <= k <= d")
        keys = index_sets(self.d, self.k)
        comps = {tuple(J): f for J, f in self.components.items()}
        if sorted(comps) != keys:
            raise DimensionError(f"expected components {keys}")
        truncs = {f.trunc for f in comps.values()}
        if len(truncs) != 1:
            raise DimensionError("components must share one truncation")
        t = truncs.pop()
        if t.g < self.d:
            raise DimensionError("acting dimension exceeds g")
        object.__setattr__(self, "components", {J: comps[J] for J in keys})

    @property
    def trunc(self) -> HermiteTruncation:
        return next(iter(self.components.values())).trunc

    @property
    def g(self) -> int:
        return self.trunc.g

    @property
    def loss(self) -> float:
        return math.sqrt(sum(f.loss**2 for f in self.components.values()))

    def __getitem__(self, J) -> HermiteField:
        return self.components[tuple(J)]

    def norm(self, s: float = 0.0) -> float:
        return math.sqrt(sum(sobolev_norm(f, s) ** 2 for f in self.components.values()))

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(f.coeffs), initial=0.0)) for f in self.components.values())

    def __add__(self, other: "PForm") -> "PForm":
        _compatible(self, other)
        return PForm(self.d, self.k, {J: self[J] + other[J] for J in self.components})

    def __sub__(self, other: "PForm") -> "PForm":
        _compatible(self, other)
        return PForm(self.d, self.k, {J: self[J] - other[J] for J in self.components})

    def scale(self, a: complex) -> "PForm":
        return PForm(self.d, self.k, {J: f.scale(a) for J, f in self.components.items()})

    @classmethod
    def zeros(cls, trunc: HermiteTruncation, d: int, k: int) -> "PForm":
        return cls(d, k, {J: HermiteField.zeros(trunc) for J in index_sets(d, k)})

    @classmethod
    def random(cls, trunc: HermiteTruncation, d: int, k: int, rng: np.random.Generator, band: int | None = None) -> "PForm":
        return cls(d, k, {J: HermiteField.random(trunc, rng, band) for J in index_sets(d, k)})

    @classmethod
    def top(cls, f: HermiteField, d: int) -> "PForm":
        return cls(d, d, {tuple(range(d)): f})


def _compatible(a: PForm, b: PForm) -> None:
    if (a.d, a.k) != (b.d, b.k) or a.trunc != b.trunc:
        raise DimensionError("forms are not compatible")


def _wedge_sign(j: int, I: tuple) -> int:
    return -1 if sum(1 for i in I if i < j) % 2 else 1


def d(w: PForm) -> PForm:
    """Exterior derivative along the frame; undefined (DomainError) in top degree."""
    if w.k == w.d:
        raise DomainError("d of a top-degree form leaves the complex")
    out = {J: HermiteField.zeros(w.trunc) for J in index_sets(w.d, w.k + 1)}
    for I, f in w.components.items():
        for j in range(w.d):
            if j in I:
                continue
            J = tuple(sorted(I + (j,)))
            term = apply_ddx(f, j)
            out[J] = out[J] - term if _wedge_sign(j, I) < 0 else out[J] + term
    return PForm(w.d, w.k + 1, out)


def is_top(w: PForm) -> bool:
    return w.k == w.d


# --- I, E, K on forms (first direction) --------------------------------------

def integrate_first(w: PForm) -> PForm:
    """``I(f dt ^ dx^a) = (I_1 f) dx^a``; degree and acting dimension drop by one."""
    if w.k == 0 or w.d == 0:
        raise DomainError("I needs k >= 1")
    out = {}
    for J, f in w.components.items():
        if J[0] == 0:
            out[tuple(i - 1 for i in J[1:])] = integrate_I(f, 1)
    return PForm(w.d - 1, w.k - 1, out)


def extend_first(eta: PForm) -> PForm:
    """``E(eta dx^a) = phi_1(t) eta dt ^ dx^a``."""
    out = {}
    for J, f in eta.components.items():
        out[(0,) + tuple(i + 1 for i in J)] = extend_E(f, 1)
    t = next(iter(out.values())).trunc
    for J in index_sets(eta.d + 1, eta.k + 1):
        out.setdefault(J, HermiteField.zeros(t))
    return PForm(eta.d + 1, eta.k + 1, out)


def homotopy_K(w: PForm) -> PForm:
    """``K(f dt ^ dx^a) = P(f - E_1 I_1 f) dx^a`` and zero on monomials without ``dt``."""
    if w.k < 1:
        raise DomainError("K needs degree >= 1")
    out = {J: HermiteField.zeros(w.trunc) for J in index_sets(w.d, w.k - 1)}
    for J, f in w.components.items():
        if J[0] != 0:
            continue
        r = f - extend_E(integrate_I(f, 1), 1)
        out[J[1:]] = primitive_P(r, 0)
    return PForm(w.d, w.k - 1, out)


def integrate_all(w: PForm) -> HermiteField:
    """``I_{d,g}`` of a top-degree form's single component."""
    if not is_top(w):
        raise DomainError("I_{d,g} acts on top-degree forms")
    return integrate_I(w[tuple(range(w.d))], w.d)


def extend_all(f: HermiteField | complex, d: int, trunc: HermiteTruncation | None = None) -> PForm:
    """``E_{d,g}`` as a top-degree form."""
    return PForm.top(extend_E(f, d, trunc), d)


# --- solver ------------------------------------------------------------------

def d_minus_one(w: PForm, closed_tol: float = CLOSED_TOL, moment_tol: float = MOMENT_TOL) -> PForm:
    """Primitive ``W`` with ``dW = w`` for closed ``w`` (k < d) or moment-free top forms.

    Raises
    ------
    PreconditionError
        If ``|dw|`` exceeds ``closed_tol * max(1, |w|_0)`` for k < d.
    ObstructionError
        If a top-degree form pairs with the invariant currents beyond
        ``moment_tol * max(1, |w|_0)``; ``defect`` holds ``I_{d,g} w``.
    """
    if w.k == 0:
        raise DomainError("0-forms have no primitive")
    scale = max(1.0, w.norm(0.0))
    if w.k < w.d:
        res = d(w).norm(0.0)
        if res > closed_tol * scale:
            raise PreconditionError(f"form is not closed (|dw| = {res:.3e})", defect=res)
    else:
        moment = integrate_all(w)
        m = float(np.max(np.abs(moment.coeffs), initial=0.0))
        if m > moment_tol * scale:
            raise ObstructionError(f"top-degree form has nonzero moment {m:.3e}", defect=moment.coeffs.copy())
    return _dm1(w)


def _dm1(w: PForm) -> PForm:
    Iw = integrate_first(w)
    if w.k == 1:
        # a closed function of the remaining directions vanishes; at d = 1 this is the moment
        return homotopy_K(w)
    eta = _dm1(Iw)
    return homotopy_K(w) - extend_first(eta)


def project_M(w: PForm) -> PForm:
    """Tame projection: ``w - d_{-1} d w`` for k < d, ``w - E I w`` in top degree."""
    if is_top(w):
        return w - extend_all(integrate_all(w), w.d)
    return w - _dm1(d(w))


# --- invariant currents ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InvariantCurrent:
    """The current ``f dx_1 ^ ... ^ dx_d -> sum D I_{d,g} f``.

    ``density`` is a field over the ``g - d`` transverse axes, or None for the
    scalar current when ``d = g``.
    """

    d: int
    density: HermiteField | None = None

    def pair(self, w: PForm) -> complex:
        if not is_top(w) or w.d != self.d:
            raise DimensionError("currents pair with top-degree forms in the same directions")
        v = integrate_all(w)
        if self.density is None:
            if v.g != 0:
                raise DimensionError("scalar current needs d = g")
            return complex(v.coeffs)
        return complex(np.sum(self.density.coeffs * v.coeffs))

    def dual_norm(self, trunc: HermiteTruncation, s: float) -> float:
        return integral_functional_norm(trunc, self.d, s, self.density)


def current_basis(trunc: HermiteTruncation, d: int) -> list[InvariantCurrent]:
    """Spanning set: one current per transverse Hermite mode (the scalar current if d = g)."""
    if d == trunc.g:
        return [InvariantCurrent(d)]
    tt = trunc.with_g(trunc.g - d)
    return [InvariantCurrent(d, HermiteField.basis(tt, idx)) for idx in np.ndindex(*tt.shape)]


# --- tame ratio --------------------------------------------------------------

@dataclass(frozen=True)
class TameStats:
    ratios: tuple
    max_ratio: float
    median_ratio: float
    cutoff: int
    h: float


def closed_sampler(d_: int, k: int, band: int) -> Callable:
    """Sampler of exact forms ``dW`` with W band-limited to ``band`` modes per axis.

    For fixed seed the draws do not depend on the cutoff, so runs at
    different cutoffs see the same forms.
    """

    def sample(trunc: HermiteTruncation, rng: np.random.Generator) -> PForm:
        W = PForm.random(trunc, d_, k - 1, rng, band)
        return d(W)

    return sample


def tame_ratio(
    sampler: Callable,
    s: float,
    k: int,
    d_: int,
    g: int,
    eps: float,
    n_samples: int,
    seed: int,
    cutoff: int = 64,
    h: float = 1.0,
) -> TameStats:
    """Statistics of ``|d_{-1} w|_s / |w|_{s + (k+1)/2 + eps}`` over sampled forms."""
    trunc = HermiteTruncation(g, cutoff, h)
    rngs = [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(n_samples)]
    r = s + (k + 1) / 2 + eps
    out = []
    for rng in rngs:
        w = sampler(trunc, rng)
        if w.k != k or w.d != d_:
            raise DimensionError("sampler produced a form of the wrong shape")
        W = d_minus_one(w)
        out.append(W.norm(s) / w.norm(r))
    arr = np.array(out)
    return TameStats(tuple(float(x) for x in arr), float(arr.max()), float(np.median(arr)), cutoff, h)
