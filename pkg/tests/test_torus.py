import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from siegel_theta.errors import DimensionError, DomainError, ResonanceError
from siegel_theta.cohomology.suite import run_torus
from siegel_theta.cohomology.torus import (
    TorusForm,
    TorusFrame,
    torus_d,
    torus_diophantine,
    torus_solve,
)

PHI = (1 + math.sqrt(5)) / 2


def test_frame_validation():
    with pytest.raises(DomainError):
        TorusFrame(((1.0, 2.0), (2.0, 4.0)))
    with pytest.raises(DimensionError):
        TorusFrame(((1.0, 2.0), (1.0,)))
    assert TorusFrame(((1, Fraction(1, 2)),)).exact is not None


@pytest.mark.parametrize("n", [(1, 0), (2, -1), (-3, 5)])
def test_single_mode_golden(n):
    fr = TorusFrame(((1.0, PHI),), K=6)
    f = 0.7 - 0.2j
    u = torus_solve(fr, TorusForm.single_mode(fr, 1, n, {(0,): f}))
    idx = tuple(v + fr.K for v in n)
    want = f / (1j * (n[0] + n[1] * PHI))
    assert u.components[()][idx] == pytest.approx(want, rel=1e-15)
    assert np.count_nonzero(u.components[()]) == 1


def test_full_frame_divides_by_norm_squared(rng):
    fr = TorusFrame(((1, 0), (0, 1)), K=4)
    W0 = TorusForm(fr, 1, {J: rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9)) for J in [(0,), (1,)]})
    w = torus_d(W0)
    W = torus_solve(fr, TorusForm(fr, 2, {(0, 1): w.components[(0, 1)] * (np.abs(fr.modes()).sum(1) > 0).reshape(9, 9)}))
    n = fr.modes()
    n2 = np.sum(n * n, axis=1).astype(float)
    c = w.components[(0, 1)].ravel()
    # with e_j = i n_j, d* of c dx1^dx2 is (i n_2 c) dx1 - (i n_1 c) dx2; then divide by |n|^2
    with np.errstate(invalid="ignore", divide="ignore"):
        want0 = np.where(n2 > 0, 1j * n[:, 1] * c / n2, 0)
        want1 = np.where(n2 > 0, -1j * n[:, 0] * c / n2, 0)
    np.testing.assert_allclose(W.components[(0,)].ravel(), want0, atol=1e-15)
    np.testing.assert_allclose(W.components[(1,)].ravel(), want1, atol=1e-15)


def test_resonance_exact_rational():
    fr = TorusFrame(((1, Fraction(1, 2)),), K=3)
    w = TorusForm.single_mode(fr, 1, (1, -2), {(0,): 1.0})
    with pytest.raises(ResonanceError) as exc:
        torus_solve(fr, w)
    assert (1, -2) in exc.value.modes


def test_resonance_float():
    fr = TorusFrame(((1.0, 0.5),), K=3)
    with pytest.raises(ResonanceError):
        torus_solve(fr, TorusForm.single_mode(fr, 1, (-1, 2), {(0,): 1.0}))


def test_zero_mode_rejected():
    fr = TorusFrame(((1.0, PHI),), K=2)
    with pytest.raises(DomainError):
        torus_solve(fr, TorusForm.single_mode(fr, 1, (0, 0), {(0,): 1.0}))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_solve_then_differentiate(seed, k):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(2, 3))
    fr = TorusFrame(tuple(map(tuple, V)), K=3)
    res = run_torus(fr, seed) if k == 2 else None
    if res is not None:
        assert res.residual < 1e-12
    # a random exact 1-form: w = d u with u free of the zero mode
    shape = (7, 7, 7)
    u = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    u[3, 3, 3] = 0
    w = torus_d(TorusForm(fr, 0, {(): u}))
    U = torus_solve(fr, w)
    np.testing.assert_allclose(torus_d(U).stacked(), w.stacked(), atol=1e-12)


def test_diophantine_resonant_line_degenerates():
    fr = TorusFrame(((1.0, 0.0),))
    for K in (4, 16, 64):
        c, mode = torus_diophantine(fr, 1.0, K)
        assert c == 0.0
        assert mode[0] == 0


def test_diophantine_golden_bounded():
    fr = TorusFrame(((1.0, PHI),))
    vals = [torus_diophantine(fr, 1.0, K)[0] for K in (250, 500, 1000, 2000)]
    # Hurwitz: |q phi - p| q stays near 1/sqrt 5 along Fibonacci denominators
    assert min(vals) > 0.2
    assert max(vals) / min(vals) < 1.5


def test_diophantine_monotone_in_tau(rng):
    fr = TorusFrame((tuple(rng.normal(size=3)),))
    vals = [torus_diophantine(fr, tau, 6)[0] for tau in (0.0, 0.5, 1.0, 2.0)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
