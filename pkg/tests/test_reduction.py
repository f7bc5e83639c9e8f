import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from siegel_theta.errors import DomainError, NonTerminationError, WindowError
from siegel_theta.reduction import (
    ClassifierOptions,
    ReductionOptions,
    _generators_g2,
    brute_force_g1,
    brute_force_height,
    classify_diophantine,
    daleth,
    height_flow,
    hgt,
    loglaw_mc,
    reduce_g1,
    reduce_siegel,
)
from siegel_theta.symplectic import (
    BlockSymplectic,
    CartanDirection,
    IntegerSymplectic,
    SiegelPoint,
    cartan_matrix,
    height_raw,
    mobius,
    random_siegel,
    random_symplectic,
)

GOLDEN = "(1+sqrt(5))/2"
LIOUVILLE = "1/10+1/10**2+1/10**6+1/10**24+1/10**120+1/10**720"
FLOW_GRID = np.linspace(0.0, 25.0, 251)


def _pt(z: complex) -> SiegelPoint:
    return SiegelPoint([[z.real]], [[z.imag]])


# --- g = 1 -------------------------------------------------------------------

def test_reduce_g1_examples():
    r = reduce_g1(_pt(1j))
    assert r.z.Z[0, 0] == pytest.approx(1j) and np.array_equal(r.gamma.M, np.eye(2, dtype=int))
    r = reduce_g1(_pt(0.5j))
    assert r.z.Z[0, 0] == pytest.approx(2j) and r.height == pytest.approx(2.0)
    r = reduce_g1(_pt(10.3 + 1j))
    assert r.z.Z[0, 0] == pytest.approx(0.3 + 1j)
    assert r.certified


@settings(max_examples=200)
@given(st.floats(-50, 50), st.floats(1e-4, 5.0))
def test_reduce_g1_fundamental_domain(x, y):
    Z = _pt(complex(x, y))
    r = reduce_g1(Z)
    z = r.z.Z[0, 0]
    assert abs(z.real) <= 0.5 + 1e-12 and abs(z) >= 1 - 1e-12
    assert r.height >= y * (1 - 1e-12)
    moved = mobius(r.gamma.as_block(), Z).Z[0, 0]
    assert abs(moved - z) <= 1e-9 * max(1.0, abs(z))


def test_reduce_siegel_matches_g1(rng):
    zs = rng.uniform(-3, 3, 500) + 1j * rng.uniform(0.01, 2, 500)
    for z in zs:
        a, b = reduce_g1(_pt(z)), reduce_siegel(_pt(z))
        assert np.array_equal(a.gamma.M, b.gamma.M)
        assert a.log_height == b.log_height


def test_reduce_g1_against_brute_force(rng):
    zs = rng.uniform(-2, 2, 50) + 1j * rng.uniform(0.05, 1.5, 50)
    bf = brute_force_g1(zs, 10)
    ours = np.array([reduce_g1(_pt(z)).height for z in zs])
    np.testing.assert_allclose(ours, bf, rtol=1e-9)


# --- general g ---------------------------------------------------------------

@pytest.mark.parametrize("g", [1, 2, 3])
def test_reduce_identity(g):
    r = reduce_siegel(SiegelPoint.i_identity(g))
    assert np.array_equal(r.gamma.M, np.eye(2 * g, dtype=int))
    assert r.height == pytest.approx(1.0) and r.certified


def test_reduce_g2_diagonal():
    Z = SiegelPoint(np.zeros((2, 2)), np.diag([0.1, 0.2]))
    r = reduce_siegel(Z)
    assert r.height >= 50 * (1 - 1e-12)
    assert r.certified
    assert brute_force_height(Z, 4) <= r.height * (1 + 1e-9)


@settings(max_examples=30)
@given(st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_reduce_siegel_monotone_and_consistent(g, seed):
    rng = np.random.default_rng(seed)
    Z = random_siegel(g, rng, spread=2.0)
    Z = SiegelPoint(Z.X, 0.3 * Z.Y)
    r = reduce_siegel(Z)
    assert r.height >= height_raw(Z) * (1 - 1e-12)
    moved = mobius(r.gamma.as_block(), Z).Z
    assert np.abs(moved - r.z.Z).max() <= 1e-9 * max(1.0, np.abs(r.z.Z).max())


def test_reduce_g2_brute_force_random(rng):
    for _ in range(5):
        Z = random_siegel(2, rng, spread=1.0)
        r = reduce_siegel(Z)
        assert brute_force_height(Z, 3) <= r.height * (1 + 1e-9)


def test_non_termination_carries_best():
    Z = SiegelPoint(np.zeros((2, 2)), np.diag([1e-3, 2e-3]))
    with pytest.raises(NonTerminationError) as exc:
        reduce_siegel(Z, ReductionOptions(max_iter=1))
    assert isinstance(exc.value.best, SiegelPoint)


# --- heights -----------------------------------------------------------------

def test_hgt_examples():
    assert hgt(BlockSymplectic.identity(2))[0] == pytest.approx(1.0)
    for t in (0.0, 0.7, 3.0):
        a = cartan_matrix(CartanDirection((1.0,)), -t)
        assert hgt(a)[0] == pytest.approx(math.exp(2 * t), rel=1e-12)


def _random_integer_symplectic(g, rng, length=8):
    if g == 1:
        gens = [np.array([[0, -1], [1, 0]]), np.array([[1, 1], [0, 1]]), np.array([[1, -1], [0, 1]])]
    else:
        gens = _generators_g2()
    M = np.eye(2 * g, dtype=object)
    for i in rng.integers(0, len(gens), size=length):
        M = M.dot(gens[i].astype(object))
    return IntegerSymplectic(M)


@pytest.mark.parametrize("g", [1, 2])
def test_hgt_right_invariance(g, rng):
    for _ in range(50):
        a = random_symplectic(g, rng, 0.5)
        k = _random_integer_symplectic(g, rng).as_block()
        assert hgt(a @ k)[0] == pytest.approx(hgt(a)[0], rel=1e-8)


def test_hgt_left_orthogonal_invariance(rng):
    g = 2
    th = rng.uniform(0, 2 * math.pi)
    P = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    k = BlockSymplectic(P, np.zeros((g, g)), np.zeros((g, g)), P)
    a = random_symplectic(g, rng, 0.5)
    assert hgt(k @ a)[0] == pytest.approx(hgt(a)[0], rel=1e-8)


# --- flows -------------------------------------------------------------------

def test_flow_identity_is_2t():
    grid = np.linspace(0, 10, 21)
    tr = height_flow(BlockSymplectic.identity(1), CartanDirection((1.0,)), grid)
    np.testing.assert_allclose(tr.log_hgt, 2 * grid, atol=1e-12)


def test_flow_rational_slope_two():
    tr = height_flow(BlockSymplectic.lower_triangular([["1/3"]]), CartanDirection((1.0,)), np.linspace(0, 20, 81))
    late = tr.t >= 10
    slope = np.polyfit(tr.t[late], tr.log_hgt[late], 1)[0]
    assert slope == pytest.approx(2.0, abs=1e-6)


@settings(max_examples=10)
@given(st.floats(0.0, 1.0))
def test_flow_trivial_and_floor_bounds(q):
    a = BlockSymplectic.lower_triangular([[q]])
    tr = height_flow(a, CartanDirection((1.0,)), np.linspace(0, 12, 49))
    assert tr.trivial_bound_excess() <= 1e-6
    assert tr.log_hgt.min() >= math.log(math.sqrt(3) / 2) - 1e-12


def test_flow_g2_trivial_bound(rng):
    a = random_symplectic(2, rng, 0.5)
    tr = height_flow(a, CartanDirection((1.0, 0.5)), np.linspace(0, 6, 13))
    assert tr.trivial_bound_excess() <= 1e-6


# --- classification ----------------------------------------------------------

@pytest.fixture(scope="module")
def canonical_flows():
    dh = CartanDirection((1.0,))
    return {
        name: height_flow(BlockSymplectic.lower_triangular([[q]]), dh, FLOW_GRID)
        for name, q in (("golden", GOLDEN), ("third", "1/3"), ("liouville", LIOUVILLE))
    }


def test_classify_canonical(canonical_flows):
    assert classify_diophantine(canonical_flows["golden"], 1).cls == "BoundedType"
    assert classify_diophantine(canonical_flows["third"], 1).cls == "Resonant"
    rep = classify_diophantine(canonical_flows["liouville"], 1)
    assert rep.cls != "Roth"
    assert rep.fitted_slope > 1.5


def test_classify_resonant_by_slope_without_override(canonical_flows):
    rep = classify_diophantine(canonical_flows["third"], 1, ClassifierOptions(rational_cutoff=0))
    assert rep.cls == "Resonant"
    assert rep.fitted_slope == pytest.approx(2.0, abs=1e-6)


def test_classify_subsampling_stable(canonical_flows):
    for tr in canonical_flows.values():
        a = classify_diophantine(tr, 1)
        b = classify_diophantine(tr.subsample(2), 1, ClassifierOptions(min_samples=100))
        assert a.cls == b.cls
        if a.sigma is not None:
            assert abs(a.sigma - b.sigma) < 0.05


def test_classify_window_error():
    tr = height_flow(BlockSymplectic.identity(1), CartanDirection((1.0,)), np.linspace(0, 5, 20))
    with pytest.raises(WindowError):
        classify_diophantine(tr, 1)


def test_report_json(canonical_flows):
    js = classify_diophantine(canonical_flows["golden"], 1).to_json()
    assert set(js) >= {"class", "sigma", "slope", "window", "residual"}


# --- log law -----------------------------------------------------------------

def test_loglaw_identity_outlier():
    s = loglaw_mc(1, CartanDirection((1.0,)), 1, 20.0, seed=0, alphas=[BlockSymplectic.identity(1)])
    assert s.statistics[0] == pytest.approx(2 * 20 / math.log(20), rel=1e-12)


def test_loglaw_deterministic():
    a = loglaw_mc(1, CartanDirection((1.0,)), 4, 12.0, seed=3, threads=1)
    b = loglaw_mc(1, CartanDirection((1.0,)), 4, 12.0, seed=3, threads=3)
    assert a.to_json() == b.to_json()


# --- daleth ------------------------------------------------------------------

def test_daleth():
    assert daleth([1.0, 1.0, 1.0]).value == 8.0
    assert daleth([2.0]).value == 2.5
    assert daleth([0.3, 4.0]).value == pytest.approx(daleth([1 / 0.3, 0.25]).value)
    with pytest.raises(DomainError):
        daleth([0.0])
