import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from siegel_theta.errors import DomainError, FitError, NoPredictionError
from siegel_theta.reduction import DiophantineReport
from siegel_theta.theta import (
    QuadraticData,
    SumResult,
    dyadic_checkpoints,
    growth_fit,
    naive_theta,
    predicted_exponent,
    pretheta_direct,
    pretheta_sum,
    term_phase,
    theta_sum,
)

seeds = st.integers(0, 2**32 - 1)


def _raw(Q, l, N, **kw):
    return theta_sum(QuadraticData(Q, l), checkpoints=[N], **kw).raw[0]


# --- closed forms ------------------------------------------------------------

def test_trivial_g1():
    r = theta_sum(QuadraticData([[0.0]], [0.0]), checkpoints=[10])
    assert r.raw[0] == 11
    assert r.normalized[0] == 11 / math.sqrt(10)


@pytest.mark.parametrize("g", [1, 2])
def test_trivial_law_all_N(g):
    r = theta_sum(QuadraticData(np.zeros((g, g)), np.zeros(g)), checkpoints=range(1, 101))
    for N, raw, z in r.checkpoints:
        assert raw == (N + 1) ** g
        assert z == (N + 1) ** g / N ** (g / 2)


def test_quarter_phases():
    assert _raw([[0.25]], [0.0], 4) == pytest.approx(3 + 2j, abs=1e-14)
    assert _raw(np.diag([0.25, 0.25]), [0.0, 0.0], 4) == pytest.approx((3 + 2j) ** 2, abs=1e-13)


@pytest.mark.parametrize("N", [7, 100, 1000])
def test_diagonal_factorizes(N):
    a, b = math.sqrt(2), math.sqrt(3) / 7
    lhs = _raw(np.diag([a, b]), [0.1, 0.2], N)
    rhs = _raw([[a]], [0.1], N) * _raw([[b]], [0.2], N)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


# --- recurrence against per-term evaluation ----------------------------------

@pytest.mark.parametrize("N", [1, 10, 1000, 10**4])
@pytest.mark.parametrize("q,l", [(math.sqrt(2), 0.0), ((1 + math.sqrt(5)) / 2, 0.3), (1 / 3, 0.0), (math.pi, -0.77)])
def test_matches_naive_g1(N, q, l):
    a = _raw([[q]], [l], N)
    b = naive_theta(QuadraticData([[q]], [l]), N)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(b))


@settings(max_examples=15)
@given(seeds, st.integers(1, 60))
def test_matches_naive_g2(seed, N):
    rng = np.random.default_rng(seed)
    Q = rng.normal(size=(2, 2))
    data = QuadraticData(Q + Q.T, rng.normal(size=2))
    a = theta_sum(data, checkpoints=[N]).raw[0]
    b = naive_theta(data, N)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(b))


def test_matches_naive_g3():
    data = QuadraticData(np.array([[0.7, 0.1, 0.0], [0.1, math.sqrt(2), 0.3], [0.0, 0.3, 0.2]]), [0.1, 0.0, 0.5])
    assert abs(theta_sum(data, checkpoints=[12]).raw[0] - naive_theta(data, 12)) < 1e-9 * 13**1.5


def test_checkpoints_are_partial_sums():
    data = QuadraticData([[math.sqrt(2)]], [0.0])
    r = theta_sum(data, n_max=5000, n_checkpoints=6)
    assert list(r.N) == dyadic_checkpoints(5000, 6) == [156, 312, 625, 1250, 2500, 5000]
    for N, raw, _ in r.checkpoints:
        assert abs(raw - naive_theta(data, N)) < 1e-9 * N


def test_thread_count_irrelevant():
    data = QuadraticData([[math.sqrt(2), 0.2], [0.2, 0.5]], [0.1, 0.3])
    a = theta_sum(data, n_max=300, threads=1)
    b = theta_sum(data, n_max=300, threads=4)
    assert a.checkpoints == b.checkpoints


# --- phase periodicity -------------------------------------------------------

@settings(max_examples=100)
@given(seeds, st.integers(1, 3))
def test_phase_invariant_under_integer_shifts(seed, g):
    rng = np.random.default_rng(seed)
    # dyadic entries keep every shifted datum exactly representable
    Q = rng.integers(-64, 64, (g, g)) / 64.0
    Q = Q + Q.T
    l = rng.integers(-64, 64, g) / 64.0
    S = rng.integers(-3, 4, (g, g))
    S = np.triu(S, 1) + np.triu(S, 1).T + np.diag(2 * rng.integers(-3, 4, g))
    S = S / 2  # n.(S/2).n is an integer when S has even diagonal
    shift = QuadraticData(Q + S, l + rng.integers(-3, 4, g))
    base = QuadraticData(Q, l)
    for _ in range(10):
        n = rng.integers(-50, 50, g)
        assert term_phase(base, n) == term_phase(shift, n)


def test_term_phase_exact():
    assert term_phase(QuadraticData([[0.25]], [0.5]), [3]) == Fraction(3, 4)


def test_abs_invariant_under_shifts():
    a = _raw([[0.375]], [0.125], 200)
    b = _raw([[1.375]], [-2.875], 200)
    assert abs(a - b) < 1e-10


# --- compensated accumulation --------------------------------------------------

def test_fsum_order_independent(rng):
    n = np.arange(10**6, dtype=float)
    ph = np.exp(2j * math.pi * np.mod(math.sqrt(2) * n * n, 1.0))
    perm = rng.permutation(ph.size)
    fwd = complex(math.fsum(ph.real), math.fsum(ph.imag))
    shuf = complex(math.fsum(ph.real[perm]), math.fsum(ph.imag[perm]))
    assert abs(fwd - shuf) < 1e-9


# --- budget ------------------------------------------------------------------

def test_budget_truncates_and_flags():
    r = theta_sum(QuadraticData(np.eye(2) * 0.3, [0.0, 0.0]), checkpoints=[10, 100], budget=1000)
    assert not r.complete and list(r.N) == [10]
    r = theta_sum(QuadraticData(np.eye(2) * 0.3, [0.0, 0.0]), checkpoints=[100], budget=10)
    assert not r.complete and r.checkpoints == ()


def test_bad_inputs():
    with pytest.raises(DomainError):
        QuadraticData([[0.0, 1.0], [0.0, 0.0]], [0.0, 0.0])
    with pytest.raises(DomainError):
        theta_sum(QuadraticData([[0.1]], [0.0]))
    with pytest.raises(DomainError):
        naive_theta(QuadraticData(np.eye(2), [0.0, 0.0]), 10**4)


# --- pretheta ----------------------------------------------------------------

def test_pretheta_single_mode_is_theta():
    data = QuadraticData([[math.sqrt(2)]], [0.3], t=0.1)
    v = pretheta_sum([(1, 1.0)], data, 50)
    want = cmath.exp(2j * math.pi * 0.2) * _raw([[math.sqrt(2)]], [0.6], 50)
    assert abs(v - want) < 1e-12


@settings(max_examples=20)
@given(seeds, st.integers(1, 2))
def test_pretheta_modewise_matches_direct(seed, g):
    rng = np.random.default_rng(seed)
    Q = rng.normal(size=(g, g))
    data = QuadraticData(Q + Q.T, rng.normal(size=g), t=float(rng.uniform()))
    phi = [(1, complex(*rng.normal(size=2))), (-2, complex(*rng.normal(size=2))), (3, 0.5)]
    N = 100 if g == 1 else 30
    a = pretheta_sum(phi, data, N)
    b = pretheta_direct(phi, data, N)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(b))


def test_pretheta_zero_and_mean():
    data = QuadraticData([[0.3]], [0.0])
    assert pretheta_sum([], data, 10) == 0
    with pytest.raises(DomainError):
        pretheta_sum([(0, 1.0)], data, 10)


# --- growth fits -------------------------------------------------------------

@pytest.mark.parametrize("g,lo,hi", [(1, 1000, 10**5), (2, 60, 6000)])
def test_growth_fit_trivial_slope(g, lo, hi):
    # raw = (N+1)^g exactly; the fitted slope is g N/(N+1) on average
    pts = np.unique(np.geomspace(lo, hi, 12).astype(int))
    r = theta_sum(QuadraticData(np.zeros((g, g)), np.zeros(g)), checkpoints=pts)
    assert growth_fit(r).slope == pytest.approx(g, abs=0.01)


def test_growth_fit_rational_linear():
    r = theta_sum(QuadraticData([[1 / 3]], [0.0]), n_max=10**6, n_checkpoints=20)
    assert growth_fit(r, window=(1000, 10**6)).slope == pytest.approx(1.0, abs=0.02)


def test_growth_fit_errors():
    r = theta_sum(QuadraticData([[0.0]], [0.0]), checkpoints=[10, 20, 40])
    with pytest.raises(FitError):
        growth_fit(r)
    r = theta_sum(QuadraticData([[0.0]], [0.0]), checkpoints=range(100, 109))
    with pytest.raises(FitError):
        growth_fit(r)
    # all-zero sums: e(n/2) over n = 0..2k+1 cancels exactly
    zero = SumResult(1, tuple((N, 0j, 0.0) for N in np.geomspace(10, 10**4, 9).astype(int)))
    with pytest.raises(FitError):
        growth_fit(zero)
    with pytest.raises(DomainError):
        growth_fit(r, statistic="median")


def test_growth_fit_json():
    r = theta_sum(QuadraticData([[0.0]], [0.0]), n_max=10**4, n_checkpoints=12)
    js = growth_fit(r, statistic="direct").to_json()
    assert set(js) >= {"slope", "residual", "window", "statistic"} and js["statistic"] == "direct"


# --- predicted exponents -----------------------------------------------------

def _report(cls, sigma=None):
    return DiophantineReport(cls=cls, sigma=sigma, sup_log_hgt=0.0, fitted_slope=0.0, fit_window=(0.0, 1.0), residual=0.0)


def test_predicted_exponents():
    assert predicted_exponent(_report("BoundedType"), 1).power == 0.0
    p = predicted_exponent(_report("Roth"), 2)
    assert p.power == 0.0 and p.plus
    p = predicted_exponent("LogLaw", 1)
    assert p.power == 0.0 and p.log_power == 1.25
    p = predicted_exponent(_report("DiophantineType", 0.5), 2)
    # g (1 - sigma/2) - g/2
    assert p.power == pytest.approx(2 * (1 - 0.25) - 1)
    assert predicted_exponent(_report("Resonant"), 1).power == 0.5
    with pytest.raises(NoPredictionError):
        predicted_exponent(_report("Unclassified"), 1)
