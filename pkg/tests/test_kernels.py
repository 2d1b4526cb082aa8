"""Kernel series: single terms, lattice sums, the variance constant."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubicvar.kernels import (
    PROBE_GRID,
    KernelSum,
    NonConvergence,
    RatioLimit,
    choose_truncation,
    kernel_term,
    variance_rate,
    variance_rate_detail,
    variance_rate_partial,
)

# established by the doubling rule at tol=1e-10 and cross-checked against a
# direct order-8192 partial sum below; pinned as the repository reference
KAPPA2_REF = 5.391164368227805


def test_term_all_unit_bases():
    # (|1| + |1| - 0 - 0)^3
    assert kernel_term(0, 1.0, 0.0) == 8.0


def test_term_ratio_two_at_zero():
    # (1 + 2^(1/3) - 0 - 1)^3 = 2
    assert kernel_term(0, 2.0, 0.0) == pytest.approx(2.0, abs=1e-12)


def test_term_far_shift_bounded():
    value = kernel_term(7, 1.5, 0.3)
    direct = (
        abs(0.3 - 7 + 1) ** (1 / 3)
        + abs(0.3 - 7 - 1.5) ** (1 / 3)
        - abs(0.3 - 7) ** (1 / 3)
        - abs(0.3 - 7 + 1 - 1.5) ** (1 / 3)
    ) ** 3
    assert value == pytest.approx(direct, rel=1e-15)
    assert abs(value) <= 8.0


@given(
    m=st.integers(min_value=-10**6, max_value=10**6),
    L=st.floats(min_value=1e-3, max_value=1e3),
    x=st.floats(min_value=-100.0, max_value=100.0),
)
def test_term_uniform_bound(m, L, x):
    assert abs(kernel_term(m, L, x)) <= 8.0


@given(
    m=st.integers(min_value=-50, max_value=50),
    j=st.integers(min_value=-3 * 1024, max_value=3 * 1024),
    eta=st.integers(min_value=1, max_value=2),
)
def test_term_index_shift_dyadic(m, j, eta):
    # reflection x -> -x about the lattice point eta*L maps term m to term
    # -m+1+p at the mirrored point (q-eta+1)*L + x; with dyadic L and x all
    # arguments are exact, so floating error is pure evaluation roundoff
    p, q = 3, 2
    L = p / q
    x = j / 1024.0
    eta_ref = q - eta + 1
    lhs = kernel_term(m, L, eta * L - x)
    rhs = kernel_term(-m + 1 + p, L, eta_ref * L + x)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@pytest.mark.parametrize("p,q", [(5, 3), (7, 4), (1, 1)])
@pytest.mark.parametrize("x", [0.2357, 0.81, 1.49])
def test_term_index_shift_generic(p, q, x):
    # generic points sit far from the cusps, where a one-ulp argument shift
    # cannot blow up through the cube root
    L = p / q
    for m in (-3, 0, 2, 9):
        for eta in range(1, q + 1):
            lhs = kernel_term(m, L, eta * L - x)
            rhs = kernel_term(-m + 1 + p, L, (q - eta + 1) * L + x)
            assert lhs == pytest.approx(rhs, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    j=st.integers(min_value=-5 * 2048, max_value=5 * 2048),
    L=st.floats(min_value=0.2, max_value=4.0),
)
def test_lattice_sum_periodic(j, L):
    # dyadic x so that x + 1 is exact: near the cusps a one-ulp shift of the
    # argument already moves the value by ~ulp^(1/3), far above tol
    x = j / 2048.0
    kernel = KernelSum.for_ratio(L, 1e-8)
    assert kernel(x + 1.0) == pytest.approx(kernel(x), abs=2e-8)


def test_lattice_sum_period_example():
    kernel = KernelSum.for_ratio(RatioLimit.from_rational(3, 2), 1e-8)
    assert abs(kernel(0.37) - kernel(1.37)) <= 2e-8


def test_lattice_reflection_example():
    # ratio 3/2, eta = 1: f(1.5 - 0.2) = f((2-1+1)*1.5 + 0.2)
    kernel = KernelSum.for_ratio(RatioLimit.from_rational(3, 2), 1e-8)
    assert abs(kernel(1.3) - kernel(3.2)) <= 2e-8


def test_lattice_sum_at_one_matches_constant():
    # the L=1 lattice sum at x=0 is term for term 4/3 of the constant's series
    kernel = KernelSum.for_ratio(1.0, 1e-9)
    assert kernel(0.0) * 0.75 == pytest.approx(variance_rate(1e-9), abs=4e-9)


def test_array_and_scalar_evaluation_agree():
    kernel = KernelSum.for_ratio(1.5, 1e-8)
    xs = np.array([0.0, 0.25, 0.8, 3.7])
    vals = kernel(xs)
    assert vals.shape == (4,)
    for x, v in zip(xs, vals):
        assert kernel(float(x)) == v


def test_evaluation_is_deterministic():
    kernel = KernelSum.for_ratio(1.5, 1e-10)
    assert kernel(0.123456) == kernel(0.123456)


def test_variance_partial_center_term():
    assert variance_rate_partial(0) == 6.0


def test_variance_rate_reference_value():
    value, order = variance_rate_detail(1e-10)
    assert value == pytest.approx(KAPPA2_REF, abs=1e-9)
    assert value > 0
    # independent high-order partial sum as oracle
    assert abs(value - variance_rate_partial(8192)) < 1e-10
    assert order >= 128


@pytest.mark.parametrize("tol", [1e-6, 1e-8, 1e-10])
def test_variance_rate_tolerance_halving(tol):
    assert abs(variance_rate(tol) - variance_rate(tol / 2.0)) < tol


def test_truncation_small_for_loose_tol():
    assert choose_truncation(1.0, 1e-6) <= 1024


def test_truncation_monotone_in_tol():
    assert choose_truncation(1.5, 1e-10) > choose_truncation(1.5, 1e-6)


def test_truncation_finite_for_irrational_ratio():
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    M = choose_truncation(golden, 1e-8)
    assert 64 <= M <= 2**20


def test_doubling_tail_decay():
    # the probe-grid doubling increments shrink monotonically
    M = 64
    L = 1.5

    def level(order):
        return KernelSum(RatioLimit.from_float(L), order, 1.0)(PROBE_GRID)

    d1 = np.max(np.abs(level(2 * M) - level(M)))
    d2 = np.max(np.abs(level(4 * M) - level(2 * M)))
    assert d2 < d1


def test_nonconvergence_at_cap(monkeypatch):
    import cubicvar.kernels as kernels

    monkeypatch.setattr(kernels, "TRUNCATION_CAP", 256)
    with pytest.raises(NonConvergence):
        choose_truncation(1.0, 1e-14)
    with pytest.raises(NonConvergence):
        variance_rate(1e-14)


def test_ratio_limit_from_rational_reduces():
    r = RatioLimit.from_rational(6, 4)
    assert r.rational_form == (3, 2)
    assert r.value == 1.5
    assert r.as_fraction().denominator == 2


def test_ratio_limit_rejects_mismatch():
    with pytest.raises(ValueError):
        RatioLimit(value=0.5, rational_form=(1, 3))
    with pytest.raises(ValueError):
        RatioLimit(value=1.5, rational_form=(6, 4))
    with pytest.raises(ValueError):
        RatioLimit(value=-1.0)
    with pytest.raises(ValueError):
        RatioLimit(value=math.inf)


def test_ratio_limit_parse():
    assert RatioLimit.parse("3/2").rational_form == (3, 2)
    assert RatioLimit.parse("1.5").rational_form is None
    assert RatioLimit.parse("1.5").value == 1.5


def test_invalid_construction():
    with pytest.raises(ValueError):
        KernelSum(RatioLimit.from_float(1.0), order=0, tol=1e-8)
    with pytest.raises(ValueError):
        choose_truncation(1.0, 0.0)
    with pytest.raises(ValueError):
        choose_truncation(-1.0, 1e-8)
    with pytest.raises(ValueError):
        variance_rate(-1e-8)
