"""Cusp-aware adaptive Simpson quadrature."""

import math

import pytest

from cubicvar.quadrature import (
    QuadratureDepthExceeded,
    adaptive_simpson,
    periodic_cusps,
)


def test_cubic_polynomials_exact():
    # Simpson integrates cubics exactly; the first estimate already settles
    assert adaptive_simpson(lambda x: x**2, 0.0, 1.0, 1e-12) == pytest.approx(1 / 3, abs=1e-14)
    assert adaptive_simpson(lambda x: x**3 - x, -1.0, 2.0, 1e-12) == pytest.approx(
        (2**4 - 1) / 4 - (2**2 - 1) / 2, abs=1e-13
    )


def test_sine():
    assert adaptive_simpson(math.sin, 0.0, math.pi, 1e-10) == pytest.approx(2.0, abs=1e-10)


def test_cube_root_cusp_with_breakpoint():
    # integral of |x - 1/2|^(1/3) over [0, 1] = (3/2) * (1/2)^(4/3)
    exact = 1.5 * 0.5 ** (4 / 3)
    got = adaptive_simpson(
        lambda x: abs(x - 0.5) ** (1 / 3), 0.0, 1.0, 1e-10, breakpoints=[0.5]
    )
    assert got == pytest.approx(exact, abs=1e-9)


def test_interior_cusp_without_breakpoint():
    # global refinement still resolves an unannounced cusp at moderate budgets
    exact = 1.5 * 0.5 ** (4 / 3)
    got = adaptive_simpson(lambda x: abs(x - 0.5) ** (1 / 3), 0.0, 1.0, 1e-6)
    assert got == pytest.approx(exact, abs=1e-6)


def test_budget_accumulates_over_panels():
    # many forced panels still meet the total budget; sin^2(pi x) integrates to 1 over [0, 2]
    got = adaptive_simpson(
        lambda x: math.sin(math.pi * x) ** 2,
        0.0, 2.0, 1e-9, breakpoints=[0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75],
    )
    assert got == pytest.approx(1.0, abs=1e-9)


def test_depth_exceeded():
    with pytest.raises(QuadratureDepthExceeded):
        adaptive_simpson(lambda x: abs(x - 1 / 3) ** (1 / 3), 0.0, 1.0, 1e-17)


def test_empty_interval():
    assert adaptive_simpson(lambda x: 1.0, 2.0, 2.0, 1e-10) == 0.0


def test_invalid_inputs():
    with pytest.raises(ValueError):
        adaptive_simpson(lambda x: 1.0, 1.0, 0.0, 1e-10)
    with pytest.raises(ValueError):
        adaptive_simpson(lambda x: 1.0, 0.0, 1.0, 0.0)


def test_periodic_cusps_half_ratio():
    pts = periodic_cusps(1.5, 0.0, 3.0)
    assert pts == [0.5, 1.0, 1.5, 2.0, 2.5]


def test_periodic_cusps_integer_ratio():
    # ratio 1: both cusp families coincide with the integers
    assert periodic_cusps(1.0, 0.0, 2.0) == [1.0]
    assert periodic_cusps(2.0, 0.5, 2.5) == [1.0, 2.0]


def test_periodic_cusps_excludes_endpoints():
    assert 0.0 not in periodic_cusps(1.0, 0.0, 1.0)
    assert periodic_cusps(1.0, 0.0, 1.0) == []
