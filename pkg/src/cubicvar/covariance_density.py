"""Limit covariance density of paired cubic-variation sums, per regime.

Two grids a_n, b_n with ratio b_n/a_n -> L in (0, inf) produce jointly
Gaussian limits whose cross-covariance over [0, t] is the integral of a
density rho.  The density depends on the regime of the pair:

  * rational L = p/q with bounded drift a_n|L_n - L| -> k < inf:
        rho(t) = (3/(4p)) * sum_{j=1..q} kernel_L(j/q + k*t)
    (constant in t when k = 0);

  * averaged regime (rational L with unbounded drift, or irrational L):
        rho(t) = (3/(4L)) * integral_0^1 kernel_L(x) dx,  constant in t;

  * degenerate ratio limit (0 or inf): rho = 0, the sums decouple.

Both coordinates of the limit pair are Brownian motions with variance
variance_rate * t, so the correlation at time t is

    correlation(t) = integral_0^t rho(s) ds / (variance_rate * t),

always in [-1, 1] because |rho| <= variance_rate pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kernels import KernelSum, RatioLimit, variance_rate
from .quadrature import adaptive_simpson, periodic_cusps


@dataclass(frozen=True)
class RationalRegime:
    """Rational ratio limit p/q (coprime) with finite drift limit k >= 0."""

    p: int
    q: int
    k: float

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be positive integers")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"{self.p}/{self.q} is not in lowest terms")
        if self.k < 0:
            raise ValueError("drift limit k must be nonnegative")


@dataclass(frozen=True)
class AveragedRegime:
    """Unbounded-drift or irrational ratio limit L; density is constant in t."""

    L: float

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError("averaged regime requires finite positive L")


@dataclass(frozen=True)
class DegenerateRegime:
    """Ratio limit 0 or inf; the pair decouples and the density vanishes."""

    limit: float

    def __post_init__(self):
        if self.limit not in (0.0, math.inf):
            raise ValueError("degenerate limit must be 0 or inf")


Regime = RationalRegime | AveragedRegime | DegenerateRegime


def _integrate(kernel: KernelSum, a: float, b: float, tol: float) -> float:
    L = kernel.ratio.value
    return adaptive_simpson(kernel, a, b, tol, breakpoints=periodic_cusps(L, a, b))


def _integrate_periodic(kernel: KernelSum, lo: float, length: float, tol: float) -> float:
    """Integral of the period-1 kernel over [lo, lo + length], folding whole periods.

    Whole periods contribute length-many copies of the unit integral, whose
    budget is shrunk accordingly; only the fractional remainder is integrated
    directly.
    """
    if length <= 0.0:
        return 0.0
    whole = math.floor(length)
    rem = length - whole
    total = 0.0
    if whole >= 1:
        total += whole * _integrate(kernel, 0.0, 1.0, tol / (2.0 * whole))
    if rem > 0.0:
        total += _integrate(kernel, lo, lo + rem, tol / 2.0 if whole >= 1 else tol)
    return total


def integrate_kernel(L: float, a: float, b: float, tol: float) -> float:
    """Integral of the period-1 kernel for ratio L over [a, b], to budget tol.

    Half the budget goes to series truncation (spread over the length), half
    to the cusp-aware adaptive Simpson rule.
    """
    if a > b:
        raise ValueError(f"empty or reversed interval [{a}, {b}]")
    if a == b:
        return 0.0
    series_tol = tol / (2.0 * max(b - a, 1.0))
    kernel = KernelSum.for_ratio(L, series_tol)
    return _integrate(kernel, a, b, tol / 2.0)


def density_rational(p: int, q: int, k: float, t: float, tol: float) -> float:
    """Density value at time t for the rational regime (p, q, k)."""
    regime = RationalRegime(p, q, k)
    kernel = KernelSum.for_ratio(RatioLimit.from_rational(p, q), tol / q)
    return _rational_value(regime, kernel, t)


def _rational_value(regime: RationalRegime, kernel: KernelSum, t: float) -> float:
    acc = 0.0
    for j in range(1, regime.q + 1):
        acc += kernel(j / regime.q + regime.k * t)
    return 3.0 / (4.0 * regime.p) * acc


def density_averaged(L: float, tol: float) -> float:
    """Constant density of the averaged regime: (3/(4L)) * integral_0^1 kernel_L."""
    if not L > 0.0:
        raise ValueError("L must be positive")
    return 3.0 / (4.0 * L) * integrate_kernel(L, 0.0, 1.0, tol * 4.0 * L / 3.0)


@dataclass(frozen=True)
class CovarianceDensity:
    """The density rho for one regime, with the variance constant it normalizes by.

    Carries one pinned variance_rate per instance so density, integral and
    correlation stay internally consistent.  `constant` holds the
    t-independent density value for Averaged and Degenerate regimes.
    All methods are pure; instances may be shared across threads.
    """

    regime: Regime
    variance_rate: float
    kernel: KernelSum | None
    tol: float
    constant: float | None = None

    @property
    def is_constant(self) -> bool:
        if isinstance(self.regime, RationalRegime):
            return self.regime.k == 0.0
        return True

    def density(self, t: float) -> float:
        """rho(t); requires t >= 0."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        if isinstance(self.regime, RationalRegime):
            return _rational_value(self.regime, self.kernel, t)
        return self.constant

    def integral(self, t: float, tol: float | None = None) -> float:
        """integral_0^t rho(s) ds."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0.0 or self.is_constant:
            return self.density(0.0) * t
        tol = self.tol if tol is None else tol
        r = self.regime
        # substitute u = j/q + k*s in each summand: the time integral becomes
        # kernel integrals over [j/q, j/q + k*t], one per j; the budget is
        # scaled by the inverse of the 3/(4pk) prefactor
        budget = tol * (4.0 * r.p * r.k / 3.0) / r.q
        acc = 0.0
        for j in range(1, r.q + 1):
            acc += _integrate_periodic(self.kernel, j / r.q, r.k * t, budget)
        return 3.0 / (4.0 * r.p * r.k) * acc

    def correlation(self, t: float, tol: float | None = None) -> float:
        """Normalized correlation integral_0^t rho / (variance_rate * t), in [-1, 1]."""
        if not t > 0:
            raise ValueError("t must be positive")
        if self.is_constant:
            value = self.density(0.0) / self.variance_rate
        else:
            tol = self.tol if tol is None else tol
            budget = tol * self.variance_rate * t
            value = self.integral(t, tol=budget) / (self.variance_rate * t)
        # |rho| <= variance_rate makes the exact value lie in [-1, 1]; trim
        # quadrature noise only
        return min(1.0, max(-1.0, value))


def correlation_curve(density: CovarianceDensity, t: float, tol: float) -> float:
    """Correlation of the limit pair at time t > 0, to absolute budget tol."""
    return density.correlation(t, tol=tol)


def make_density(regime: Regime, tol: float) -> CovarianceDensity:
    """Build the density object for a regime, pinning variance_rate at this tol."""
    rate = variance_rate(tol)
    if isinstance(regime, RationalRegime):
        kernel = KernelSum.for_ratio(
            RatioLimit.from_rational(regime.p, regime.q), tol / regime.q
        )
        return CovarianceDensity(regime, rate, kernel, tol)
    if isinstance(regime, AveragedRegime):
        kernel = KernelSum.for_ratio(regime.L, tol)
        value = density_averaged(regime.L, tol)
        return CovarianceDensity(regime, rate, kernel, tol, constant=value)
    if isinstance(regime, DegenerateRegime):
        return CovarianceDensity(regime, rate, None, tol, constant=0.0)
    raise TypeError(f"unknown regime {regime!r}")
