"""Exact finite-grid covariance of cubic-variation sums, and lattice diagnostics.

Everything here is deterministic arithmetic on Gaussian moments; nothing is
sampled.  The driving process is fractional Brownian motion with Hurst
parameter 1/6, fixed throughout: the cube in the variation sums and the
exponent 1/3 = 2H in the covariances are tied to that value and none of the
constants generalize.

The exact cross-covariance of the two variation sums on grids 1/a and 1/b is

    cov = sum_{i=1..floor(a t)} sum_{j=1..floor(b t)} E[X_i^3 Y_j^3]

with X_i, Y_j the respective fBm increments, expanded with the Wick/Isserlis
rule E[X^3 Y^3] = 6 c^3 + 9 v w c for jointly Gaussian centered pairs with
variances v, w and covariance c.  The double loop is evaluated directly in
row-major blocks (desk scale, fully auditable); there is no fast path.

Lattice diagnostics for the averaging analysis: the Riemann average of one
kernel term along the orbit {j * L_n} (fractional parts reduced in exact
rational arithmetic), and the geometric closed form of the exponential sums
sum_j exp(2 pi i k j L_n) that control the orbit's equidistribution.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .covariance_density import CovarianceDensity
from .kernels import kernel_term
from .quadrature import adaptive_simpson

_THIRD = 1.0 / 3.0

# row-block size cap for the pair sums (elements per temporary)
_BLOCK_BUDGET = 1 << 22


class InvalidCovariance(Exception):
    """Covariance violating |c| <= sqrt(v1*v2)."""


class DegenerateWindow(Exception):
    """No whole increment fits in [0, t] on one of the grids."""


def fbm_cov(s, t):
    """Covariance (1/2)(s^(1/3) + t^(1/3) - |t-s|^(1/3)); broadcasts over arrays."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = 0.5 * (s**_THIRD + t**_THIRD - np.abs(t - s) ** _THIRD)
    return out if out.ndim else float(out)


def gaussian_cubic_moment(c: float, v1: float, v2: float) -> float:
    """E[X^3 Y^3] = 6 c^3 + 9 v1 v2 c for centered jointly Gaussian (X, Y).

    c is the covariance, v1 and v2 the variances; |c| <= sqrt(v1*v2) is
    required (tiny relative slack absorbs roundoff at |c| = sqrt(v1*v2)).
    """
    if not (v1 > 0 and v2 > 0):
        raise InvalidCovariance(f"variances must be positive, got {v1}, {v2}")
    if abs(c) > math.sqrt(v1 * v2) * (1.0 + 1e-12):
        raise InvalidCovariance(f"|c|={abs(c)} exceeds sqrt(v1*v2)={math.sqrt(v1 * v2)}")
    return 6.0 * c**3 + 9.0 * v1 * v2 * c


@dataclass(frozen=True)
class CovarianceReport:
    """Exact covariance of the variation-sum pair at time t, with diagnostics."""

    a: int
    b: int
    t: float
    cov: float
    var_a: float
    var_b: float
    corr: float
    predicted: float | None  # integral of the regime density over [0, t]
    gap: float | None

    def __post_init__(self):
        if abs(self.corr) > 1.0 + 1e-12:
            raise InvalidCovariance(f"correlation {self.corr} outside [-1, 1]")


def _pair_sum(a: int, b: int, t: float) -> float:
    """Double sum of increment cubic moments over the two grids, row-blocked."""
    na, nb = int(math.floor(a * t)), int(math.floor(b * t))
    grid_a = np.arange(na + 1, dtype=float) / a
    grid_b = np.arange(nb + 1, dtype=float) / b
    v = a ** (-_THIRD)
    w = b ** (-_THIRD)
    bound = math.sqrt(v * w) * (1.0 + 1e-12)
    block = max(1, _BLOCK_BUDGET // (nb + 1))
    total = 0.0
    for lo in range(1, na + 1, block):
        hi = min(lo + block - 1, na)
        s1 = grid_a[lo : hi + 1, None]
        s0 = grid_a[lo - 1 : hi, None]
        t1 = grid_b[None, 1:]
        t0 = grid_b[None, : nb]
        c = fbm_cov(s1, t1) - fbm_cov(s1, t0) - fbm_cov(s0, t1) + fbm_cov(s0, t0)
        peak = float(np.max(np.abs(c)))
        if peak > bound:
            raise InvalidCovariance(
                f"increment covariance {peak} exceeds Cauchy-Schwarz bound {bound}"
            )
        total += float(np.sum(6.0 * c**3 + 9.0 * v * w * c))
    return total


def covariance_report(
    a: int, b: int, t: float, density: CovarianceDensity | None = None
) -> CovarianceReport:
    """Exact covariance report for grids a and b at time t.

    When a density is supplied, `predicted` holds its integral over [0, t]
    and `gap` the absolute difference to the exact covariance.
    """
    if a < 1 or b < 1:
        raise ValueError("grid sizes must be positive integers")
    if math.floor(a * t) < 1 or math.floor(b * t) < 1:
        raise DegenerateWindow(f"no whole increment on grid 1/{max(a, b)} before t={t}")
    cov = _pair_sum(a, b, t)
    var_a = _pair_sum(a, a, t) if a != b else None
    var_b = _pair_sum(b, b, t) if a != b else None
    if a == b:
        var_a = var_b = cov
    corr = cov / math.sqrt(var_a * var_b)
    predicted = gap = None
    if density is not None:
        predicted = density.integral(t)
        gap = abs(cov - predicted)
    return CovarianceReport(
        a=a, b=b, t=t, cov=cov, var_a=var_a, var_b=var_b, corr=corr,
        predicted=predicted, gap=gap,
    )


def _orbit_fractions(count: int, ratio: Fraction) -> np.ndarray:
    """Fractional parts {j * ratio} for j = 1..count, reduced exactly."""
    p, q = ratio.numerator, ratio.denominator
    if p * count <= 2**62:
        j = np.arange(1, count + 1, dtype=np.int64)
        rem = (j * p) % q
        return rem.astype(float) / q
    return np.array([((j * p) % q) / q for j in range(1, count + 1)], dtype=float)


def orbit_average(m: int, a_n: int, L_n: Fraction, t: float, L: float) -> float:
    """Average of kernel term m (for limit ratio L) along the orbit of L_n.

    Returns (1/a_n) * sum_{j=1..floor(a_n t)} term(m, L, {j L_n}); the
    fractional parts come from exact rational arithmetic before the single
    floating-point kernel evaluation, since the orbit is precisely where
    naive floating fractional parts of large j*L_n lose all precision.
    """
    if a_n < 1:
        raise ValueError("a_n must be a positive integer")
    count = int(math.floor(a_n * t))
    if count < 1:
        return 0.0
    fracs = _orbit_fractions(count, L_n)
    return float(np.sum(kernel_term(m, L, fracs))) / a_n


def weyl_sum(k: int, a_n: int, L_n: Fraction, t: float) -> complex:
    """sum_{j=1..floor(a_n t)} exp(2 pi i k j L_n) in closed geometric form.

    Returns exactly floor(a_n t) when k*L_n is an integer.  The phase angles
    are reduced modulo the denominator of L_n in exact integer arithmetic,
    so the closed form stays accurate for arbitrarily large counts.
    """
    count = int(math.floor(a_n * t))
    if count < 1:
        return complex(0.0)
    p, q = L_n.numerator, L_n.denominator
    if (k * p) % q == 0:
        return complex(count)
    alpha = cmath.exp(2j * math.pi * ((k * p) % q) / q)
    alpha_pow = cmath.exp(2j * math.pi * ((k * p * count) % q) / q)
    return alpha * (1.0 - alpha_pow) / (1.0 - alpha)


def _term_cusps(m: int, L: float, a: float, b: float) -> list[float]:
    pts = [m - 1.0, float(m), m + L - 1.0, m + L]
    return sorted(p for p in set(pts) if a < p < b)


def integrate_kernel_term(m: int, L: float, a: float, b: float, tol: float) -> float:
    """Integral of the single kernel term m over [a, b], cusp-aware."""
    if a == b:
        return 0.0
    return adaptive_simpson(
        lambda x: kernel_term(m, L, x), a, b, tol, breakpoints=_term_cusps(m, L, a, b)
    )


def fourier_coefficient(m: int, L: float, k: int, tol: float) -> complex:
    """Fourier coefficient c_k = integral_0^1 term(m, L, y) exp(-2 pi i k y) dy.

    |c_k| <= 8 always, since the term itself is bounded by 8.
    """
    cusps = _term_cusps(m, L, 0.0, 1.0)
    re = adaptive_simpson(
        lambda y: kernel_term(m, L, y) * math.cos(2.0 * math.pi * k * y),
        0.0, 1.0, tol / 2.0, breakpoints=cusps,
    )
    im = adaptive_simpson(
        lambda y: -kernel_term(m, L, y) * math.sin(2.0 * math.pi * k * y),
        0.0, 1.0, tol / 2.0, breakpoints=cusps,
    )
    return complex(re, im)


@dataclass(frozen=True)
class WeylDiagnostic:
    """Fourier reconstruction of a lattice-orbit average, order by order.

    coefficients[j] is c_k for k = j - order; sums[j] the matching
    exponential sum; partial[j] the reconstructed average through |k| <= j,
    which should approach `direct`, the exact orbit average, as j grows.
    """

    order: int
    coefficients: np.ndarray
    sums: np.ndarray
    partial: np.ndarray
    direct: float


def weyl_diagnostic(
    m: int, L: float, a_n: int, L_n: Fraction, t: float, order: int, tol: float = 1e-9
) -> WeylDiagnostic:
    """Build the equidistribution diagnostic for one kernel term and one grid."""
    ks = np.arange(-order, order + 1)
    coeffs = np.array([fourier_coefficient(m, L, int(k), tol) for k in ks])
    sums = np.array([weyl_sum(int(k), a_n, L_n, t) for k in ks])
    partial = np.empty(order + 1)
    for j in range(order + 1):
        window = np.abs(ks) <= j
        partial[j] = float(np.sum(coeffs[window] * sums[window]).real) / a_n
    direct = orbit_average(m, a_n, L_n, t, L)
    return WeylDiagnostic(
        order=order, coefficients=coeffs, sums=sums, partial=partial, direct=direct
    )
