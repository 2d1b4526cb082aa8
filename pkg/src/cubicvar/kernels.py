"""Truncated evaluation of the periodic correlation kernel and its variance constant.

For a grid-ratio parameter L > 0 the kernel is a lattice sum over integer
shifts m of cubed second differences of the cube-root map:

    term(m, L, x) = (|x-m+1|^(1/3) + |x-m-L|^(1/3)
                     - |x-m|^(1/3) - |x-m+1-L|^(1/3))^3

    kernel(L, x)  = sum over all integers m of term(m, L, x)

Each term is bounded by 8 in absolute value (each of the two cube-root
differences is at most 1), and for large |m| a term behaves like the cube
of a second difference of u -> u^(1/3), i.e. O(|m|^-5).  The lattice sum
therefore converges uniformly, with a tail beyond |m| <= M of size O(M^-4),
and is periodic in x with period 1.

The variance constant of the limiting Brownian motion of cubic-variation
sums is the same series specialized to L = 1, x = 0:

    variance_rate = (3/4) * sum_m (|m+1|^(1/3) + |m-1|^(1/3) - 2|m|^(1/3))^3

Truncation policy: orders are drawn from the geometric schedule
{64, 128, 256, ...}; an order is accepted once doubling it moves the value
by less than half the requested tolerance (max over a fixed 33-point probe
grid on [0, 1] for the kernel, the single value for the constant).  The
accepted evaluator then runs at twice the tested order.  Orders are capped
at 2^20 so a stall raises NonConvergence instead of looping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

_THIRD = 1.0 / 3.0

TRUNCATION_START = 64
TRUNCATION_CAP = 1 << 20

# 33 equispaced probe points on [0,1], endpoints included; periodicity makes
# [0,1] sufficient and the odd count includes the midpoint.
PROBE_GRID = np.linspace(0.0, 1.0, 33)

# elements per vectorized block (keeps temporaries ~32 MB)
_EVAL_BUDGET = 1 << 22


class NonConvergence(Exception):
    """Raised when the truncation schedule hits its hard cap without stabilizing."""


def kernel_term(m, L, x):
    """Single lattice term of the kernel; broadcasts over numpy inputs.

    All cube roots are taken of absolute values, so no fractional power of
    a negative base is ever formed.  |kernel_term| <= 8 for every m, L > 0
    and real x.
    """
    u = np.asarray(x, dtype=float) - np.asarray(m)
    inner = (
        np.abs(u + 1.0) ** _THIRD
        + np.abs(u - L) ** _THIRD
        - np.abs(u) ** _THIRD
        - np.abs(u + 1.0 - L) ** _THIRD
    )
    out = inner * inner * inner
    return out if out.ndim else float(out)


def _lattice_sum(L: float, x: np.ndarray, order: int) -> np.ndarray:
    """Sum of kernel_term over |m| <= order at each point of 1-D array x."""
    m = np.arange(-order, order + 1, dtype=float)
    block = max(1, _EVAL_BUDGET // m.size)
    out = np.empty_like(x)
    for i in range(0, x.size, block):
        xs = x[i : i + block]
        out[i : i + block] = kernel_term(m[None, :], L, xs[:, None]).sum(axis=1)
    return out


def _band_sum(L: float, x: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Sum of kernel_term over lo < |m| <= hi (the doubling increment)."""
    m = np.concatenate(
        [np.arange(-hi, -lo, dtype=float), np.arange(lo + 1, hi + 1, dtype=float)]
    )
    block = max(1, _EVAL_BUDGET // max(m.size, 1))
    out = np.empty_like(x)
    for i in range(0, x.size, block):
        xs = x[i : i + block]
        out[i : i + block] = kernel_term(m[None, :], L, xs[:, None]).sum(axis=1)
    return out


@dataclass(frozen=True)
class RatioLimit:
    """A positive grid-ratio limit, optionally with its exact rational form.

    When rational_form = (p, q) is present, p and q are coprime positive
    integers and `value` is exactly the correctly rounded double of p/q
    (checked by exact integer division, never by a floating tolerance).
    """

    value: float
    rational_form: tuple[int, int] | None = None

    def __post_init__(self):
        if not (self.value > 0.0 and math.isfinite(self.value)):
            raise ValueError(f"ratio limit must be positive and finite, got {self.value}")
        if self.rational_form is not None:
            p, q = self.rational_form
            if not (isinstance(p, int) and isinstance(q, int) and p > 0 and q > 0):
                raise ValueError(f"rational form must be positive integers, got {p}/{q}")
            if math.gcd(p, q) != 1:
                raise ValueError(f"rational form {p}/{q} is not in lowest terms")
            if p / q != self.value:
                raise ValueError(
                    f"rational form {p}/{q} does not reproduce value {self.value!r}"
                )

    @classmethod
    def from_rational(cls, p: int, q: int) -> "RatioLimit":
        g = math.gcd(p, q)
        p, q = p // g, q // g
        return cls(value=p / q, rational_form=(p, q))

    @classmethod
    def from_float(cls, value: float) -> "RatioLimit":
        return cls(value=float(value), rational_form=None)

    @classmethod
    def parse(cls, text: str) -> "RatioLimit":
        """Parse 'p/q' (exact rational) or a decimal literal (no rational form)."""
        text = text.strip()
        if "/" in text:
            num, _, den = text.partition("/")
            return cls.from_rational(int(num), int(den))
        return cls.from_float(float(text))

    @property
    def is_rational(self) -> bool:
        return self.rational_form is not None

    def as_fraction(self) -> Fraction:
        if self.rational_form is None:
            raise ValueError("ratio limit carries no exact rational form")
        return Fraction(*self.rational_form)


def choose_truncation(L: float, tol: float) -> int:
    """Smallest order M from {64, 128, ...} whose doubling is probe-grid stable.

    Stability means max over the 33-point probe grid of
    |sum at order 2M - sum at order M| < tol/2.  Callers should evaluate at
    order 2M afterwards.  Raises NonConvergence past the 2^20 cap.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if not L > 0.0:
        raise ValueError("L must be positive")
    M = TRUNCATION_START
    while M <= TRUNCATION_CAP:
        step = np.max(np.abs(_band_sum(L, PROBE_GRID, M, 2 * M)))
        if step < tol / 2.0:
            return M
        M *= 2
    raise NonConvergence(
        f"kernel series for L={L} did not stabilize to tol={tol} below order {TRUNCATION_CAP}"
    )


@dataclass(frozen=True)
class KernelSum:
    """Evaluator of the periodic kernel for a fixed ratio, truncated at |m| <= order.

    Evaluation is a pure function of (ratio, order, x): identical inputs give
    bit-identical results.  Instances are immutable and safe to share across
    threads.  Reported values differ from the full lattice sum by at most tol
    when constructed through for_ratio().
    """

    ratio: RatioLimit
    order: int
    tol: float

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("truncation order must be a positive integer")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")

    @classmethod
    def for_ratio(cls, ratio: RatioLimit | float, tol: float) -> "KernelSum":
        """Construct with the doubling rule so the tail error is within tol."""
        if not isinstance(ratio, RatioLimit):
            ratio = RatioLimit.from_float(ratio)
        M = choose_truncation(ratio.value, tol)
        return cls(ratio=ratio, order=2 * M, tol=tol)

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        vals = _lattice_sum(self.ratio.value, xs, self.order)
        return vals if np.ndim(x) else float(vals[0])


def variance_rate_partial(order: int) -> float:
    """Partial sum of the variance-constant series at a fixed truncation order."""
    m = np.arange(-order, order + 1, dtype=float)
    d2 = np.abs(m + 1.0) ** _THIRD + np.abs(m - 1.0) ** _THIRD - 2.0 * np.abs(m) ** _THIRD
    return 0.75 * float(np.sum(d2 * d2 * d2))


def variance_rate_detail(tol: float) -> tuple[float, int]:
    """Variance constant of the limiting Brownian motion plus the order used.

    Computes (3/4) * sum over |m| <= order of
    (|m+1|^(1/3) + |m-1|^(1/3) - 2|m|^(1/3))^3 with the doubling rule; the
    per-term decay is O(|m|^-5) so the tail vanishes like order^-4.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    M = TRUNCATION_START
    prev = variance_rate_partial(M)
    while M <= TRUNCATION_CAP:
        cur = variance_rate_partial(2 * M)
        if abs(cur - prev) < tol / 2.0:
            return cur, 2 * M
        prev = cur
        M *= 2
    raise NonConvergence(
        f"variance constant series did not stabilize to tol={tol} below order {TRUNCATION_CAP}"
    )


def variance_rate(tol: float) -> float:
    """The constant kappa^2 > 0 such that cubic-variation sums have variance kappa^2 * t."""
    value, _ = variance_rate_detail(tol)
    return value
