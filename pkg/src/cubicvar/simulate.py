"""Seeded Monte Carlo: rough fBm paths, cubic-variation sums, and the limit pair.

Path generation uses circulant embedding (Davies-Harte): the covariance of
the unit-grid increment sequence,

    gamma(h) = (1/2)(|h+1|^(1/3) + |h-1|^(1/3) - 2|h|^(1/3)),

is embedded in a circulant of twice the length whose FFT eigenvalues are
nonnegative for this process; complex Gaussian spectral amplitudes then give
increments with exactly the target covariance in law.  Increments on the
grid 1/N are the unit-grid sequence scaled by N^(-1/6) (self-similarity with
Hurst parameter 1/6), and paths are their cumulative sums from 0.

Reproducibility contract: replica r draws from a Philox stream keyed by the
master seed with the 256-bit counter pre-advanced to r * 2^128.  Streams
never overlap, replica r's output does not depend on the total replica
count, and reductions run in fixed order, so results are bit-identical for
identical (operation, arguments, seed) on one platform regardless of how
work would be scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance_density import CovarianceDensity

_THIRD = 1.0 / 3.0

EIGENVALUE_FLOOR = -1e-9
DENSE_FALLBACK_MAX = 4096
SIGMA_CLAMP = 1e-12


class InvalidGrid(Exception):
    """Grid, horizon, or replica parameters outside the operation's domain."""


class GridMismatch(Exception):
    """Requested variation grid does not divide the ensemble grid."""


class EmbeddingNotPSD(Exception):
    """Circulant embedding has a genuinely negative eigenvalue and no fallback applies."""


class SigmaNotReal(Exception):
    """|rho(s)| exceeds the variance rate, so the diffusion factor is not real."""


def replica_generator(seed: int, replica: int) -> np.random.Generator:
    """Philox stream for one replica: key = seed, counter = replica * 2^128."""
    return np.random.Generator(np.random.Philox(key=seed, counter=replica << 128))


def fgn_autocovariance(h) -> np.ndarray:
    """Unit-grid increment autocovariance gamma(h); gamma(1) < 0 (rough regime)."""
    h = np.abs(np.asarray(h, dtype=float))
    out = 0.5 * ((h + 1.0) ** _THIRD + np.abs(h - 1.0) ** _THIRD - 2.0 * h**_THIRD)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PathEnsemble:
    """Seeded collection of fBm paths on the grid {0, 1/N, ..., floor(NT)/N}.

    paths[r, j] is replica r's value at time j/N; every path starts at 0 and
    regenerating with the same seed reproduces the array bit for bit.
    """

    grid_size: int
    horizon: float
    replicas: int
    seed: int
    paths: np.ndarray
    provenance: dict

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.paths.shape[1]) / self.grid_size


def _embedding_eigenvalues(n: int) -> np.ndarray:
    gamma = fgn_autocovariance(np.arange(n))
    row = np.concatenate([gamma, [0.0], gamma[:0:-1]])
    return np.fft.fft(row).real


def _spectral_increments(lam_root: np.ndarray, n: int, rng) -> np.ndarray:
    """One unit-variance increment sample via the embedding's spectral synthesis."""
    m = 2 * n
    z = rng.standard_normal(m)
    w = np.empty(m, dtype=complex)
    w[0] = lam_root[0] * z[0]
    w[n] = lam_root[n] * z[1]
    half = lam_root[1:n] / math.sqrt(2.0)
    w[1:n] = half * (z[2 : n + 1] + 1j * z[n + 1 :])
    w[n + 1 :] = np.conj(w[1:n][::-1])
    return (np.fft.fft(w) / math.sqrt(m)).real[:n]


def _dense_root(n: int) -> np.ndarray:
    """Symmetric square root of the increment covariance (fallback generator)."""
    idx = np.arange(n)
    cov = fgn_autocovariance(np.abs(idx[:, None] - idx[None, :]))
    vals, vecs = np.linalg.eigh(cov)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def gen_fbm(N: int, T: float, R: int, seed: int) -> PathEnsemble:
    """Generate R independent fBm paths on grid 1/N over [0, T], deterministically.

    Circulant-embedding eigenvalues in [-1e-9, 0) are rounding artifacts and
    are clamped to zero; anything more negative triggers the dense
    matrix-root fallback (up to 4096 increments) or EmbeddingNotPSD.
    """
    n = int(math.floor(N * T))
    if N < 1 or R < 1 or n < 1:
        raise InvalidGrid(f"need N >= 1, R >= 1 and N*T >= 1, got N={N}, T={T}, R={R}")
    lam = _embedding_eigenvalues(n)
    scale = N ** (-1.0 / 6.0)
    paths = np.zeros((R, n + 1))
    if lam.min() >= EIGENVALUE_FLOOR:
        lam_root = np.sqrt(np.clip(lam, 0.0, None))
        method = "circulant-embedding"
        for r in range(R):
            inc = _spectral_increments(lam_root, n, replica_generator(seed, r)) * scale
            paths[r, 1:] = np.cumsum(inc)
    elif n <= DENSE_FALLBACK_MAX:
        root = _dense_root(n)
        method = "dense-matrix-root"
        for r in range(R):
            z = replica_generator(seed, r).standard_normal(n)
            paths[r, 1:] = np.cumsum((root @ z) * scale)
    else:
        raise EmbeddingNotPSD(
            f"embedding eigenvalue {lam.min()} below floor {EIGENVALUE_FLOOR} "
            f"and {n} increments exceeds the dense fallback limit"
        )
    provenance = {
        "generator": method,
        "hurst": 1.0 / 6.0,
        "increment_scale": scale,
        "min_eigenvalue": float(lam.min()),
    }
    return PathEnsemble(
        grid_size=N, horizon=T, replicas=R, seed=seed, paths=paths, provenance=provenance
    )


def cubic_variation(ensemble: PathEnsemble, n: int, t: float) -> np.ndarray:
    """Per-replica sum of cubed increments on the sub-grid 1/n up to time t.

    n must divide the ensemble grid and t must not exceed its horizon.
    """
    if n < 1 or ensemble.grid_size % n != 0:
        raise GridMismatch(f"{n} does not divide ensemble grid {ensemble.grid_size}")
    if t > ensemble.horizon:
        raise ValueError(f"t={t} exceeds ensemble horizon {ensemble.horizon}")
    stride = ensemble.grid_size // n
    count = int(math.floor(n * t))
    sub = ensemble.paths[:, : count * stride + 1 : stride]
    d = np.diff(sub, axis=1)
    return np.sum(d**3, axis=1)


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo point estimate with its standard error."""

    mean: float
    std_error: float
    replicas: int


def mc_corr(a: int, b: int, t: float, R: int, seed: int) -> McEstimate:
    """Sample correlation of the two variation sums at time t over R replicas.

    Builds one ensemble on the common refinement lcm(a, b) so both sums read
    exact grid points.  The standard error is the first-order delta-method
    value for a correlation estimate, (1 - r^2) / sqrt(R).
    """
    N = math.lcm(a, b)
    if math.floor(a * t) < 1 or math.floor(b * t) < 1:
        raise InvalidGrid(f"grids {a}, {b} have no whole increment before t={t}")
    ensemble = gen_fbm(N, t, R, seed)
    wa = cubic_variation(ensemble, a, t)
    wb = cubic_variation(ensemble, b, t)
    r = float(np.corrcoef(wa, wb)[0, 1]) if a != b else 1.0
    se = (1.0 - r * r) / math.sqrt(R)
    return McEstimate(mean=r, std_error=se, replicas=R)


@dataclass(frozen=True)
class PairEnsemble:
    """Euler paths of the correlated limit pair; paths[r, j, :] at time j*T/steps."""

    steps: int
    horizon: float
    replicas: int
    seed: int
    paths: np.ndarray
    provenance: dict

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * (self.horizon / self.steps)


def diffusion_matrix(density: CovarianceDensity, s: float) -> np.ndarray:
    """2x2 diffusion factor sigma(s) with sigma sigma^T = [[rate, rho], [rho, rate]].

    sigma(s) = sqrt(rate) * [[sqrt(1 - r^2), r], [0, 1]] with
    r = rho(s)/rate.  Raises SigmaNotReal if 1 - r^2 < -1e-12; values within
    the clamp band are rounding noise at |rho| = rate and are set to zero.
    """
    rate = density.variance_rate
    r = density.density(s) / rate
    rem = 1.0 - r * r
    if rem < -SIGMA_CLAMP:
        raise SigmaNotReal(f"|rho({s})| = {abs(r) * rate} exceeds variance rate {rate}")
    root = math.sqrt(rate)
    return np.array([[root * math.sqrt(max(rem, 0.0)), root * r], [0.0, root]])


def sim_limit_pair(
    density: CovarianceDensity, T: float, steps: int, R: int, seed: int
) -> PairEnsemble:
    """Euler scheme for the limit pair: X(s + dt) = X(s) + sigma(s) sqrt(dt) xi.

    sigma is evaluated at left endpoints and the xi are independent standard
    2-vectors, so per-coordinate variances are exact in expectation and the
    cross-covariance matches the left Riemann sum of the density.
    """
    if steps < 1 or R < 1 or not T > 0:
        raise InvalidGrid(f"need steps >= 1, R >= 1, T > 0; got {steps}, {R}, {T}")
    dt = T / steps
    grid = np.arange(steps) * dt
    rate = density.variance_rate
    r = np.array([density.density(s) for s in grid]) / rate
    rem = 1.0 - r * r
    if rem.min() < -SIGMA_CLAMP:
        s_bad = grid[int(np.argmin(rem))]
        raise SigmaNotReal(f"|rho({s_bad})| exceeds variance rate {rate}")
    root = math.sqrt(rate)
    sd = math.sqrt(dt)
    c11 = root * np.sqrt(np.clip(rem, 0.0, None)) * sd
    c12 = root * r * sd
    c22 = root * sd
    paths = np.zeros((R, steps + 1, 2))
    for rep in range(R):
        z = replica_generator(seed, rep).standard_normal((steps, 2))
        paths[rep, 1:, 0] = np.cumsum(c11 * z[:, 0] + c12 * z[:, 1])
        paths[rep, 1:, 1] = np.cumsum(c22 * z[:, 1])
    provenance = {
        "scheme": "euler-left-endpoint",
        "regime": repr(density.regime),
        "variance_rate": rate,
    }
    return PairEnsemble(
        steps=steps, horizon=T, replicas=R, seed=seed, paths=paths, provenance=provenance
    )
