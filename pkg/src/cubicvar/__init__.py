"""Asymptotic correlation of cubic-variation sums of rough fractional Brownian motion.

Subpackages:

  kernels             the periodic correlation kernel and the variance constant
  quadrature          cusp-aware adaptive Simpson integration
  covariance_density  the limit covariance density rho per regime, and the
                      normalized correlation curve
  sequences           integer-sequence expressions and regime classification
  exact_cov           exact finite-grid Gaussian covariance oracle and
                      lattice/exponential-sum diagnostics
  simulate            seeded Monte Carlo paths and the simulated limit pair
  checks              the verification suite run by `cubicvar verify`
  cli                 command-line front end
"""

from .covariance_density import (
    AveragedRegime,
    CovarianceDensity,
    DegenerateRegime,
    RationalRegime,
    correlation_curve,
    density_averaged,
    density_rational,
    integrate_kernel,
    make_density,
)
from .exact_cov import (
    CovarianceReport,
    covariance_report,
    fbm_cov,
    fourier_coefficient,
    gaussian_cubic_moment,
    orbit_average,
    weyl_diagnostic,
    weyl_sum,
)
from .kernels import (
    KernelSum,
    NonConvergence,
    RatioLimit,
    choose_truncation,
    kernel_term,
    variance_rate,
    variance_rate_detail,
)
from .quadrature import QuadratureDepthExceeded, adaptive_simpson
from .sequences import (
    LimitClass,
    SeqExpr,
    classify,
    parse_seq,
    rho_for,
    verify_integrality_bound,
)
from .simulate import (
    McEstimate,
    PairEnsemble,
    PathEnsemble,
    cubic_variation,
    diffusion_matrix,
    gen_fbm,
    mc_corr,
    replica_generator,
    sim_limit_pair,
)

__version__ = "0.1.0"
