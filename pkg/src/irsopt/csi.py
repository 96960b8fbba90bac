"""Statistical CSI error model for the serving link.

The true serving channel equals estimate plus error; errors are drawn i.i.d.
complex Gaussian with per-element variances delta_1^2 (cascaded) and
delta_2^2 (direct).  The bounded error set pairs a Frobenius-norm ball on the
cascaded error with a Euclidean ball on the direct error, each radius
calibrated through a chi-square quantile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from .channel import ChannelRealization, _cn
from .config import SystemConfig


def chi2_cdf(dof: int, x) -> np.ndarray | float:
    """Forward chi-square CDF via the regularized lower incomplete gamma."""
    return gammainc(dof / 2.0, np.asarray(x, dtype=float) / 2.0)


def chi2_inv_cdf(dof: int, p: float) -> float:
    """Quantile x with F_dof(x) = p, solved to |F(x) - p| < 1e-10.

    Monotone root finding: geometric bracketing from a Wilson-Hilferty
    initial guess, bisection to a tight interval, then Newton polish using
    the chi-square density.
    """
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    if not 0.0 <= p < 1.0:
        raise ValueError(f"p must be in [0, 1), got {p}")
    if p == 0.0:
        return 0.0

    # Wilson-Hilferty approximation as the starting point.
    from scipy.special import ndtri
    z = ndtri(p)
    x = dof * (1.0 - 2.0 / (9.0 * dof) + z * np.sqrt(2.0 / (9.0 * dof))) ** 3
    x = max(x, 1e-12)

    lo, hi = x, x
    while chi2_cdf(dof, lo) > p and lo > 1e-300:
        lo /= 2.0
    while chi2_cdf(dof, hi) < p:
        hi *= 2.0

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(dof, mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9 * max(1.0, hi):
            break

    x = 0.5 * (lo + hi)
    half = dof / 2.0
    for _ in range(50):
        f = chi2_cdf(dof, x) - p
        if abs(f) < 1e-12:
            break
        log_pdf = (half - 1.0) * np.log(x) - x / 2.0 - half * np.log(2.0) - gammaln(half)
        step = f / np.exp(log_pdf)
        x_new = x - step
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        if chi2_cdf(dof, x_new) < p:
            lo = x_new
        else:
            hi = x_new
        x = x_new
    return float(x)


@dataclass(frozen=True)
class ErrorSetRadii:
    eps_cascaded: float
    eps_direct: float


def error_set_radii(cfg: SystemConfig) -> ErrorSetRadii:
    """Radii (eps1, eps2) holding each error ball with probability rho.

    eps1 = sqrt(delta_1^2/2 * Finv_{2*N0*Nr}(rho)),
    eps2 = sqrt(delta_2^2/2 * Finv_{2*N0}(rho)), with N0 the serving array
    size and Nr the IRS size.
    """
    n0 = cfg.bs_arrays[0].size
    nr = cfg.num_irs_elements
    rho = cfg.success_prob
    eps1 = np.sqrt(cfg.err_std_cascaded ** 2 / 2.0 * chi2_inv_cdf(2 * n0 * nr, rho))
    eps2 = np.sqrt(cfg.err_std_direct ** 2 / 2.0 * chi2_inv_cdf(2 * n0, rho))
    return ErrorSetRadii(eps_cascaded=float(eps1), eps_direct=float(eps2))


@dataclass
class CsiSample:
    """Estimated serving-link CSI for one slot, with optional true errors.

    est_cascaded is (num_irs, n0) and est_direct is (n0,); batched samplers
    prepend a slot axis.  When errors are present, estimate + error
    reconstructs the true channel exactly.
    """

    est_cascaded: np.ndarray
    est_direct: np.ndarray
    err_cascaded: np.ndarray | None = None
    err_direct: np.ndarray | None = None

    @property
    def has_errors(self) -> bool:
        return self.err_cascaded is not None and self.err_direct is not None


def sample_csi(true_channel: ChannelRealization, cfg: SystemConfig,
               rng: np.random.Generator) -> CsiSample:
    """Estimate/error pair for the serving link of one slot (or a batch).

    Errors are drawn independently of the realization and subtracted, so
    true = estimate + error holds elementwise by construction.
    """
    g_true = true_channel.cascaded[0]
    h_true = true_channel.direct[0]
    dg = cfg.err_std_cascaded * _cn(rng, g_true.shape)
    dh = cfg.err_std_direct * _cn(rng, h_true.shape)
    return CsiSample(
        est_cascaded=g_true - dg,
        est_direct=h_true - dh,
        err_cascaded=dg,
        err_direct=dh,
    )


def in_error_set(sample: CsiSample, radii: ErrorSetRadii) -> bool:
    """True iff ||err_cascaded||_F <= eps1 and ||err_direct||_2 <= eps2."""
    if not sample.has_errors:
        raise ValueError("sample carries no errors")
    return bool(np.linalg.norm(sample.err_cascaded) <= radii.eps_cascaded
                and np.linalg.norm(sample.err_direct) <= radii.eps_direct)
