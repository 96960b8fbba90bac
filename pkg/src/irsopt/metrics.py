"""Scalar objective ingredients: interference statistics, effective signal
powers for the three designs, per-slot capacity and the ergodic-rate bound.

Everything here is pure and reentrant.  The three g0 variants share the same
effective scalar channel s = (v^H Ghat + hhat^H) w; they differ only in how
estimation error enters:

  ER:  |s|^2 + delta_2^2 + Nr*delta_1^2          (exact conditional mean)
  GP1: (max(|s| - eps1*sqrt(Nr) - eps2, 0))^2    (worst case over the ball)
  GP2: max(|s|^2 + se2 - sqrt(2 ln(1/(1-rho)) (se2^2 + 2 se2 |s|^2)), 0)
       with se2 = Nr*delta_1^2 + delta_2^2       (concentration penalty)

Negative raw values mean the guaranteed SNR is nonpositive; both GP variants
clamp to zero, which corresponds to transmitting at rate zero.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelRealization, ChannelStatistics, sample_realizations
from .config import SystemConfig
from .csi import CsiSample, ErrorSetRadii, sample_csi

UNIT_MODULUS_TOL = 1e-9


def is_unit_modulus(v: np.ndarray, tol: float = UNIT_MODULUS_TOL) -> bool:
    return bool(np.all(np.abs(np.abs(v) - 1.0) <= tol))


def project_unit_modulus(v: np.ndarray) -> np.ndarray:
    """Elementwise v_n / |v_n|; zero entries map to 1."""
    mag = np.abs(v)
    out = np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 1.0)
    return out.astype(complex)


def effective_row(v: np.ndarray, cascaded: np.ndarray, direct: np.ndarray) -> np.ndarray:
    """Row vector v^H G + h^H, batched over any leading axes of G and h."""
    return np.conj(v) @ cascaded + np.conj(direct)


def interference_stat(v: np.ndarray, stats: ChannelStatistics, k: int) -> float:
    """Expected per-slot interference power from BS k under MRT at BS k.

    g_k(v) = ||v^H Gbar_k||^2 / (M_k N_k)
             + alpha_{k,r} alpha_{r,0} M_r N_r (1 - tau_k) + alpha_{k,0}.
    The expectation is exact, not an approximation.
    """
    if k < 1:
        raise ValueError("interference statistic is defined for BS k >= 1")
    g_bar = stats.cascaded_los[k]
    nr, nk = g_bar.shape
    los_term = float(np.sum(np.abs(np.conj(v) @ g_bar) ** 2)) / nk
    nlos_term = stats.alpha_bs_irs[k] * stats.alpha_irs_user * nr * (1.0 - stats.tau[k])
    return los_term + nlos_term + stats.alpha_direct[k]


def denominator(v: np.ndarray, cfg: SystemConfig, stats: ChannelStatistics) -> float:
    """sigma^2 + sum_k P_k g_k(v) over the interferers; always >= sigma^2."""
    total = cfg.noise_power_w
    for k in range(1, len(cfg.bs_arrays)):
        total += cfg.tx_power_w[k] * interference_stat(v, stats, k)
    return total


def sigma_e_sq(cfg: SystemConfig) -> float:
    """Effective scalar-channel error variance Nr*delta_1^2 + delta_2^2."""
    return cfg.err_std_cascaded ** 2 * cfg.num_irs_elements + cfg.err_std_direct ** 2


def _check_unit(w: np.ndarray):
    if abs(np.linalg.norm(w) - 1.0) > 1e-6:
        raise ValueError(f"beamformer must have unit norm, got {np.linalg.norm(w):.6g}")


def signal_er(v: np.ndarray, csi: CsiSample, w: np.ndarray, cfg: SystemConfig) -> float:
    """|s|^2 + delta_2^2 + Nr*delta_1^2 with s the estimated scalar channel."""
    _check_unit(w)
    s = effective_row(v, csi.est_cascaded, csi.est_direct) @ w
    return float(np.abs(s) ** 2 + cfg.err_std_direct ** 2
                 + cfg.num_irs_elements * cfg.err_std_cascaded ** 2)


def signal_gp1(v: np.ndarray, csi: CsiSample, w: np.ndarray, radii: ErrorSetRadii) -> float:
    s = effective_row(v, csi.est_cascaded, csi.est_direct) @ w
    nr = csi.est_cascaded.shape[-2]
    margin = np.abs(s) - radii.eps_cascaded * np.sqrt(nr) - radii.eps_direct
    return float(max(margin, 0.0) ** 2)


def gp2_raw(power: float, se2: float, rho: float) -> float:
    """Bernstein-adjusted effective power before clamping."""
    log_term = 2.0 * np.log(1.0 / (1.0 - rho))
    return power + se2 - np.sqrt(log_term * (se2 ** 2 + 2.0 * se2 * power))


def signal_gp2(v: np.ndarray, csi: CsiSample, w: np.ndarray, cfg: SystemConfig) -> float:
    s = effective_row(v, csi.est_cascaded, csi.est_direct) @ w
    raw = gp2_raw(float(np.abs(s) ** 2), sigma_e_sq(cfg), cfg.success_prob)
    return max(raw, 0.0)


def capacity(v: np.ndarray, w: np.ndarray, true_channel: ChannelRealization,
             denom: float, cfg: SystemConfig) -> float:
    """log2(1 + P0 |(v^H G + h^H) w|^2 / denom) for one slot."""
    s = effective_row(v, true_channel.cascaded[0], true_channel.direct[0]) @ w
    return float(np.log2(1.0 + cfg.tx_power_w[0] * np.abs(s) ** 2 / denom))


def ergodic_rate_upper_bound(v: np.ndarray, cfg: SystemConfig, stats: ChannelStatistics,
                             num_samples: int, rng: np.random.Generator,
                             csi_sampler=None) -> float:
    """Jensen upper bound on the ergodic rate at phase shifts v.

    Averages the ER effective power under the MRT rule over fresh CSI draws
    (or over samples from ``csi_sampler(rng)`` when provided) and plugs the
    mean into log2(1 + P0 E[g0] / denom).
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    if csi_sampler is None:
        real = sample_realizations(stats, cfg, rng, num_samples)
        est = sample_csi(real, cfg, rng)
        rows = effective_row(v, est.est_cascaded, est.est_direct)
    else:
        samples = [csi_sampler(rng) for _ in range(num_samples)]
        rows = np.stack([effective_row(v, s.est_cascaded, s.est_direct) for s in samples])
    mean_power = float(np.mean(np.sum(np.abs(rows) ** 2, axis=-1)))
    mean_g0 = mean_power + sigma_e_sq(cfg)
    denom = denominator(v, cfg, stats)
    return float(np.log2(1.0 + cfg.tx_power_w[0] * mean_g0 / denom))
