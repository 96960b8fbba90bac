"""Channel statistics and per-slot realizations.

Vectorization convention, fixed repo-wide: URA element (m, n) maps to flat
index (m-1)*cols + (n-1), so the column index varies fastest.  Steering
vectors, the IRS phase vector and every cascaded-channel row all use this
same ordering; the steering tests assert it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import AnglePair, SystemConfig, UraGeometry


def steering_phase(geom: UraGeometry, ang: AnglePair, m: int, n: int) -> float:
    """Phase offset 2*pi*(d/lambda)*sin(el)*((m-1)cos(az) + (n-1)sin(az))."""
    if not (1 <= m <= geom.rows and 1 <= n <= geom.cols):
        raise ValueError(f"element index ({m},{n}) outside {geom.rows}x{geom.cols} array")
    return (2.0 * np.pi * geom.spacing_over_wavelength * np.sin(ang.elevation)
            * ((m - 1) * np.cos(ang.azimuth) + (n - 1) * np.sin(ang.azimuth)))


def steering_vector(geom: UraGeometry, ang: AnglePair) -> np.ndarray:
    """Flattened URA response, shape (rows*cols,), unit-modulus entries."""
    m = np.arange(geom.rows)[:, None]
    n = np.arange(geom.cols)[None, :]
    phase = (2.0 * np.pi * geom.spacing_over_wavelength * np.sin(ang.elevation)
             * (m * np.cos(ang.azimuth) + n * np.sin(ang.azimuth)))
    return np.exp(1j * phase).reshape(-1)


@dataclass(frozen=True)
class ChannelStatistics:
    """Deterministic channel ingredients shared by all slots.

    ``los_bs_irs[k]`` is the normalized LoS matrix of the BS k -> IRS link
    (num_irs x bs_k size), ``los_irs_user`` the normalized IRS -> user
    steering row, and ``cascaded_los[k]`` the scaled rank-1 LoS component of
    the cascaded channel including the sqrt(alpha_bs_irs*alpha_irs_user*tau)
    factor.  Safe to share across threads; everything is read-only.
    """

    los_bs_irs: tuple[np.ndarray, ...]
    los_irs_user: np.ndarray
    cascaded_los: tuple[np.ndarray, ...]
    tau: tuple[float, ...]
    alpha_direct: tuple[float, ...]
    alpha_bs_irs: tuple[float, ...]
    alpha_irs_user: float

    def __post_init__(self):
        for arr in (*self.los_bs_irs, self.los_irs_user, *self.cascaded_los):
            arr.setflags(write=False)


def build_statistics(cfg: SystemConfig) -> ChannelStatistics:
    """LoS matrices, cascaded LoS components and Rician mix factors."""
    h_bar = steering_vector(cfg.irs_array, cfg.dep_irs_user)  # row h^H_{r,0}
    los_bs_irs = []
    cascaded = []
    taus = []
    for k, geom in enumerate(cfg.bs_arrays):
        a_irs = steering_vector(cfg.irs_array, cfg.arr_bs_irs[k])
        a_bs = steering_vector(geom, cfg.dep_bs_irs[k])
        h_kr = np.conj(a_irs)[:, None] * a_bs[None, :]
        if cfg.los_only:
            tau = 1.0
        else:
            kr, ku = cfg.rician_bs_irs[k], cfg.rician_irs_user
            tau = (kr * ku) / ((kr + 1.0) * (ku + 1.0))
        scale = np.sqrt(cfg.alpha_bs_irs[k] * cfg.alpha_irs_user * tau)
        los_bs_irs.append(h_kr)
        cascaded.append(scale * (h_bar[:, None] * h_kr))
        taus.append(tau)
    return ChannelStatistics(
        los_bs_irs=tuple(los_bs_irs),
        los_irs_user=h_bar,
        cascaded_los=tuple(cascaded),
        tau=tuple(taus),
        alpha_direct=cfg.alpha_direct,
        alpha_bs_irs=cfg.alpha_bs_irs,
        alpha_irs_user=cfg.alpha_irs_user,
    )


@dataclass
class ChannelRealization:
    """One slot of random channels.

    cascaded[k]:        (num_irs, bs_k) matrix between BS k and user 0
    direct[k]:          (bs_k,) direct BS k -> user 0 vector
    interferer_self[k]: (bs_k,) BS k -> own user vector, k >= 1 only
    """

    cascaded: list[np.ndarray]
    direct: list[np.ndarray]
    interferer_self: list[np.ndarray]


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian CN(0, 1), elementwise."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _mix(los: np.ndarray, nlos: np.ndarray, rician: float, los_only: bool) -> np.ndarray:
    if los_only:
        return los.astype(complex)
    kfac = rician
    return np.sqrt(kfac / (kfac + 1.0)) * los + np.sqrt(1.0 / (kfac + 1.0)) * nlos


def sample_realizations(stats: ChannelStatistics, cfg: SystemConfig,
                        rng: np.random.Generator, num: int) -> ChannelRealization:
    """Draw ``num`` slots at once; every array gains a leading slot axis.

    Draw order is fixed per BS (direct, BS-IRS, IRS-user, self) so that
    identical seeds give bit-identical realizations regardless of caller.
    """
    nr = cfg.num_irs_elements
    cascaded, direct, self_ch = [], [], []
    for k, geom in enumerate(cfg.bs_arrays):
        nk = geom.size
        h_direct = np.sqrt(cfg.alpha_direct[k]) * _cn(rng, (num, nk))
        h_kr = np.sqrt(cfg.alpha_bs_irs[k]) * _mix(
            stats.los_bs_irs[k][None, :, :], _cn(rng, (num, nr, nk)),
            cfg.rician_bs_irs[k], cfg.los_only)
        h_ru = np.sqrt(cfg.alpha_irs_user) * _mix(
            stats.los_irs_user[None, :], _cn(rng, (num, nr)),
            cfg.rician_irs_user, cfg.los_only)
        # G_{k,0} = diag(h^H_{r,0}) H_{k,r}; row n scales with h_{r,0}[n]*
        cascaded.append(h_ru[:, :, None] * h_kr)
        direct.append(h_direct)
        if k >= 1:
            self_ch.append(np.sqrt(cfg.alpha_self) * _cn(rng, (num, nk)))
    return ChannelRealization(cascaded=cascaded, direct=direct, interferer_self=self_ch)


def sample_realization(stats: ChannelStatistics, cfg: SystemConfig,
                       rng: np.random.Generator) -> ChannelRealization:
    """Single-slot convenience wrapper around sample_realizations."""
    batch = sample_realizations(stats, cfg, rng, 1)
    return ChannelRealization(
        cascaded=[g[0] for g in batch.cascaded],
        direct=[h[0] for h in batch.direct],
        interferer_self=[h[0] for h in batch.interferer_self],
    )
