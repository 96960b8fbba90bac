"""Closed-form per-slot beamforming and rate adaptation rules.

Every design (proposed or baseline) shares the same beamformer: MRT along
the estimated effective channel.  The rate rules differ: the bounded-set
rule guarantees the rate against every error in the ball pair, the
concentration rule guarantees it with probability rho, with a per-slot
empirical feasibility check that falls back to the bounded-set rate when
the chance constraint is not met at the drawn CSI.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .config import SystemConfig
from .csi import CsiSample, ErrorSetRadii, error_set_radii


class ZeroChannelWarning(UserWarning):
    """Estimated effective channel was exactly zero (probability-zero event)."""


def mrt_beamformer(v: np.ndarray, csi: CsiSample) -> np.ndarray:
    """Unit-norm beamformer (v^H Ghat + hhat^H)^H / ||v^H Ghat + hhat^H||.

    Maximizes |(v^H Ghat + hhat^H) w| over the unit ball.  A zero effective
    channel falls back to the first standard basis vector with a warning so
    Monte Carlo loops stay total.
    """
    e = metrics.effective_row(v, csi.est_cascaded, csi.est_direct)
    norm = np.linalg.norm(e)
    if norm == 0.0:
        warnings.warn("zero estimated effective channel; using basis beamformer",
                      ZeroChannelWarning)
        w = np.zeros(e.shape[-1], dtype=complex)
        w[0] = 1.0
        return w
    return np.conj(e) / norm


def rate_gp1(v: np.ndarray, csi: CsiSample, radii: ErrorSetRadii,
             denom: float, cfg: SystemConfig) -> float:
    """Worst-case-guaranteed rate under MRT; zero when the margin clamps."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroChannelWarning)
        w = mrt_beamformer(v, csi)
    g0 = metrics.signal_gp1(v, csi, w, radii)
    return float(np.log2(1.0 + cfg.tx_power_w[0] * g0 / denom))


def rate_gp2(v: np.ndarray, csi: CsiSample, cfg: SystemConfig, denom: float) -> float:
    """Concentration-guaranteed rate under MRT (clamped below at zero)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroChannelWarning)
        w = mrt_beamformer(v, csi)
    g0 = metrics.signal_gp2(v, csi, w, cfg)
    return float(np.log2(1.0 + cfg.tx_power_w[0] * g0 / denom))


def empirical_success_prob(signal_mag: float, power_threshold: float, se2: float,
                           rng: np.random.Generator, num_draws: int) -> float:
    """Empirical Pr[|s + z|^2 >= threshold], z ~ CN(0, se2).

    Conditional on the estimate, the true scalar channel equals the
    estimated one plus a CN(0, Nr*delta_1^2 + delta_2^2) perturbation; this
    scalar form is an exact reduction of drawing full error matrices.
    """
    if se2 == 0.0:
        return 1.0 if signal_mag ** 2 >= power_threshold else 0.0
    z = np.sqrt(se2 / 2.0) * (rng.standard_normal(num_draws)
                              + 1j * rng.standard_normal(num_draws))
    return float(np.mean(np.abs(signal_mag + z) ** 2 >= power_threshold))


@dataclass
class DesignResult:
    """A quasi-static phase-shift vector with its per-slot rules and trace.

    ``kind`` tags where the vector came from ('er', 'gp1', 'gp2' or a
    baseline tag); ``rate_kind`` selects the goodput rate rule ('none',
    'gp1', 'gp2' or 'gp2_fallback').  The beamformer rule is MRT for every
    kind.
    """

    kind: str
    v: np.ndarray
    rate_kind: str = "none"
    radii: ErrorSetRadii | None = None
    fallback_check_draws: int = 10000
    trace: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def beamformer(self, csi: CsiSample) -> np.ndarray:
        return mrt_beamformer(self.v, csi)

    def rate(self, csi: CsiSample, cfg: SystemConfig, denom: float,
             radii: ErrorSetRadii | None = None,
             rng: np.random.Generator | None = None) -> float:
        """Per-slot transmission rate r(Hhat); requires a goodput rate rule."""
        if radii is None:
            radii = self.radii
        if self.rate_kind == "none":
            raise ValueError(f"design kind '{self.kind}' has no rate rule")
        if self.rate_kind == "gp1":
            return rate_gp1(self.v, csi, radii, denom, cfg)
        if self.rate_kind == "gp2":
            return rate_gp2(self.v, csi, cfg, denom)
        if self.rate_kind == "gp2_fallback":
            if rng is None:
                raise ValueError("gp2_fallback rate rule needs an rng for the check")
            r, _ = self._gp2_with_fallback(csi, cfg, denom, radii, rng)
            return r
        raise ValueError(f"unknown rate_kind '{self.rate_kind}'")

    def _gp2_with_fallback(self, csi: CsiSample, cfg: SystemConfig, denom: float,
                           radii: ErrorSetRadii, rng: np.random.Generator):
        """Rate plus a flag telling whether the bounded-set fallback fired."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroChannelWarning)
            w = mrt_beamformer(self.v, csi)
        g0 = metrics.signal_gp2(self.v, csi, w, cfg)
        if g0 == 0.0:
            return 0.0, False  # rate 0 always succeeds
        mag = float(np.abs(metrics.effective_row(
            self.v, csi.est_cascaded, csi.est_direct) @ w))
        succ = empirical_success_prob(mag, g0, metrics.sigma_e_sq(cfg), rng,
                                      self.fallback_check_draws)
        if succ >= cfg.success_prob:
            return float(np.log2(1.0 + cfg.tx_power_w[0] * g0 / denom)), False
        return rate_gp1(self.v, csi, radii, denom, cfg), True

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        re_im = np.empty(2 * self.v.size)
        re_im[0::2] = self.v.real
        re_im[1::2] = self.v.imag
        return {
            "kind": self.kind,
            "rate_kind": self.rate_kind,
            "radii": None if self.radii is None else [self.radii.eps_cascaded,
                                                      self.radii.eps_direct],
            "fallback_check_draws": self.fallback_check_draws,
            "v_re_im": re_im.tolist(),
            "trace": self.trace,
            "meta": self.meta,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DesignResult":
        flat = np.asarray(d["v_re_im"], dtype=float)
        v = flat[0::2] + 1j * flat[1::2]
        radii = d.get("radii")
        if radii is not None:
            radii = ErrorSetRadii(eps_cascaded=radii[0], eps_direct=radii[1])
        return cls(kind=d["kind"], v=v, rate_kind=d.get("rate_kind", "none"),
                   radii=radii,
                   fallback_check_draws=int(d.get("fallback_check_draws", 10000)),
                   trace=d.get("trace", {}), meta=d.get("meta", {}))

    def save(self, path: str):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "DesignResult":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


_RATE_KIND = {"er": "none", "gp1": "gp1", "gp2": "gp2_fallback"}


def assemble_design(kind: str, v_opt: np.ndarray, cfg: SystemConfig,
                    radii: ErrorSetRadii | None = None,
                    check_draws: int = 10000) -> DesignResult:
    """Bundle optimized phase shifts with the matching per-slot rules.

    ER designs carry no rate rule (the ergodic scenario has none); GP2
    designs get the fallback variant whose per-slot check needs ``radii``
    at evaluation time.
    """
    if kind not in _RATE_KIND:
        raise ValueError(f"kind must be one of {sorted(_RATE_KIND)}, got '{kind}'")
    if not metrics.is_unit_modulus(v_opt):
        raise ValueError("phase-shift vector must be unit-modulus")
    if kind != "er" and radii is None:
        radii = error_set_radii(cfg)
    if v_opt.size != cfg.num_irs_elements:
        raise ValueError(f"phase vector length {v_opt.size} does not match "
                         f"{cfg.num_irs_elements} IRS elements")
    return DesignResult(kind=kind, v=np.asarray(v_opt, dtype=complex),
                        rate_kind=_RATE_KIND[kind], radii=radii,
                        fallback_check_draws=check_draws)
