"""Stochastic successive convex approximation over the phase-shift vector.

Each iteration draws a small batch of estimated-CSI samples, refreshes a
running average of the objective value and of its complex gradient with a
diminishing forgetting factor, maximizes a strongly concave quadratic
surrogate in closed form, and moves by a second diminishing step size.

Gradient convention (pinned by the finite-difference tests): c1 holds the
conjugate Wirtinger derivative d(gamma)/d(conj(v_n)), so the first-order
change of the objective is 2*Re{sum_n conj(c1_n) dv_n}, c1 itself is the
steepest-ascent direction, and the surrogate maximizer over the unit disc
is exactly (tau*v_n + c1_n)/|tau*v_n + c1_n| per element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .beamform import DesignResult, assemble_design
from .channel import ChannelStatistics, _cn, _mix
from .config import SystemConfig
from .csi import CsiSample, ErrorSetRadii, error_set_radii

KINDS = ("er", "gp1", "gp2")


@dataclass
class SscaSettings:
    tau: float = 1.0
    rho_exponent: float = 0.6
    omega_exponent: float = 0.9
    samples_per_iter: int = 16
    max_iters: int = 2000
    seed: int = 0
    init: str = "warm"  # 'warm' aligns the LoS cascade, 'random' draws phases

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        # 0.5 < rho_exp < omega_exp <= 1 gives sum rho = inf, sum rho^2 < inf,
        # same for omega, and omega/rho -> 0.
        if not 0.5 < self.rho_exponent < self.omega_exponent <= 1.0:
            raise ValueError("need 0.5 < rho_exponent < omega_exponent <= 1")
        if self.samples_per_iter < 1:
            raise ValueError("samples_per_iter must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.init not in ("warm", "random"):
            raise ValueError("init must be 'warm' or 'random'")

    def rho(self, t: int) -> float:
        return float(t) ** (-self.rho_exponent)

    def omega(self, t: int) -> float:
        return float(t) ** (-self.omega_exponent)


@dataclass
class SurrogateState:
    c0: float
    c1: np.ndarray
    v_curr: np.ndarray
    iteration: int = 0
    degenerate_updates: int = 0


def initial_state(num_elements: int, v0: np.ndarray) -> SurrogateState:
    return SurrogateState(c0=0.0, c1=np.zeros(num_elements, dtype=complex),
                          v_curr=np.asarray(v0, dtype=complex), iteration=0)


# ---------------------------------------------------------------------------
# Objective machinery.  The effective signal power S(v) = ||v^H Ghat + hhat^H||^2
# is a Hermitian quadratic form with gradient (w.r.t. conj(v)) Ghat u where
# u = Ghat^H v + hhat; the interference denominator is a sample-free quadratic
# form plus a constant.  The MRT beamformer is substituted throughout; by the
# envelope argument its v-dependence contributes nothing extra to the gradient
# at the expansion point.
# ---------------------------------------------------------------------------


class Objective:
    """Per-design precomputation for one (kind, cfg, stats) triple."""

    def __init__(self, kind: str, cfg: SystemConfig, stats: ChannelStatistics,
                 radii: ErrorSetRadii | None = None):
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got '{kind}'")
        self.kind = kind
        self.cfg = cfg
        self.stats = stats
        self.p0 = cfg.tx_power_w[0]
        nr = cfg.num_irs_elements
        self.den_quad = np.zeros((nr, nr), dtype=complex)
        self.den_const = cfg.noise_power_w
        for k in range(1, len(cfg.bs_arrays)):
            g_bar = stats.cascaded_los[k]
            nk = cfg.bs_arrays[k].size
            self.den_quad += (cfg.tx_power_w[k] / nk) * (g_bar @ g_bar.conj().T)
            self.den_const += cfg.tx_power_w[k] * (
                stats.alpha_bs_irs[k] * stats.alpha_irs_user * nr * (1.0 - stats.tau[k])
                + stats.alpha_direct[k])
        self.se2 = metrics.sigma_e_sq(cfg)
        if kind == "gp1":
            if radii is None:
                radii = error_set_radii(cfg)
            self.eps_total = radii.eps_cascaded * np.sqrt(nr) + radii.eps_direct
        else:
            self.eps_total = 0.0
        self.bernstein = 2.0 * np.log(1.0 / (1.0 - cfg.success_prob))

    # -- sampling ----------------------------------------------------------

    def sample_batch(self, rng: np.random.Generator, num: int):
        """Estimated serving-link CSI: (num, nr, n0) cascades, (num, n0) directs."""
        cfg, stats = self.cfg, self.stats
        nr, n0 = cfg.num_irs_elements, cfg.bs_arrays[0].size
        h_direct = np.sqrt(cfg.alpha_direct[0]) * _cn(rng, (num, n0))
        h_0r = np.sqrt(cfg.alpha_bs_irs[0]) * _mix(
            stats.los_bs_irs[0][None], _cn(rng, (num, nr, n0)),
            cfg.rician_bs_irs[0], cfg.los_only)
        h_ru = np.sqrt(cfg.alpha_irs_user) * _mix(
            stats.los_irs_user[None], _cn(rng, (num, nr)),
            cfg.rician_irs_user, cfg.los_only)
        g_true = h_ru[:, :, None] * h_0r
        g_est = g_true - cfg.err_std_cascaded * _cn(rng, g_true.shape)
        h_est = h_direct - cfg.err_std_direct * _cn(rng, h_direct.shape)
        return g_est, h_est

    # -- denominator -------------------------------------------------------

    def den(self, v: np.ndarray) -> float:
        return float(np.real(np.conj(v) @ self.den_quad @ v)) + self.den_const

    def den_grad(self, v: np.ndarray) -> np.ndarray:
        return self.den_quad @ v

    # -- numerator pieces ----------------------------------------------------

    def _signal(self, v: np.ndarray, g_est: np.ndarray, h_est: np.ndarray):
        """S = ||e||^2 with e the effective row v^H Ghat + hhat^H, batched."""
        e = np.einsum("n,lnj->lj", np.conj(v), g_est) + np.conj(h_est)
        return np.sum(np.abs(e) ** 2, axis=-1), e

    def _numerator(self, s: np.ndarray):
        """P0 * g0 per sample plus d(g0)/dS for the chain rule (batched)."""
        if self.kind == "er":
            return self.p0 * (s + self.se2), np.ones_like(s)
        if self.kind == "gp1":
            root = np.sqrt(s)
            margin = np.maximum(root - self.eps_total, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                dds = np.where(root > self.eps_total, margin / np.where(root > 0, root, 1.0), 0.0)
            return self.p0 * margin ** 2, dds
        # gp2; se2 == 0 collapses to the ER numerator without the constant
        if self.se2 == 0.0:
            return self.p0 * s, np.ones_like(s)
        inner = self.bernstein * (self.se2 ** 2 + 2.0 * self.se2 * s)
        raw = s + self.se2 - np.sqrt(inner)
        dds = np.where(raw > 0.0, 1.0 - self.bernstein * self.se2 / np.sqrt(inner), 0.0)
        return self.p0 * np.maximum(raw, 0.0), dds

    # -- public per-batch value and gradient ---------------------------------

    def values(self, v: np.ndarray, g_est: np.ndarray, h_est: np.ndarray) -> np.ndarray:
        s, _ = self._signal(v, g_est, h_est)
        num, _ = self._numerator(s)
        return num / self.den(v)

    def gradients(self, v: np.ndarray, g_est: np.ndarray, h_est: np.ndarray) -> np.ndarray:
        """Conjugate Wirtinger d(gamma)/d(conj(v)) per sample, (L, nr).

        d(S)/d(conj(v_n)) = sum_j Ghat[n,j] * conj(e_j); the numerator chain
        rule multiplies by d(g0)/dS, the quotient rule folds in the
        denominator quadratic.
        """
        s, e = self._signal(v, g_est, h_est)
        num, dds = self._numerator(s)
        d = self.den(v)
        d_grad = self.den_grad(v)
        s_grad = np.einsum("lnj,lj->ln", g_est, np.conj(e))
        num_grad = (self.p0 * dds)[:, None] * s_grad
        return (num_grad * d - num[:, None] * d_grad[None, :]) / d ** 2


def objective_sample(kind: str, v: np.ndarray, csi: CsiSample, cfg: SystemConfig,
                     stats: ChannelStatistics, radii: ErrorSetRadii | None = None) -> float:
    """gamma at one CSI sample: P0 g0(v, MRT, Hhat) / (sum_k P_k g_k(v) + sigma^2)."""
    obj = Objective(kind, cfg, stats, radii)
    return float(obj.values(v, csi.est_cascaded[None], csi.est_direct[None])[0])


def objective_gradient(kind: str, v: np.ndarray, csi: CsiSample, cfg: SystemConfig,
                       stats: ChannelStatistics, radii: ErrorSetRadii | None = None) -> np.ndarray:
    """d(gamma)/d(conj(v_n)) at one CSI sample, length num_irs_elements."""
    obj = Objective(kind, cfg, stats, radii)
    return obj.gradients(v, csi.est_cascaded[None], csi.est_direct[None])[0]


# ---------------------------------------------------------------------------
# Surrogate updates and the closed-form subproblem.
# ---------------------------------------------------------------------------


def update_surrogate(state: SurrogateState, batch, settings: SscaSettings,
                     objective) -> SurrogateState:
    """Refresh (c0, c1) from an L-sample batch with forgetting factor t^-a."""
    g_est, h_est = batch
    if g_est is not None and g_est.shape[0] == 0:
        raise ValueError("empty sample batch")
    t = state.iteration + 1
    rho = settings.rho(t)
    vals = objective.values(state.v_curr, g_est, h_est)
    grads = objective.gradients(state.v_curr, g_est, h_est)
    c0 = rho * float(np.mean(vals)) + (1.0 - rho) * state.c0
    c1 = rho * grads.mean(axis=0) + (1.0 - rho) * state.c1
    return SurrogateState(c0=c0, c1=c1, v_curr=state.v_curr, iteration=t,
                          degenerate_updates=state.degenerate_updates)


def surrogate_value(state: SurrogateState, v: np.ndarray, tau: float) -> float:
    """Concave model c0 + 2Re{sum conj(c1_n)(v_n - v_n^prev)} - tau*||v - v^prev||^2."""
    dv = v - state.v_curr
    return float(state.c0 + 2.0 * np.real(np.conj(state.c1) @ dv)
                 - tau * np.sum(np.abs(dv) ** 2))


def solve_subproblem(state: SurrogateState, settings: SscaSettings) -> np.ndarray:
    """Elementwise maximizer (tau*v_n + c1_n)/|tau*v_n + c1_n| of the surrogate.

    A zero numerator (degenerate KKT case) keeps the previous element and is
    counted on the state.
    """
    num = settings.tau * state.v_curr + state.c1
    mag = np.abs(num)
    degenerate = mag == 0.0
    if np.any(degenerate):
        state.degenerate_updates += int(np.count_nonzero(degenerate))
    safe = np.where(degenerate, 1.0, mag)
    return np.where(degenerate, state.v_curr, num / safe)


def step(state: SurrogateState, settings: SscaSettings,
         v_bar: np.ndarray) -> SurrogateState:
    """Convex combination v <- (1 - omega_t) v + omega_t v_bar."""
    omega = settings.omega(state.iteration)
    v_new = (1.0 - omega) * state.v_curr + omega * v_bar
    return SurrogateState(c0=state.c0, c1=state.c1, v_curr=v_new,
                          iteration=state.iteration,
                          degenerate_updates=state.degenerate_updates)


def warm_start(stats: ChannelStatistics) -> np.ndarray:
    """Unit-modulus phases aligning the serving cascade's dominant direction."""
    g_bar = stats.cascaded_los[0]
    if not np.any(g_bar):
        return np.ones(g_bar.shape[0], dtype=complex)
    u_left = np.linalg.svd(g_bar, full_matrices=False)[0][:, 0]
    return metrics.project_unit_modulus(u_left)


def run_loop(objective, settings: SscaSettings, v0: np.ndarray,
             rng: np.random.Generator):
    """Sample/update/solve/step iterations shared by all SSCA-driven designs.

    Returns the final (un-projected) vector, the per-iteration trace and the
    final surrogate state.
    """
    state = initial_state(v0.size, v0)
    trace = {"t": [], "c0": [], "c1_norm": [], "step_size": [], "movement": []}
    for _ in range(settings.max_iters):
        batch = objective.sample_batch(rng, settings.samples_per_iter)
        state = update_surrogate(state, batch, settings, objective)
        v_bar = solve_subproblem(state, settings)
        v_prev = state.v_curr
        state = step(state, settings, v_bar)
        trace["t"].append(state.iteration)
        trace["c0"].append(state.c0)
        trace["c1_norm"].append(float(np.linalg.norm(state.c1)))
        trace["step_size"].append(settings.omega(state.iteration))
        trace["movement"].append(float(np.linalg.norm(state.v_curr - v_prev)))
    return state.v_curr, trace, state


def settings_meta(settings: SscaSettings) -> dict:
    return {
        "seed": settings.seed,
        "iters": settings.max_iters,
        "samples_per_iter": settings.samples_per_iter,
        "tau": settings.tau,
        "rho_exponent": settings.rho_exponent,
        "omega_exponent": settings.omega_exponent,
        "init": settings.init,
    }


def optimize(kind: str, cfg: SystemConfig, stats: ChannelStatistics,
             settings: SscaSettings, radii: ErrorSetRadii | None = None) -> DesignResult:
    """Run the full sample/update/solve/step loop and bundle the design.

    The returned trace records (t, c0, ||c1||, step size, movement norm) for
    every iteration; the final vector is hard-projected onto the unit circle.
    """
    objective = Objective(kind, cfg, stats, radii)
    rng = np.random.default_rng(settings.seed)
    nr = cfg.num_irs_elements
    if settings.init == "warm":
        v0 = warm_start(stats)
    else:
        v0 = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, nr))
    v_raw, trace, state = run_loop(objective, settings, v0, rng)

    v_final = metrics.project_unit_modulus(v_raw)
    if radii is None and kind != "er":
        radii = error_set_radii(cfg)
    design = assemble_design(kind, v_final, cfg, radii)
    design.trace = trace
    design.meta = {
        "kind": kind,
        "degenerate_updates": state.degenerate_updates,
        "config_digest": cfg.digest(),
        **settings_meta(settings),
    }
    return design
