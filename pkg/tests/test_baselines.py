import numpy as np
import pytest

from irsopt import baselines, metrics, ssca
from irsopt.channel import build_statistics, steering_vector
from irsopt.config import ConfigError
from irsopt.evaluate import eval_ergodic, eval_goodput

from conftest import make_config


class TestBaselineV1:
    def test_unit_modulus(self):
        cfg = make_config()
        stats = build_statistics(cfg)
        d = baselines.baseline_v1(cfg, stats)
        assert metrics.is_unit_modulus(d.v)
        assert d.kind == "b1" and d.rate_kind == "gp1"

    def test_single_element_irs(self):
        cfg = make_config(irs_rows=1, irs_cols=1)
        stats = build_statistics(cfg)
        d = baselines.baseline_v1(cfg, stats)
        assert d.v.shape == (1,)
        assert d.v[0] == pytest.approx(1.0 + 0j)

    def test_alignment_property(self):
        # |v^H diag(hbar^H) a^H(arrival)| reaches the element count
        cfg = make_config(irs_rows=4, irs_cols=4)
        stats = build_statistics(cfg)
        d = baselines.baseline_v1(cfg, stats)
        a_arr = steering_vector(cfg.irs_array, cfg.arr_bs_irs[0])
        u = stats.los_irs_user * np.conj(a_arr)
        assert abs(np.conj(d.v) @ u) == pytest.approx(cfg.num_irs_elements, abs=1e-6)

    def test_literal_variant_exists_and_differs(self):
        cfg = make_config()
        stats = build_statistics(cfg)
        lit = baselines.baseline_v1(cfg, stats, literal=True)
        ali = baselines.baseline_v1(cfg, stats)
        assert metrics.is_unit_modulus(lit.v)
        assert lit.meta["literal"] is True
        assert not np.allclose(lit.v, ali.v)


class TestBaselineV2:
    def test_coincides_with_er_at_zero_error(self):
        cfg = make_config(err_cascaded=0.0, err_direct=0.0)
        stats = build_statistics(cfg)
        settings = ssca.SscaSettings(seed=2, max_iters=60)
        b2 = baselines.baseline_v2(cfg, stats, settings)
        er = ssca.optimize("er", cfg, stats, settings)
        assert np.array_equal(b2.v, er.v)
        assert b2.kind == "b2" and b2.rate_kind == "gp1"
        assert metrics.is_unit_modulus(b2.v)

    def test_beats_interference_blind_alignment(self):
        # on a one-interferer toy, the interference-aware stationary point
        # scores at least as well on the perfect-CSIT surrogate it optimizes
        cfg = make_config(num_interferers=1, pk_w=4.0, err_cascaded=0.0,
                          err_direct=0.0)
        stats = build_statistics(cfg)
        b2 = baselines.baseline_v2(cfg, stats, ssca.SscaSettings(seed=4, max_iters=400))
        b1 = baselines.baseline_v1(cfg, stats)

        def surrogate(v):
            num = np.linalg.norm(np.conj(v) @ stats.cascaded_los[0]) ** 2
            # NLoS and direct-link powers do not depend on v
            num += cfg.alpha_bs_irs[0] * cfg.alpha_irs_user * \
                cfg.num_irs_elements * (1 - stats.tau[0]) * cfg.bs_arrays[0].size
            num += cfg.alpha_direct[0] * cfg.bs_arrays[0].size
            return cfg.tx_power_w[0] * num / metrics.denominator(v, cfg, stats)

        assert surrogate(b2.v) >= surrogate(b1.v) - 1e-9


class TestBaselineV4:
    def test_reduces_to_alignment_without_interferers(self):
        cfg = make_config(num_interferers=0)
        stats = build_statistics(cfg)
        d = baselines.baseline_v4(cfg, stats,
                                  ssca.SscaSettings(seed=1, max_iters=300, init="random"))
        g0 = stats.cascaded_los[0]
        u, s, _ = np.linalg.svd(g0)
        best = np.sum(np.abs(u[:, 0])) * s[0]
        assert np.linalg.norm(np.conj(d.v) @ g0) >= 0.99 * best
        assert metrics.is_unit_modulus(d.v)

    def test_objective_trend(self):
        cfg = make_config()
        stats = build_statistics(cfg)
        d = baselines.baseline_v4(cfg, stats,
                                  ssca.SscaSettings(seed=3, max_iters=120, init="random"))
        c0 = np.asarray(d.trace["c0"])
        assert np.median(c0[-12:]) >= np.median(c0[:12])

    def test_requires_los(self):
        cfg = make_config(rician=0.0)
        stats = build_statistics(cfg)
        with pytest.raises(ConfigError):
            baselines.baseline_v4(cfg, stats, ssca.SscaSettings(max_iters=5))


class TestBaselineB3:
    def test_matches_proposed_without_interferers(self):
        cfg = make_config(num_interferers=0)
        stats = build_statistics(cfg)
        settings = ssca.SscaSettings(seed=6, max_iters=50)
        b3 = baselines.baseline_robust_no_interf(cfg, stats, settings, kind="er")
        er = ssca.optimize("er", cfg, stats, settings)
        assert np.array_equal(b3.v, er.v)

    def test_differs_under_strong_interference(self):
        cfg = make_config(pk_w=8.0, alpha_interf_bs_irs=1.0)
        stats = build_statistics(cfg)
        settings = ssca.SscaSettings(seed=6, max_iters=300)
        b3 = baselines.baseline_robust_no_interf(cfg, stats, settings, kind="er")
        er = ssca.optimize("er", cfg, stats, settings)
        assert np.linalg.norm(b3.v - er.v) > 1e-3
        assert metrics.is_unit_modulus(b3.v)


class TestEvaluableEverywhere:
    @pytest.mark.parametrize("tag", ["b1", "b2", "b3", "b4"])
    def test_baselines_run_through_evaluator(self, tag):
        cfg = make_config()
        stats = build_statistics(cfg)
        settings = ssca.SscaSettings(seed=0, max_iters=30)
        d = baselines.build_baseline(tag, cfg, stats, settings, scenario="goodput")
        erg = eval_ergodic(d, cfg, stats, 400, 1)
        gp = eval_goodput(d, cfg, stats, 400, np.random.default_rng(2))
        assert erg.ergodic_rate > 0
        assert gp.avg_goodput >= 0
        assert 0 <= gp.success_prob <= 1

    def test_unknown_tag(self):
        cfg = make_config()
        stats = build_statistics(cfg)
        with pytest.raises(ValueError):
            baselines.build_baseline("b9", cfg, stats, ssca.SscaSettings())
