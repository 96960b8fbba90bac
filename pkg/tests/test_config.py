import math

import pytest

from irsopt.config import (AnglePair, ConfigError, SystemConfig, UraGeometry,
                           dbm_to_watts, hex_layout_distances, load_config,
                           path_gain)

from conftest import CONFIG_DIR, make_config


def test_ura_geometry_validation():
    g = UraGeometry(4, 2)
    assert g.size == 8
    with pytest.raises(ConfigError):
        UraGeometry(0, 2)
    with pytest.raises(ConfigError):
        UraGeometry(2, 2, spacing_over_wavelength=0.6)
    with pytest.raises(ConfigError):
        UraGeometry(2, 2, spacing_over_wavelength=0.0)


def test_angle_pair_finite():
    with pytest.raises(ConfigError):
        AnglePair(math.inf, 0.0)


def test_path_gain_reference():
    # 1 m at exponent 2 is -30 dB
    assert path_gain(1.0, 2.0) == pytest.approx(1e-3)
    assert 10 * math.log10(path_gain(10.0, 3.7)) == pytest.approx(-30 - 37.0)


def test_dbm_conversion():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(-90.0) == pytest.approx(1e-12)


def test_system_config_validation():
    with pytest.raises(ConfigError):
        make_config(rho=1.0)
    with pytest.raises(ConfigError):
        make_config(rho=0.0)
    with pytest.raises(ConfigError):
        make_config(err_cascaded=-0.1)
    with pytest.raises(ConfigError):
        make_config(noise_w=0.0)
    cfg = make_config()
    # per-BS table lengths must match K+1 (angle table vs interferer count)
    with pytest.raises(ConfigError):
        SystemConfig(**{**_as_kwargs(cfg), "dep_bs_irs": cfg.dep_bs_irs[:-1]})


def _as_kwargs(cfg):
    return {name: getattr(cfg, name) for name in cfg.__dataclass_fields__}


def test_zero_interference_clone():
    cfg = make_config()
    c0 = cfg.with_zero_interference()
    assert c0.tx_power_w[0] == cfg.tx_power_w[0]
    assert all(p < 1e-200 for p in c0.tx_power_w[1:])
    assert c0.num_interferers == cfg.num_interferers


def test_hex_layout_distances():
    d = hex_layout_distances(200.0 * math.sqrt(3.0))
    # user on the circumcenter: equidistant from all three BSs
    assert d["bs_user"] == pytest.approx((346.41016151377545,) * 3)
    assert d["irs_user"] == pytest.approx(20.0 + 100.0 * math.sqrt(3.0))
    assert d["bs_irs"][0] == pytest.approx(math.hypot(300.0, 20.0))
    assert d["bs_irs"][2] == pytest.approx(300.0 * math.sqrt(3.0) + 20.0)
    with pytest.raises(ConfigError):
        hex_layout_distances(100.0, num_interferers=3)


def test_load_threecell_config():
    cfg = load_config(str(CONFIG_DIR / "paper_sec6.cfg"))
    assert cfg.num_interferers == 2
    assert cfg.irs_array.size == 64
    assert cfg.bs_arrays[0].size == 16
    assert cfg.tx_power_w[0] == pytest.approx(1.0)
    assert cfg.noise_power_w == pytest.approx(1e-12)
    assert cfg.success_prob == 0.95
    assert cfg.err_std_cascaded == 1e-6
    assert cfg.alpha_direct[0] == pytest.approx(path_gain(200 * math.sqrt(3), 3.7))
    assert cfg.alpha_irs_user == pytest.approx(path_gain(20 + 100 * math.sqrt(3), 3.0))
    assert cfg.dep_bs_irs[0].azimuth == pytest.approx(math.pi / 3)
    assert cfg.dep_bs_irs[1].azimuth == pytest.approx(math.pi / 8)
    assert cfg.dep_irs_user.azimuth == pytest.approx(math.pi / 6)


def test_load_desk_config():
    cfg = load_config(str(CONFIG_DIR / "desk.cfg"))
    assert cfg.bs_arrays[0].size == 4
    assert cfg.irs_array.size == 16
    assert cfg.alpha_bs_irs == (1.0, 0.3, 0.3)


def test_missing_file_and_sections(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.cfg"))
    p = tmp_path / "bad.cfg"
    p.write_text("[system]\nnum_interferers = 0\n")
    with pytest.raises(ConfigError, match=r"\[irs\]"):
        load_config(str(p))
    p.write_text("[system]\nnum_interferers = 1\nnoise_power_dbm = 0\n"
                 "success_prob = 0.9\nerr_std_cascaded = 0\nerr_std_direct = 0\n"
                 "[irs]\nrows = 2\ncols = 2\n"
                 "[irs_user]\nrician = 1\ndep_azimuth = 0\ndep_elevation = 0\n"
                 "alpha = 1\n"
                 "[bs0]\nrows = 2\ncols = 2\npower_dbm = 0\nrician_bs_irs = 1\n"
                 "dep_azimuth = 0\ndep_elevation = 0\narr_azimuth = 0\n"
                 "arr_elevation = 0\nalpha_direct = 1\nalpha_bs_irs = 1\n")
    with pytest.raises(ConfigError, match=r"\[bs1\]"):
        load_config(str(p))


def test_malformed_value_is_anchored(tmp_path):
    p = tmp_path / "bad.cfg"
    src = (CONFIG_DIR / "desk.cfg").read_text()
    p.write_text(src.replace("success_prob = 0.95", "success_prob = often"))
    with pytest.raises(ConfigError, match="success_prob"):
        load_config(str(p))


def test_digest_stable_and_sensitive():
    a = make_config()
    b = make_config()
    c = make_config(err_cascaded=0.06)
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()
