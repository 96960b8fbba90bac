import math
from pathlib import Path

import numpy as np
import pytest

from irsopt.config import AnglePair, SystemConfig, UraGeometry, load_config

REPO = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO / "configs"


def make_config(num_interferers=2, bs_rows=2, bs_cols=2, irs_rows=4, irs_cols=4,
                p0_w=1.0, pk_w=1.0, noise_w=0.01, rician=2.0, rician_user=None,
                alpha_direct=0.5, alpha_interf_direct=0.2, alpha_bs_irs=1.0,
                alpha_interf_bs_irs=0.3, alpha_irs_user=1.0,
                err_cascaded=0.05, err_direct=0.05, rho=0.95, los_only=False,
                dep0=(math.pi / 3, math.pi / 3), arr0=(math.pi / 4, math.pi / 4),
                dep_user=(math.pi / 6, math.pi / 6)):
    """Small hand-rolled scenario used throughout the tests."""
    k1 = num_interferers + 1
    deps = [AnglePair(*dep0)]
    arrs = [AnglePair(*arr0)]
    for k in range(1, k1):
        deps.append(AnglePair(math.pi / 8, math.pi / 8))
        arrs.append(AnglePair(math.pi / 4 + 0.35 * k, math.pi / 4 - 0.2 * k))
    return SystemConfig(
        bs_arrays=tuple(UraGeometry(bs_rows, bs_cols) for _ in range(k1)),
        irs_array=UraGeometry(irs_rows, irs_cols),
        tx_power_w=(p0_w,) + (pk_w,) * num_interferers,
        noise_power_w=noise_w,
        rician_bs_irs=(rician,) * k1,
        rician_irs_user=rician if rician_user is None else rician_user,
        dep_bs_irs=tuple(deps),
        arr_bs_irs=tuple(arrs),
        dep_irs_user=AnglePair(*dep_user),
        alpha_direct=(alpha_direct,) + (alpha_interf_direct,) * num_interferers,
        alpha_bs_irs=(alpha_bs_irs,) + (alpha_interf_bs_irs,) * num_interferers,
        alpha_irs_user=alpha_irs_user,
        err_std_cascaded=err_cascaded,
        err_std_direct=err_direct,
        success_prob=rho,
        los_only=los_only,
    )


@pytest.fixture(scope="session")
def desk_cfg():
    return load_config(str(CONFIG_DIR / "desk.cfg"))


@pytest.fixture(scope="session")
def threecell_cfg():
    return load_config(str(CONFIG_DIR / "paper_sec6.cfg"))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def random_phases(rng, n):
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n))
