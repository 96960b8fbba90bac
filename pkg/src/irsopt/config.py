"""Scenario configuration: array geometries, powers, angles, link gains.

All randomness lives elsewhere; a SystemConfig is a plain immutable value
object.  Powers are stored in watts internally; config files take dBm for
powers and linear scale for error standard deviations.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, replace


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts / 1e-3)


def path_gain(distance_m: float, exponent: float) -> float:
    """Large-scale power 1/(1000 d^a), i.e. -30 - 10 a log10(d) dB."""
    if distance_m <= 0:
        raise ConfigError(f"distance must be positive, got {distance_m}")
    return 1.0 / (1000.0 * distance_m ** exponent)


@dataclass(frozen=True)
class UraGeometry:
    """Uniform rectangular array: rows x cols elements, spacing d/lambda."""

    rows: int
    cols: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"array must have >=1 rows and cols, got {self.rows}x{self.cols}")
        if not 0.0 < self.spacing_over_wavelength <= 0.5:
            raise ConfigError(
                f"spacing_over_wavelength must be in (0, 0.5], got {self.spacing_over_wavelength}"
            )

    @property
    def size(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class AnglePair:
    """Azimuth/elevation pair in radians."""

    azimuth: float
    elevation: float

    def __post_init__(self):
        if not (math.isfinite(self.azimuth) and math.isfinite(self.elevation)):
            raise ConfigError("angles must be finite")


@dataclass(frozen=True)
class SystemConfig:
    """Deterministic scenario parameters for one multi-cell IRS layout.

    Index 0 of every per-BS sequence is the serving BS; indices 1..K are
    interferers.  ``alpha_self`` is the interferer-to-own-user large-scale
    power; it cancels in the MRT direction and defaults to 1.
    """

    bs_arrays: tuple[UraGeometry, ...]
    irs_array: UraGeometry
    tx_power_w: tuple[float, ...]
    noise_power_w: float
    rician_bs_irs: tuple[float, ...]
    rician_irs_user: float
    dep_bs_irs: tuple[AnglePair, ...]   # departure azimuth/elevation at BS k
    arr_bs_irs: tuple[AnglePair, ...]   # arrival azimuth/elevation at the IRS
    dep_irs_user: AnglePair             # departure at the IRS toward the user
    alpha_direct: tuple[float, ...]     # BS k -> user 0
    alpha_bs_irs: tuple[float, ...]     # BS k -> IRS
    alpha_irs_user: float               # IRS -> user 0
    err_std_cascaded: float             # delta_1
    err_std_direct: float               # delta_2
    success_prob: float                 # rho
    alpha_self: float = 1.0
    los_only: bool = False              # Rician factors -> infinity on all IRS links

    def __post_init__(self):
        k1 = len(self.bs_arrays)
        for name in ("tx_power_w", "rician_bs_irs", "dep_bs_irs", "arr_bs_irs",
                     "alpha_direct", "alpha_bs_irs"):
            if len(getattr(self, name)) != k1:
                raise ConfigError(f"{name} must have one entry per BS ({k1}), "
                                  f"got {len(getattr(self, name))}")
        if any(p <= 0 for p in self.tx_power_w):
            raise ConfigError("transmit powers must be positive")
        if self.noise_power_w <= 0:
            raise ConfigError("noise power must be positive")
        if any(k < 0 for k in self.rician_bs_irs) or self.rician_irs_user < 0:
            raise ConfigError("Rician factors must be >= 0")
        if any(a < 0 for a in self.alpha_direct) or any(a < 0 for a in self.alpha_bs_irs) \
                or self.alpha_irs_user < 0:
            raise ConfigError("large-scale powers must be >= 0")
        if self.err_std_cascaded < 0 or self.err_std_direct < 0:
            raise ConfigError("error standard deviations must be >= 0")
        if not 0.0 < self.success_prob < 1.0:
            raise ConfigError(f"success_prob must be inside (0, 1), got {self.success_prob}")

    @property
    def num_interferers(self) -> int:
        return len(self.bs_arrays) - 1

    @property
    def num_irs_elements(self) -> int:
        return self.irs_array.size

    def with_zero_interference(self) -> "SystemConfig":
        """Clone with all interferer transmit powers replaced by ~0.

        Powers must stay positive for validation; 0 W is expressed as a
        negligible epsilon that contributes nothing at double precision.
        """
        if self.num_interferers == 0:
            return self
        powers = (self.tx_power_w[0],) + (1e-300,) * self.num_interferers
        return replace(self, tx_power_w=powers)

    def canonical_text(self) -> str:
        """Stable textual form used for provenance hashing."""
        lines = []
        for name in sorted(self.__dataclass_fields__):
            lines.append(f"{name}={getattr(self, name)!r}")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Three-cell coordinate layout.  Angles are always explicit inputs;
# coordinates are only ever used to derive link distances.
# ---------------------------------------------------------------------------

_BS_POSITIONS = ((0.0, 0.0), (600.0, 0.0), (300.0, 300.0 * math.sqrt(3.0)))
_IRS_Y = -20.0


def hex_layout_distances(d_user: float, d_irs: float = 300.0,
                         num_interferers: int = 2) -> dict:
    """Link distances for the three-BS hexagonal layout.

    The user sits on the perpendicular bisector of the segment between the
    two interferer BSs, at distance ``d_user`` from the serving BS; the IRS
    sits at (d_irs, -20) m.  Returns distances for (k,0), (k,r) and (r,0)
    links, serving BS first.
    """
    if num_interferers > 2:
        raise ConfigError("layout defines at most 2 interferer positions")
    user = (d_user * math.sqrt(3.0) / 2.0, d_user / 2.0)
    irs = (d_irs, _IRS_Y)
    bss = _BS_POSITIONS[: num_interferers + 1]
    dist = lambda a, b: math.hypot(a[0] - b[0], a[1] - b[1])
    return {
        "bs_user": tuple(dist(p, user) for p in bss),
        "bs_irs": tuple(dist(p, irs) for p in bss),
        "irs_user": dist(irs, user),
    }


# ---------------------------------------------------------------------------
# Config file loading (INI-style key/value text).
# ---------------------------------------------------------------------------

def _get(section, key, conv, where):
    if key not in section:
        raise ConfigError(f"{where}: missing key '{key}'")
    try:
        return conv(section[key])
    except ValueError as e:
        raise ConfigError(f"{where}.{key}: {e}") from None


def _alpha_from(section, prefix, where) -> float:
    """Either '<prefix>' directly (linear) or '<prefix>_dist' + '<prefix>_exp'."""
    if prefix in section:
        return _get(section, prefix, float, where)
    d = _get(section, prefix + "_dist", float, where)
    a = _get(section, prefix + "_exp", float, where)
    return path_gain(d, a)


def load_config(path: str) -> SystemConfig:
    """Parse a SystemConfig from an INI-style key/value file.

    Powers (``power_dbm``, ``noise_power_dbm``) are given in dBm; error
    standard deviations and explicit alphas are linear.  Angles are radians.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh, source=path)
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror or e}") from None
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None

    if "system" not in parser:
        raise ConfigError(f"{path}: missing [system] section")
    sys_sec = parser["system"]
    where = f"{path}:[system]"
    num_interferers = _get(sys_sec, "num_interferers", int, where)
    if num_interferers < 0:
        raise ConfigError(f"{where}: num_interferers must be >= 0")

    if "irs" not in parser:
        raise ConfigError(f"{path}: missing [irs] section")
    irs_sec = parser["irs"]
    irs = UraGeometry(
        rows=_get(irs_sec, "rows", int, f"{path}:[irs]"),
        cols=_get(irs_sec, "cols", int, f"{path}:[irs]"),
        spacing_over_wavelength=float(irs_sec.get("spacing_over_wavelength", 0.5)),
    )

    if "irs_user" not in parser:
        raise ConfigError(f"{path}: missing [irs_user] section")
    iu = parser["irs_user"]
    iu_where = f"{path}:[irs_user]"
    dep_irs_user = AnglePair(_get(iu, "dep_azimuth", float, iu_where),
                             _get(iu, "dep_elevation", float, iu_where))

    arrays, powers, ricians, deps, arrs, a_dir, a_bsirs = [], [], [], [], [], [], []
    for k in range(num_interferers + 1):
        name = f"bs{k}"
        if name not in parser:
            raise ConfigError(f"{path}: missing [{name}] section "
                              f"(num_interferers = {num_interferers})")
        sec = parser[name]
        w = f"{path}:[{name}]"
        arrays.append(UraGeometry(
            rows=_get(sec, "rows", int, w),
            cols=_get(sec, "cols", int, w),
            spacing_over_wavelength=float(sec.get("spacing_over_wavelength", 0.5)),
        ))
        powers.append(dbm_to_watts(_get(sec, "power_dbm", float, w)))
        ricians.append(_get(sec, "rician_bs_irs", float, w))
        deps.append(AnglePair(_get(sec, "dep_azimuth", float, w),
                              _get(sec, "dep_elevation", float, w)))
        arrs.append(AnglePair(_get(sec, "arr_azimuth", float, w),
                              _get(sec, "arr_elevation", float, w)))
        a_dir.append(_alpha_from(sec, "alpha_direct", w))
        a_bsirs.append(_alpha_from(sec, "alpha_bs_irs", w))

    return SystemConfig(
        bs_arrays=tuple(arrays),
        irs_array=irs,
        tx_power_w=tuple(powers),
        noise_power_w=dbm_to_watts(_get(sys_sec, "noise_power_dbm", float, where)),
        rician_bs_irs=tuple(ricians),
        rician_irs_user=_get(iu, "rician", float, iu_where),
        dep_bs_irs=tuple(deps),
        arr_bs_irs=tuple(arrs),
        dep_irs_user=dep_irs_user,
        alpha_direct=tuple(a_dir),
        alpha_bs_irs=tuple(a_bsirs),
        alpha_irs_user=_alpha_from(iu, "alpha", iu_where),
        err_std_cascaded=_get(sys_sec, "err_std_cascaded", float, where),
        err_std_direct=_get(sys_sec, "err_std_direct", float, where),
        success_prob=_get(sys_sec, "success_prob", float, where),
        alpha_self=float(sys_sec.get("alpha_self", 1.0)),
        los_only=sys_sec.getboolean("los_only", fallback=False),
    )
