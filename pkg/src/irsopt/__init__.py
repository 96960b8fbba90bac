"""Robust quasi-static IRS phase-shift and per-slot beamforming designs
for a multi-cell downlink with imperfect transmitter CSI."""

from .config import AnglePair, ConfigError, SystemConfig, UraGeometry, load_config
from .channel import ChannelRealization, ChannelStatistics, build_statistics
from .csi import CsiSample, ErrorSetRadii, error_set_radii
from .beamform import DesignResult

__all__ = [
    "AnglePair",
    "ChannelRealization",
    "ChannelStatistics",
    "ConfigError",
    "CsiSample",
    "DesignResult",
    "ErrorSetRadii",
    "SystemConfig",
    "UraGeometry",
    "build_statistics",
    "error_set_radii",
    "load_config",
]

__version__ = "0.1.0"
