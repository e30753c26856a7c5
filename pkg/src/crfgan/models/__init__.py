from .bundle import BaselineBundle, CrfganBundle, make_bundle, sample_latent
from .config import (
    ArchConfig,
    DESK32,
    DESK64,
    PAPER256,
    PRESETS,
    config_from_dict,
    load_config,
    save_config,
)
from .layers import Module
from .networks import CrfHead, D, DLow, G1, G2, GLow, HalfEncoder

__all__ = [
    "ArchConfig",
    "BaselineBundle",
    "CrfHead",
    "CrfganBundle",
    "D",
    "DESK32",
    "DESK64",
    "DLow",
    "G1",
    "G2",
    "GLow",
    "HalfEncoder",
    "Module",
    "PAPER256",
    "PRESETS",
    "config_from_dict",
    "load_config",
    "make_bundle",
    "sample_latent",
    "save_config",
]
