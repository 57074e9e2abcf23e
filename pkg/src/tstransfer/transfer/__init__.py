"""Weight surgery between a pre-trained source model and a fresh target model."""
from .bundle import BUNDLE_MAGIC, WeightBundle, load_bundle, save_bundle
from .surgery import (
    DEFAULT_OMEGA_GRID,
    adapt_channels,
    assign_multipliers,
    extract,
    implant,
)

__all__ = [
    "BUNDLE_MAGIC", "DEFAULT_OMEGA_GRID", "WeightBundle", "adapt_channels", "assign_multipliers",
    "extract", "implant", "load_bundle", "save_bundle",
]
