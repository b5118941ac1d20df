"""Macroscopic dimension of tall-peak sets."""
__version__ = "0.1.0"

from .dimension import dimh_estimate, dimm_estimate, fixture_set, frostman_bound, upper_density
from .errors import (ConfigError, InputError, InsufficientDataError, IntegrityError, MacrodimError,
                     ResourceError, StabilityError)
from .exceedance import ExceedanceSpec, GaugeSpec, exceedance_pixels, model_gauge
from .models import ModelConfig
from .shells import PixelSet, build_skeleton, is_theta_thick, pixelize, shell_of
from .spectrum import compare_report, spectrum_sweep, theory_dim

__all__ = [
    "__version__", "dimh_estimate", "dimm_estimate", "fixture_set", "frostman_bound", "upper_density",
    "ConfigError", "InputError", "InsufficientDataError", "IntegrityError", "MacrodimError",
    "ResourceError", "StabilityError", "ExceedanceSpec", "GaugeSpec", "exceedance_pixels",
    "model_gauge", "ModelConfig", "PixelSet", "build_skeleton", "is_theta_thick", "pixelize",
    "shell_of", "compare_report", "spectrum_sweep", "theory_dim",
]
