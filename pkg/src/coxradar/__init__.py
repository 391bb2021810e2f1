"""Cox-process models of automotive radar networks on random street layouts."""

from .cox import BLCP, PLCP, NetworkRealization, palm_condition, populate
from .detection import RadarConfig, p_d_blcp, p_d_plcp
from .geometry import BlpSpec, LineParam, LineSet, PlpSpec, sample_blp, sample_plp
from .interference import interval_blcp, interval_plcp

__version__ = "0.1.0"
