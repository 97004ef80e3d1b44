"""Rate-distortion regions for state-dependent MACs with generalized feedback."""

__version__ = "0.1.0"

from .channel import ChannelSpec, SchemeSpec, build_joint, validate
from .estimation import min_distortion, optimal_estimator
from .prob import Alphabet, JointDistribution
from .region import eliminate, evaluate_bounds, membership

__all__ = [
    "Alphabet", "JointDistribution", "ChannelSpec", "SchemeSpec", "build_joint", "validate",
    "optimal_estimator", "min_distortion", "evaluate_bounds", "eliminate", "membership",
]
