"""chaoscope: a numerical laboratory for mean-field hierarchies of finite
pair-collision systems — exact master-equation evolution, correlation-error
hierarchies, size-of-chaos scaling, quantum mean-field limits, and stochastic
particle simulation."""

__version__ = "0.1.0"

from .core import OneBodyGenerator, PairKernel, make_kernel, operator_norm_V  # noqa: F401
from .correlation import CorrelationFamily, chaos_distance, correlation_error  # noqa: F401
from .master import FullState, evolve_master, marginal  # noqa: F401
from .meanfield import MeanFieldTrajectory, solve_mean_field  # noqa: F401
