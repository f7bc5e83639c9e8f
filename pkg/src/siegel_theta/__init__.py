"""Siegel half-space reduction, Heisenberg nilflows and finite theta sums."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .symplectic import (  # noqa: F401
    BlockSymplectic,
    CartanDirection,
    IntegerSymplectic,
    SiegelPoint,
    cartan_matrix,
    cocycle,
    height_raw,
    iwasawa,
    mobius,
)
from .reduction import (  # noqa: F401
    ReductionOptions,
    classify_diophantine,
    height_flow,
    hgt,
    loglaw_mc,
    reduce_g1,
    reduce_siegel,
)
from .theta import QuadraticData, growth_fit, predicted_exponent, pretheta_sum, theta_sum  # noqa: F401
