"""Cohomological equations for isotropic frames: Hermite model and torus model."""

from .hermite import HermiteField, HermiteTruncation, metaplectic_U, sobolev_norm  # noqa: F401
from .forms import PForm, InvariantCurrent, d, d_minus_one, homotopy_K, project_M, tame_ratio  # noqa: F401
from .torus import TorusForm, TorusFrame, torus_d, torus_diophantine, torus_solve  # noqa: F401
