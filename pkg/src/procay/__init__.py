"""Planar PnP with Cayley-parameterised least squares."""

from .errors import ProcayError, DataError, NumericalError
from .rotations import cayley_to_matrix, matrix_to_cayley, procrustes_plus, antipodal_rotation
from .omega import PlanarScene, build_omega
from .residuals import Pose, projection_residuals, error_stats
from .lsq import LsqConfig, lsq_solve
from .solver import solve_pnp_procay78, choose_start
from .correspondence import read_correspondences, write_correspondences

__all__ = [
    "ProcayError",
    "DataError",
    "NumericalError",
    "cayley_to_matrix",
    "matrix_to_cayley",
    "procrustes_plus",
    "antipodal_rotation",
    "PlanarScene",
    "build_omega",
    "Pose",
    "projection_residuals",
    "error_stats",
    "LsqConfig",
    "lsq_solve",
    "solve_pnp_procay78",
    "choose_start",
    "read_correspondences",
    "write_correspondences",
]
