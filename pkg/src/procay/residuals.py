"""Projection and reconstruction residuals, and error statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyInput, NonPositiveDepth
from .omega import PlanarScene


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform from board to camera: ``Q = R P + t``."""

    rotation: np.ndarray
    translation: np.ndarray

    def transform(self, board_points) -> np.ndarray:
        board = np.asarray(board_points, dtype=float)
        return board @ self.rotation[:, :2].T + self.translation

    def project(self, board_points) -> np.ndarray:
        Q = self.transform(board_points)
        return Q[:, :2] / Q[:, 2:]


@dataclass(frozen=True)
class ErrorStats:
    rmse: float
    median: float
    max: float

    def as_dict(self):
        return {"rmse": self.rmse, "med": self.median, "max": self.max}


def _arrays(scene, translation_op):
    return (
        np.ascontiguousarray(scene.board_points),
        np.ascontiguousarray(scene.image_points),
        np.ascontiguousarray(translation_op, dtype=float),
    )


def projection_residuals(v, scene: PlanarScene, translation_op) -> np.ndarray:
    """Residuals ``Q_xy / Q_z - p`` at the Cayley vector ``v``, with ``t = T vec(R)``.

    Pairs are flattened row-major: ``[dx_0, dy_0, dx_1, dy_1, ...]``.

    Raises
    ------
    NonPositiveDepth
        For the first point whose depth is ``<= 1e-12``.
    """
    board, image, T = _arrays(scene, translation_op)
    res, bad, depth = kernels.projection_residuals(np.asarray(v, dtype=float), board, image, T)
    if bad >= 0:
        raise NonPositiveDepth(bad, depth)
    return res


def projection_jacobian(v, scene: PlanarScene, translation_op) -> np.ndarray:
    """Analytic ``(2n, 3)`` Jacobian of :func:`projection_residuals`.

    The dependence of the translation on the rotation is included.
    """
    board, image, T = _arrays(scene, translation_op)
    _, J, bad, depth = kernels.projection_jacobian(np.asarray(v, dtype=float), board, image, T)
    if bad >= 0:
        raise NonPositiveDepth(bad, depth)
    return J


def reconstruction_residuals(v, scene: PlanarScene, translation_op) -> np.ndarray:
    """Residuals ``p Q_z - Q_xy``; defined for any depth sign."""
    board, image, T = _arrays(scene, translation_op)
    return kernels.reconstruction_residuals(np.asarray(v, dtype=float), board, image, T)


def error_stats(residuals, scale: float = 1.0) -> ErrorStats:
    """RMSE, median and max of the per-point residual norms, times ``scale``.

    ``scale`` is 1 for normalised-plane units or the focal length in pixels
    for reprojection errors.
    """
    residuals = np.asarray(residuals, dtype=float).ravel()
    if residuals.size == 0:
        raise EmptyInput("no residuals")
    if residuals.size % 2:
        raise ValueError("residual vector must hold (x, y) pairs")
    if not scale > 0:
        raise ValueError("scale must be positive")
    per_point = np.hypot(residuals[0::2], residuals[1::2])
    return ErrorStats(
        # fsum keeps the result independent of pair order
        rmse=math.sqrt(math.fsum(per_point**2) / per_point.size) * scale,
        median=float(np.median(per_point) * scale),
        max=float(per_point.max() * scale),
    )
