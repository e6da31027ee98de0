"""Exchanging the camera and board poses.

Both the board ``(U, u)`` and the camera ``(V, v)`` are placed in a shared
world frame. A board point ``x`` (with ``z = 0``) lands in camera
coordinates as ``y = V^T (U x + u - v) = R_vu x + t_vu`` with
``R_vu = V^T U`` and ``t_vu = V^T (u - v)``.

Swapping the roles after reflecting both poses through ``E_xz`` yields the
inverse relative pose. The rigid map ``(W, w) = (R_vu^2, (I + R_vu) t_vu)``
takes the swapped camera coordinates back onto the original ones, so both
configurations produce the same image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rotations import cayley_to_matrix
from .synth import Xorshift64Star, board_grid, random_pose

E_XZ = np.diag([-1.0, 1.0, -1.0])
E_XZ.setflags(write=False)


@dataclass(frozen=True, eq=False)
class FramedPose:
    orientation: np.ndarray
    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "orientation", np.array(self.orientation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "position", np.array(self.position, dtype=float).reshape(3))


def exchange_poses(board: FramedPose, camera: FramedPose):
    """Reflect both poses through ``E_xz`` and swap their roles.

    Returns ``(board', camera')`` with ``board' = (E V, E v)`` and
    ``camera' = (E U, E u)``.
    """
    new_camera = FramedPose(E_XZ @ board.orientation, E_XZ @ board.position)
    new_board = FramedPose(E_XZ @ camera.orientation, E_XZ @ camera.position)
    return new_board, new_camera


def relative_pose(board: FramedPose, camera: FramedPose):
    """``(R_vu, t_vu)`` mapping board coordinates into camera coordinates."""
    V = camera.orientation
    return V.T @ board.orientation, V.T @ (board.position - camera.position)


def corrective_isometry(R_vu, t_vu):
    """``W = R_vu R_vu`` and ``w = (I + R_vu) t_vu``."""
    R = np.asarray(R_vu, dtype=float)
    t = np.asarray(t_vu, dtype=float)
    return R @ R, t + R @ t


def camera_coordinates(board: FramedPose, camera: FramedPose, points) -> np.ndarray:
    """Board points ``(n, 2)`` expressed in the camera frame, ``(n, 3)``."""
    P = np.asarray(points, dtype=float)
    P3 = np.column_stack([P, np.zeros(len(P))])
    world = P3 @ board.orientation.T + board.position
    return (world - camera.position) @ camera.orientation


def image_deviation(board: FramedPose, camera: FramedPose, points) -> float:
    """Largest coordinate gap between the original image and the image of
    the exchanged configuration after the corrective isometry."""
    original = camera_coordinates(board, camera, points)
    new_board, new_camera = exchange_poses(board, camera)
    swapped = camera_coordinates(new_board, new_camera, points)
    W, w = corrective_isometry(*relative_pose(board, camera))
    corrected = swapped @ W.T + w
    a = original[:, :2] / original[:, 2:]
    b = corrected[:, :2] / corrected[:, 2:]
    return float(np.max(np.abs(a - b)))


def _random_rotation(rng: Xorshift64Star):
    axis = rng.unit_vector()
    return cayley_to_matrix(axis * math.tan(0.5 * rng.uniform(0.0, math.radians(179.0))))


def duality_check(seed: int = 0, configurations: int = 100, tolerance: float = 1e-12):
    """Image identity over random board/camera pairs.

    Each configuration draws a relative pose with the board in front of the
    camera, then a random world placement of the camera.

    Returns
    -------
    dict
        ``passed``, ``configurations``, ``max_deviation`` and ``identity``
        (the isometry of the identity relative pose).
    """
    rng = Xorshift64Star(seed)
    points = board_grid(7, 5, 0.1)
    worst = 0.0
    for _ in range(configurations):
        rel = random_pose(rng, points)
        V = _random_rotation(rng)
        v = np.array([rng.uniform(-1.0, 1.0) for _ in range(3)])
        camera = FramedPose(V, v)
        board = FramedPose(V @ rel.rotation, v + V @ rel.translation)
        worst = max(worst, image_deviation(board, camera, points))
    W, w = corrective_isometry(np.eye(3), np.zeros(3))
    return {
        "passed": worst <= tolerance,
        "configurations": configurations,
        "max_deviation": worst,
        "tolerance": tolerance,
        "identity": {"W": W, "w": w},
    }
