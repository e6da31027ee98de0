"""Synthetic planar scenes with ground truth, and pixel scaling.

Random numbers come from xorshift64* seeded through splitmix64, so every
fixture can be regenerated bit for bit in another language:

* ``splitmix64``: ``z += 0x9E3779B97F4A7C15``;
  ``z = (z ^ z >> 30) * 0xBF58476D1CE4E5B9``;
  ``z = (z ^ z >> 27) * 0x94D049BB133111EB``; ``z ^ z >> 31``.
* ``xorshift64*``: ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27``, output
  ``x * 0x2545F4914F6CDD1D``, all modulo 2**64.
* uniform: ``(out >> 11) * 2**-53`` in ``[0, 1)``.
* normal: Box-Muller on ``u1 = 1 - uniform()``, ``u2 = uniform()``, giving
  ``sqrt(-2 ln u1) cos(2 pi u2)`` then ``sqrt(-2 ln u1) sin(2 pi u2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CheiralityViolation, InvalidScene
from .omega import PlanarScene
from .residuals import Pose
from .rotations import cayley_to_matrix

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STAR = 0x2545F4914F6CDD1D


def splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class Xorshift64Star:
    """Small deterministic generator; see the module docstring for constants."""

    def __init__(self, seed: int = 0):
        seed = int(seed)
        if not 0 <= seed <= _MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")
        # splitmix64 never maps to 0 twice in a row, so one retry suffices
        state = splitmix64(seed) or splitmix64(seed ^ _MASK)
        self._state = state
        self._spare = None

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self._state = x
        return (x * _STAR) & _MASK

    def uniform(self, low=0.0, high=1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return low + (high - low) * u

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare = r * math.sin(theta)
        return r * math.cos(theta)

    def normals(self, n: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(n)])

    def unit_vector(self) -> np.ndarray:
        while True:
            u = self.normals(3)
            norm = float(np.linalg.norm(u))
            if norm > 1e-8:
                return u / norm


def board_grid(cols: int, rows: int, square: float) -> np.ndarray:
    """Centred ``rows x cols`` grid, row-major (x fastest), shape ``(n, 2)``."""
    if cols < 2 or rows < 2:
        raise InvalidScene("grid must be at least 2x2")
    if not square > 0:
        raise InvalidScene("square size must be positive")
    xs = (np.arange(cols) - 0.5 * (cols - 1)) * square
    ys = (np.arange(rows) - 0.5 * (rows - 1)) * square
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()])


@dataclass(frozen=True, eq=False)
class SynthSpec:
    grid_cols: int
    grid_rows: int
    square_size: float
    pose: Pose
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")


def pose_from_cayley(v, t) -> Pose:
    return Pose(cayley_to_matrix(v), np.asarray(t, dtype=float).reshape(3).copy())


def project_points(pose: Pose, board) -> np.ndarray:
    """Pinhole projection of board points, written out per point.

    Deliberately independent of the solver kernels; tests use it as the
    reference projection.

    Raises
    ------
    CheiralityViolation
        If some point has depth ``<= 0``.
    """
    R = np.asarray(pose.rotation, dtype=float)
    t = np.asarray(pose.translation, dtype=float)
    out = np.empty((len(board), 2))
    for i, (X, Y) in enumerate(board):
        q = R @ np.array([X, Y, 0.0]) + t
        if not q[2] > 0.0:
            raise CheiralityViolation(f"board point {i} has depth {q[2]:.6g}")
        out[i] = q[0] / q[2], q[1] / q[2]
    return out


def generate_scene(spec: SynthSpec):
    """Render a synthetic scene.

    Noise is added in the normalised plane, x then y for each point in grid
    order, from a generator seeded with ``spec.seed``.

    Returns
    -------
    scene : PlanarScene
    truth : Pose
    """
    board = board_grid(spec.grid_cols, spec.grid_rows, spec.square_size)
    image = project_points(spec.pose, board)
    if spec.noise_sigma > 0:
        rng = Xorshift64Star(spec.seed)
        image = image + spec.noise_sigma * rng.normals(image.size).reshape(image.shape)
    return PlanarScene(board, image), spec.pose


def random_pose(
    rng: Xorshift64Star,
    board,
    *,
    max_angle: float = math.radians(160.0),
    distance=(2.0, 5.0),
    lateral: float = 0.2,
    min_depth: float = 0.05,
    max_tries: int = 1000,
) -> Pose:
    """Random board pose in front of the camera.

    The rotation has a uniformly random axis and an angle uniform in
    ``[0, max_angle]``. The board centre sits at depth ``d`` drawn from
    ``distance`` (in board diagonals), shifted sideways by up to
    ``lateral * d``. Draws leaving any point closer than
    ``min_depth`` diagonals are rejected.
    """
    board = np.asarray(board, dtype=float)
    diag = float(np.linalg.norm(board.max(axis=0) - board.min(axis=0)))
    centre = board.mean(axis=0)
    for _ in range(max_tries):
        axis = rng.unit_vector()
        angle = rng.uniform(0.0, max_angle)
        v = axis * math.tan(0.5 * angle)
        R = cayley_to_matrix(v)
        d = rng.uniform(*distance) * diag
        offset = np.array([rng.uniform(-lateral, lateral) * d, rng.uniform(-lateral, lateral) * d, d])
        t = offset - R[:, :2] @ centre
        depths = board @ R[2, :2] + t[2]
        if depths.min() > min_depth * diag:
            return Pose(R, t)
    raise CheiralityViolation("could not draw a pose with the board in front of the camera")


def pixels_to_normalized(points, f_pixel: float, principal_point=(0.0, 0.0)) -> np.ndarray:
    """``(px - c) / f`` per coordinate."""
    if not f_pixel > 0:
        raise ValueError("f_pixel must be positive")
    return (np.asarray(points, dtype=float) - np.asarray(principal_point, dtype=float)) / f_pixel


def normalized_to_pixels(points, f_pixel: float, principal_point=(0.0, 0.0)) -> np.ndarray:
    """Inverse of :func:`pixels_to_normalized`."""
    if not f_pixel > 0:
        raise ValueError("f_pixel must be positive")
    return np.asarray(points, dtype=float) * f_pixel + np.asarray(principal_point, dtype=float)
