"""Quadratic reconstruction-error form of a planar scene.

For a planar board (``Z = 0``) and normalised observations ``p_i`` the
reconstruction error, minimised over the translation, is a quadratic form
in the row-major rotation vector ``r = vec(R)``::

    E^2(r) = 1/2 r^T Omega r,      t(r) = T r

``Omega`` is 9x9 PSD and ``T`` is 3x9. Columns 3, 6 and 9 of both vanish
identically because the board has no ``Z`` extent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .errors import InvalidScene, SingularNormal

#: Condition number of ``sum Q_i`` above which the geometry is degenerate.
MAX_NORMAL_COND = 1e12
#: Zero columns of Omega for a planar board (0-based).
PLANAR_KERNEL = (2, 5, 8)


@dataclass(frozen=True, eq=False)
class PlanarScene:
    """Paired board points ``(n, 2)`` and normalised image points ``(n, 2)``."""

    board_points: np.ndarray
    image_points: np.ndarray

    def __post_init__(self):
        board = np.array(self.board_points, dtype=float)
        image = np.array(self.image_points, dtype=float)
        if board.ndim != 2 or board.shape[1] != 2:
            raise InvalidScene(f"board_points must be (n, 2), got {board.shape}")
        if image.shape != board.shape:
            raise InvalidScene(
                f"image_points {image.shape} do not pair with board_points {board.shape}"
            )
        if board.shape[0] < 4:
            raise InvalidScene(f"need at least 4 correspondences, got {board.shape[0]}")
        if not (np.all(np.isfinite(board)) and np.all(np.isfinite(image))):
            raise InvalidScene("coordinates must be finite")
        centred = board - board.mean(axis=0)
        sv = np.linalg.svd(centred, compute_uv=False)
        if sv[1] <= 1e-12 * max(sv[0], 1e-300):
            raise InvalidScene("board points are collinear")
        board.setflags(write=False)
        image.setflags(write=False)
        object.__setattr__(self, "board_points", board)
        object.__setattr__(self, "image_points", image)

    @property
    def n(self) -> int:
        return self.board_points.shape[0]

    def permuted(self, order) -> "PlanarScene":
        order = np.asarray(order)
        return PlanarScene(self.board_points[order], self.image_points[order])


@dataclass(frozen=True, eq=False)
class OmegaForm:
    omega: np.ndarray
    translation_op: np.ndarray

    def value(self, r) -> float:
        """Reconstruction error ``1/2 r^T Omega r``."""
        r = np.asarray(r, dtype=float).reshape(9)
        return 0.5 * float(r @ self.omega @ r)

    def translation(self, R) -> np.ndarray:
        return self.translation_op @ np.asarray(R, dtype=float).reshape(9)


def build_omega(scene: PlanarScene) -> OmegaForm:
    """Assemble ``Omega`` and the translation operator ``T`` of ``scene``.

    Raises
    ------
    SingularNormal
        If ``sum_i Q_i`` has condition number above ``1e12``.
    """
    board = np.ascontiguousarray(scene.board_points)
    image = np.ascontiguousarray(scene.image_points)
    SQ, SQP = kernels.omega_sums(board, image)
    cond = np.linalg.cond(SQ)
    if not np.isfinite(cond) or cond > MAX_NORMAL_COND:
        raise SingularNormal(f"cond(sum Q_i) = {cond:.3g}")
    try:
        factor = scipy.linalg.cho_factor(SQ)
    except np.linalg.LinAlgError as exc:
        raise SingularNormal(str(exc)) from exc
    T = -scipy.linalg.cho_solve(factor, SQP)
    omega = kernels.omega_assemble(board, image, np.ascontiguousarray(T))
    omega = 0.5 * (omega + omega.T)
    omega.setflags(write=False)
    T.setflags(write=False)
    return OmegaForm(omega, T)


def explicit_reconstruction_error(scene: PlanarScene, R, t) -> float:
    """``1/2 sum_i |p_i (R P_i + t)_z - (R P_i + t)|^2`` evaluated point by point."""
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float)
    total = 0.0
    for (X, Y), (x, y) in zip(scene.board_points, scene.image_points):
        q = R @ np.array([X, Y, 0.0]) + t
        p = np.array([x, y, 1.0])
        total += float(np.sum((p * q[2] - q) ** 2))
    return 0.5 * total


def _normalise_signs(vectors):
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0:
            out[:, j] = -col
    return out


def omega_spectrum(form: OmegaForm):
    """Eigenvalues (ascending) and eigenvectors (columns) of ``Omega``.

    Eigenvector signs are fixed so that each column's largest-magnitude
    entry is positive.
    """
    omega = np.asarray(form.omega if isinstance(form, OmegaForm) else form, dtype=float)
    if not np.allclose(omega, omega.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(omega).max())):
        raise ValueError("Omega is not symmetric")
    w, V = np.linalg.eigh(0.5 * (omega + omega.T))
    order = np.argsort(w, kind="stable")
    return w[order], _normalise_signs(V[:, order])


def canonical_diagonal(form: OmegaForm):
    """Diagonal of ``Omega`` and its ascending sort permutation.

    The permutation is 0-based; ``diag[perm[k]]`` is the k-th smallest
    entry. Ties keep index order.
    """
    diag = np.diag(form.omega).copy()
    perm = np.argsort(diag, kind="stable")
    return diag, perm


def min_positive_diagonal_index(form: OmegaForm, tol=1e-12) -> int:
    """1-based index of the smallest diagonal entry above ``tol * max(diag)``."""
    diag = np.diag(form.omega)
    thresh = tol * max(float(diag.max()), 1e-300)
    candidates = [i for i in np.argsort(diag, kind="stable") if diag[i] > thresh]
    return int(candidates[0]) + 1


def kernel_norms(form: OmegaForm):
    """``|Omega e_k|`` and ``|T e_k|`` for the planar kernel columns 3, 6, 9."""
    return {
        k + 1: (
            float(np.linalg.norm(form.omega[:, k])),
            float(np.linalg.norm(form.translation_op[:, k])),
        )
        for k in PLANAR_KERNEL
    }


def whitened_scene(scene: PlanarScene) -> PlanarScene:
    """Scene with board coordinates centred and whitened.

    The board scatter matrix becomes the 2x2 identity. Omega built on the
    whitened board is scale-free; its spectrum has four near-zero values,
    two small ones and three close to one.
    """
    board = scene.board_points - scene.board_points.mean(axis=0)
    L = np.linalg.cholesky(board.T @ board)
    return PlanarScene(scipy.linalg.solve_triangular(L, board.T, lower=True).T, scene.image_points)
