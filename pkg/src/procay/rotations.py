"""Cayley rotation algebra and the Procrustes+ nearest-rotation solver.

Conventions
-----------
* ``hat(u) @ x == np.cross(u, x)``.
* The Cayley map is ``R(v) = (I + hat(v)) (I - hat(v))^-1``, a rotation
  about ``v`` by ``2 * arctan(|v|)``.
* Matrices are flattened row-major when a 9-vector is needed
  (``r = R.ravel()``), so ``e7`` addresses ``R[2, 0]``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateRotation, RankDeficient, ZeroVector

#: ``|trace(R) + 1|`` below this is treated as a rotation by pi.
DEGENERATE_TRACE_TOL = 1e-9
#: Singular values below this count as zero for the uniqueness test.
RANK_TOL = 1e-9


def hat(u) -> np.ndarray:
    """Skew-symmetric matrix of ``u`` such that ``hat(u) @ x = u x x``."""
    ux, uy, uz = np.asarray(u, dtype=float)
    return np.array([[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]])


def vee(S) -> np.ndarray:
    """Inverse of :func:`hat`, reading the strictly skew part of ``S``."""
    S = np.asarray(S, dtype=float)
    return 0.5 * np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]])


def cayley_to_matrix(v) -> np.ndarray:
    """Rotation matrix of the Cayley vector ``v``.

    Uses the closed form ``[(1 - |v|^2) I + 2 v v^T + 2 hat(v)] / (1 + |v|^2)``,
    which is defined for every finite ``v``.
    """
    v = np.asarray(v, dtype=float).reshape(3)
    s = float(v @ v)
    R = (1.0 - s) * np.eye(3) + 2.0 * np.outer(v, v) + 2.0 * hat(v)
    return R / (1.0 + s)


def matrix_to_cayley(R) -> np.ndarray:
    """Cayley vector of the rotation ``R``.

    The skew matrix ``(R + I)^-1 (R - I)`` equals ``hat(v)``; in closed form
    ``v = vee(R - R^T) / (1 + trace(R))``.

    Raises
    ------
    DegenerateRotation
        If ``|trace(R) + 1| < 1e-9`` (rotation by pi, no Cayley vector).
    """
    R = np.asarray(R, dtype=float)
    denom = 1.0 + float(np.trace(R))
    if abs(denom) < DEGENERATE_TRACE_TOL:
        raise DegenerateRotation(
            f"trace(R) = {denom - 1.0:.17g}; R + I is singular"
        )
    skew = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return skew / denom


def angle_axis(v):
    """Rotation angle in radians and unit axis of the Cayley vector ``v``."""
    v = np.asarray(v, dtype=float).reshape(3)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVector("identity rotation has no axis")
    return 2.0 * math.atan(norm), v / norm


def is_rotation(R, tol=1e-12) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    ortho = np.linalg.norm(R.T @ R - np.eye(3))
    return bool(ortho <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


def _svd(A, allow_rank_deficient):
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    # numpy returns singular values in descending order
    U, s, Vt = np.linalg.svd(A)
    if not allow_rank_deficient and s[1] < RANK_TOL and s[2] < RANK_TOL:
        raise RankDeficient(
            f"singular values {s[1]:.3g}, {s[2]:.3g} both vanish; nearest "
            "rotation is not unique"
        )
    d = 1.0 if np.linalg.det(U @ Vt) > 0.0 else -1.0
    return U, s, Vt, d


def procrustes_plus(A, *, allow_rank_deficient=False):
    """Nearest rotation to ``A`` in the Frobenius norm.

    ``R = U D V^T`` with ``D = I`` when ``det(U V^T) = +1`` and
    ``D = diag(1, 1, -1)`` otherwise (the Umeyama correction).

    Parameters
    ----------
    A : (3, 3) array_like
    allow_rank_deficient : bool
        Rank <= 1 inputs have infinitely many minimisers. By default they
        are rejected; with ``True`` the minimiser selected by the LAPACK SVD
        is returned. The canonical start table relies on this.

    Returns
    -------
    R : ndarray
    corrected : bool
        Whether the determinant correction was applied.
    """
    U, _, Vt, d = _svd(A, allow_rank_deficient)
    R = U @ np.diag([1.0, 1.0, d]) @ Vt
    return R, d < 0.0


def antipodal_rotation(A, R, *, allow_rank_deficient=False) -> np.ndarray:
    """Nearest rotation to ``-R`` where ``R = procrustes_plus(A)``.

    Negating ``R`` flips its determinant; the correction keeps the largest
    two singular directions negated and restores the last one, so the
    result is ``[-u1, -u2, d u3] V^T``.
    """
    U, _, Vt, d = _svd(A, allow_rank_deficient)
    R = np.asarray(R, dtype=float)
    expected = U @ np.diag([1.0, 1.0, d]) @ Vt
    if np.linalg.norm(R - expected) > 1e-9:
        raise ValueError("R is not the Procrustes+ solution for A")
    return U @ np.diag([-1.0, -1.0, d]) @ Vt


def canonical_start(index: int):
    """Nearest rotation data for the canonical point ``sqrt(3) e_index``.

    ``index`` is 1-based as in the row-major flattening of ``R``.

    Returns
    -------
    dict with keys ``E`` (3x3), ``R``, ``v``, ``R_anti`` and ``v_anti``; the
    last is ``None`` when the antipode is a rotation by pi.
    """
    if not 1 <= index <= 9:
        raise ValueError("index must be in 1..9")
    e = np.zeros(9)
    e[index - 1] = math.sqrt(3.0)
    E = e.reshape(3, 3)
    R, _ = procrustes_plus(E, allow_rank_deficient=True)
    R_anti = antipodal_rotation(E, R, allow_rank_deficient=True)
    try:
        v_anti = matrix_to_cayley(R_anti)
    except DegenerateRotation:
        v_anti = None
    return {
        "E": E,
        "R": R,
        "v": matrix_to_cayley(R),
        "R_anti": R_anti,
        "v_anti": v_anti,
    }
