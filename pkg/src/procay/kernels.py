"""Hot numeric kernels.

Each kernel exists as an explicit-loop function (``*_loop``, compiled with
numba when available) and a vectorised numpy function (``*_numpy``). The
public names at the bottom of the module are bound to one family according
to :data:`procay._accel.USE_NUMBA`; both families are importable so tests
and the benchmark can compare them.

Inputs are plain float64 arrays: ``board`` is ``(n, 2)`` board coordinates
(``Z = 0``), ``image`` is ``(n, 2)`` normalised image coordinates, ``T`` is
the ``(3, 9)`` translation operator and ``v`` a Cayley 3-vector. Residual
kernels report the first point with depth ``<= DEPTH_EPS`` as ``bad >= 0``
instead of raising, since compiled code cannot raise rich exceptions.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

DEPTH_EPS = 1e-12


# -- explicit loops (numba) -------------------------------------------------


def _cayley_loop(v):
    vx, vy, vz = v[0], v[1], v[2]
    s = vx * vx + vy * vy + vz * vz
    d = 1.0 + s
    R = np.empty((3, 3))
    R[0, 0] = (1.0 - s + 2.0 * vx * vx) / d
    R[0, 1] = 2.0 * (vx * vy - vz) / d
    R[0, 2] = 2.0 * (vx * vz + vy) / d
    R[1, 0] = 2.0 * (vx * vy + vz) / d
    R[1, 1] = (1.0 - s + 2.0 * vy * vy) / d
    R[1, 2] = 2.0 * (vy * vz - vx) / d
    R[2, 0] = 2.0 * (vx * vz - vy) / d
    R[2, 1] = 2.0 * (vy * vz + vx) / d
    R[2, 2] = (1.0 - s + 2.0 * vz * vz) / d
    return R


_cayley_jit = njit(_cayley_loop)


def _cayley_grad_loop(v, R):
    # dR/dv_k = (dN/dv_k - 2 v_k R) / (1 + |v|^2), N the unnormalised numerator
    d = 1.0 + v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    G = np.zeros((3, 3, 3))
    for k in range(3):
        for a in range(3):
            G[k, a, a] = -2.0 * v[k]
            G[k, a, k] += 2.0 * v[a]
            G[k, k, a] += 2.0 * v[a]
    # 2 * hat(e_k)
    G[0, 1, 2] -= 2.0
    G[0, 2, 1] += 2.0
    G[1, 0, 2] += 2.0
    G[1, 2, 0] -= 2.0
    G[2, 0, 1] -= 2.0
    G[2, 1, 0] += 2.0
    for k in range(3):
        for a in range(3):
            for b in range(3):
                G[k, a, b] = (G[k, a, b] - 2.0 * v[k] * R[a, b]) / d
    return G


_cayley_grad_jit = njit(_cayley_grad_loop)


def _translation_loop(T, R):
    t = np.zeros(3)
    for a in range(3):
        acc = 0.0
        for j in range(9):
            acc += T[a, j] * R[j // 3, j % 3]
        t[a] = acc
    return t


_translation_jit = njit(_translation_loop)


def omega_sums_loop(board, image):
    n = board.shape[0]
    SQ = np.zeros((3, 3))
    SQP = np.zeros((3, 9))
    for i in range(n):
        X, Y = board[i, 0], board[i, 1]
        x, y = image[i, 0], image[i, 1]
        q = np.empty((3, 3))
        q[0, 0] = 1.0
        q[0, 1] = 0.0
        q[0, 2] = -x
        q[1, 0] = 0.0
        q[1, 1] = 1.0
        q[1, 2] = -y
        q[2, 0] = -x
        q[2, 1] = -y
        q[2, 2] = x * x + y * y
        for a in range(3):
            for b in range(3):
                SQ[a, b] += q[a, b]
                SQP[a, 3 * b] += q[a, b] * X
                SQP[a, 3 * b + 1] += q[a, b] * Y
    return SQ, SQP


def omega_assemble_loop(board, image, T):
    n = board.shape[0]
    omega = np.zeros((9, 9))
    M = np.empty((3, 9))
    b1 = np.empty(9)
    b2 = np.empty(9)
    for i in range(n):
        X, Y = board[i, 0], board[i, 1]
        x, y = image[i, 0], image[i, 1]
        for a in range(3):
            for j in range(9):
                M[a, j] = T[a, j]
            M[a, 3 * a] += X
            M[a, 3 * a + 1] += Y
        # rows of (p e3^T - I) M; the third row vanishes
        for j in range(9):
            b1[j] = x * M[2, j] - M[0, j]
            b2[j] = y * M[2, j] - M[1, j]
        for j in range(9):
            for k in range(j, 9):
                omega[j, k] += b1[j] * b1[k] + b2[j] * b2[k]
    for j in range(9):
        for k in range(j):
            omega[j, k] = omega[k, j]
    return omega


def projection_residuals_loop(v, board, image, T):
    n = board.shape[0]
    R = _cayley_jit(v)
    t = _translation_jit(T, R)
    res = np.empty(2 * n)
    bad = -1
    bad_depth = 0.0
    for i in range(n):
        X, Y = board[i, 0], board[i, 1]
        qx = R[0, 0] * X + R[0, 1] * Y + t[0]
        qy = R[1, 0] * X + R[1, 1] * Y + t[1]
        qz = R[2, 0] * X + R[2, 1] * Y + t[2]
        if qz <= DEPTH_EPS:
            if bad < 0:
                bad = i
                bad_depth = qz
            res[2 * i] = np.nan
            res[2 * i + 1] = np.nan
            continue
        res[2 * i] = qx / qz - image[i, 0]
        res[2 * i + 1] = qy / qz - image[i, 1]
    return res, bad, bad_depth


def projection_jacobian_loop(v, board, image, T):
    n = board.shape[0]
    R = _cayley_jit(v)
    G = _cayley_grad_jit(v, R)
    t = _translation_jit(T, R)
    dt = np.zeros((3, 3))  # dt[k] = T vec(dR/dv_k)
    for k in range(3):
        dt[k] = _translation_jit(T, G[k])
    res = np.empty(2 * n)
    J = np.zeros((2 * n, 3))
    bad = -1
    bad_depth = 0.0
    for i in range(n):
        X, Y = board[i, 0], board[i, 1]
        qx = R[0, 0] * X + R[0, 1] * Y + t[0]
        qy = R[1, 0] * X + R[1, 1] * Y + t[1]
        qz = R[2, 0] * X + R[2, 1] * Y + t[2]
        if qz <= DEPTH_EPS:
            if bad < 0:
                bad = i
                bad_depth = qz
            res[2 * i] = np.nan
            res[2 * i + 1] = np.nan
            continue
        inv = 1.0 / qz
        res[2 * i] = qx * inv - image[i, 0]
        res[2 * i + 1] = qy * inv - image[i, 1]
        for k in range(3):
            dqx = G[k, 0, 0] * X + G[k, 0, 1] * Y + dt[k, 0]
            dqy = G[k, 1, 0] * X + G[k, 1, 1] * Y + dt[k, 1]
            dqz = G[k, 2, 0] * X + G[k, 2, 1] * Y + dt[k, 2]
            J[2 * i, k] = (dqx - qx * inv * dqz) * inv
            J[2 * i + 1, k] = (dqy - qy * inv * dqz) * inv
    return res, J, bad, bad_depth


def reconstruction_residuals_loop(v, board, image, T):
    n = board.shape[0]
    R = _cayley_jit(v)
    t = _translation_jit(T, R)
    res = np.empty(2 * n)
    for i in range(n):
        X, Y = board[i, 0], board[i, 1]
        qx = R[0, 0] * X + R[0, 1] * Y + t[0]
        qy = R[1, 0] * X + R[1, 1] * Y + t[1]
        qz = R[2, 0] * X + R[2, 1] * Y + t[2]
        res[2 * i] = image[i, 0] * qz - qx
        res[2 * i + 1] = image[i, 1] * qz - qy
    return res


# -- vectorised numpy --------------------------------------------------------


def _cayley_numpy(v):
    vx, vy, vz = v
    s = vx * vx + vy * vy + vz * vz
    N = np.array(
        [
            [1.0 - s + 2.0 * vx * vx, 2.0 * (vx * vy - vz), 2.0 * (vx * vz + vy)],
            [2.0 * (vx * vy + vz), 1.0 - s + 2.0 * vy * vy, 2.0 * (vy * vz - vx)],
            [2.0 * (vx * vz - vy), 2.0 * (vy * vz + vx), 1.0 - s + 2.0 * vz * vz],
        ]
    )
    return N / (1.0 + s)


_HAT_BASIS = np.array(
    [
        [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]],
        [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    ]
)


def _cayley_grad_numpy(v, R):
    eye = np.eye(3)
    outer = eye[:, :, None] * v[None, None, :]  # outer[k, a, b] = delta_ka v_b
    dN = -2.0 * v[:, None, None] * eye + 2.0 * (outer + outer.transpose(0, 2, 1))
    dN += 2.0 * _HAT_BASIS
    return (dN - 2.0 * v[:, None, None] * R) / (1.0 + v @ v)


def _transform_numpy(v, board, T):
    R = _cayley_numpy(v)
    t = T @ R.ravel()
    Q = board @ R[:, :2].T + t
    return R, Q


def omega_sums_numpy(board, image):
    x, y = image[:, 0], image[:, 1]
    n = board.shape[0]
    q = np.zeros((n, 3, 3))
    q[:, 0, 0] = 1.0
    q[:, 1, 1] = 1.0
    q[:, 0, 2] = q[:, 2, 0] = -x
    q[:, 1, 2] = q[:, 2, 1] = -y
    q[:, 2, 2] = x * x + y * y
    SQ = q.sum(axis=0)
    P3 = np.zeros((n, 3))
    P3[:, :2] = board
    SQP = np.einsum("iab,ic->abc", q, P3).reshape(3, 9)
    return SQ, SQP


def omega_assemble_numpy(board, image, T):
    n = board.shape[0]
    M = np.broadcast_to(T, (n, 3, 9)).copy()
    for a in range(3):
        M[:, a, 3 * a : 3 * a + 2] += board
    B1 = image[:, 0, None] * M[:, 2] - M[:, 0]
    B2 = image[:, 1, None] * M[:, 2] - M[:, 1]
    omega = B1.T @ B1 + B2.T @ B2
    return 0.5 * (omega + omega.T)


def _first_bad(depth):
    bad = np.flatnonzero(depth <= DEPTH_EPS)
    if bad.size:
        return int(bad[0]), float(depth[bad[0]])
    return -1, 0.0


def projection_residuals_numpy(v, board, image, T):
    _, Q = _transform_numpy(v, board, T)
    bad, bad_depth = _first_bad(Q[:, 2])
    with np.errstate(divide="ignore", invalid="ignore"):
        res = Q[:, :2] / Q[:, 2:] - image
    if bad >= 0:
        res[Q[:, 2] <= DEPTH_EPS] = np.nan
    return res.ravel(), bad, bad_depth


def projection_jacobian_numpy(v, board, image, T):
    R, Q = _transform_numpy(v, board, T)
    G = _cayley_grad_numpy(v, R)
    dt = G.reshape(3, 9) @ T.T  # (k, 3)
    dQ = np.einsum("kab,ib->ika", G[:, :, :2], board) + dt[None]  # (n, k, 3)
    bad, bad_depth = _first_bad(Q[:, 2])
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / Q[:, 2]
        proj = Q[:, :2] * inv[:, None]
        res = proj - image
        J = (dQ[:, :, :2] - proj[:, None, :] * dQ[:, :, 2:]) * inv[:, None, None]
    J = J.transpose(0, 2, 1).reshape(-1, 3)
    if bad >= 0:
        mask = Q[:, 2] <= DEPTH_EPS
        res[mask] = np.nan
        J[np.repeat(mask, 2)] = 0.0
    return res.ravel(), J, bad, bad_depth


def reconstruction_residuals_numpy(v, board, image, T):
    _, Q = _transform_numpy(v, board, T)
    return (image * Q[:, 2:] - Q[:, :2]).ravel()


LOOP_KERNELS = {
    "omega_sums": njit(omega_sums_loop),
    "omega_assemble": njit(omega_assemble_loop),
    "projection_residuals": njit(projection_residuals_loop),
    "projection_jacobian": njit(projection_jacobian_loop),
    "reconstruction_residuals": njit(reconstruction_residuals_loop),
}

NUMPY_KERNELS = {
    "omega_sums": omega_sums_numpy,
    "omega_assemble": omega_assemble_numpy,
    "projection_residuals": projection_residuals_numpy,
    "projection_jacobian": projection_jacobian_numpy,
    "reconstruction_residuals": reconstruction_residuals_numpy,
}

ACTIVE = LOOP_KERNELS if USE_NUMBA else NUMPY_KERNELS
BACKEND = "numba" if USE_NUMBA else "numpy"

omega_sums = ACTIVE["omega_sums"]
omega_assemble = ACTIVE["omega_assemble"]
projection_residuals = ACTIVE["projection_residuals"]
projection_jacobian = ACTIVE["projection_jacobian"]
reconstruction_residuals = ACTIVE["reconstruction_residuals"]
