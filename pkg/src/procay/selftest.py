"""Embedded invariant suite behind ``procay selftest``.

Each property is a small, seeded check that raises ``AssertionError`` on
failure. The whole suite runs in a few seconds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import kernels
from .correspondence import CorrespondenceFile, dumps, loads
from .duality import E_XZ, corrective_isometry, duality_check
from .errors import DegenerateRotation, EmptyInput, NonPositiveDepth
from .lsq import LsqConfig, lsq_solve, numeric_jacobian
from .omega import build_omega, explicit_reconstruction_error, kernel_norms
from .residuals import error_stats, projection_jacobian, projection_residuals, reconstruction_residuals
from .rotations import (
    angle_axis,
    antipodal_rotation,
    canonical_start,
    cayley_to_matrix,
    matrix_to_cayley,
    procrustes_plus,
)
from .solver import StartIndex, choose_start, solve_pnp_procay78
from .synth import SynthSpec, Xorshift64Star, board_grid, generate_scene, random_pose
from .viz import radial_circular, radial_circular_inverse, sign_prime


@dataclass
class PropertyResult:
    name: str
    passed: bool
    seconds: float
    detail: str = ""


PROPERTIES: List = []


def prop(fn: Callable):
    PROPERTIES.append(fn)
    return fn


def _vectors(seed, n, scale=1.0):
    return np.random.default_rng(seed).normal(scale=scale, size=(n, 3))


def _scene(seed, max_angle=math.radians(60.0), noise=0.0):
    rng = Xorshift64Star(seed)
    board = board_grid(8, 6, 0.03)
    pose = random_pose(rng, board, max_angle=max_angle)
    return generate_scene(SynthSpec(8, 6, 0.03, pose, noise, seed))


@prop
def cayley_round_trip():
    for v in _vectors(1, 500):
        assert np.allclose(matrix_to_cayley(cayley_to_matrix(v)), v, rtol=1e-10, atol=1e-12)


@prop
def cayley_is_rotation():
    for v in _vectors(2, 500, 3.0):
        R = cayley_to_matrix(v)
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(R) - 1.0) < 1e-12


@prop
def cayley_negation_is_inverse():
    for v in _vectors(3, 500):
        assert np.abs(cayley_to_matrix(-v) - cayley_to_matrix(v).T).max() < 1e-14


@prop
def cayley_axis_fixed():
    for v in _vectors(4, 500):
        assert np.abs(cayley_to_matrix(v) @ v - v).max() < 1e-12 * max(1.0, np.linalg.norm(v))


@prop
def cayley_half_angle():
    for v in _vectors(5, 500):
        angle, _ = angle_axis(v)
        R = cayley_to_matrix(v)
        cos = 0.5 * (np.trace(R) - 1.0)
        assert abs(math.cos(angle) - cos) < 1e-12
        assert abs(math.tan(0.5 * angle) - np.linalg.norm(v)) < 1e-12 * max(1.0, np.linalg.norm(v))


@prop
def half_turn_is_degenerate():
    try:
        matrix_to_cayley(np.diag([1.0, -1.0, -1.0]))
    except DegenerateRotation:
        return
    raise AssertionError("no DegenerateRotation for a half turn")


@prop
def canonical_starts():
    c7, c8 = canonical_start(7), canonical_start(8)
    assert np.array_equal(c7["v"], [0.0, -1.0, 0.0]) and np.array_equal(c7["v_anti"], [0.0, 1.0, 0.0])
    assert np.array_equal(c8["v"], [1.0, 0.0, 0.0]) and np.array_equal(c8["v_anti"], [-1.0, 0.0, 0.0])
    assert canonical_start(9)["v_anti"] is None


@prop
def procrustes_beats_samples():
    rng = np.random.default_rng(6)
    for _ in range(50):
        A = rng.normal(size=(3, 3))
        R, _ = procrustes_plus(A)
        best = np.linalg.norm(R - A)
        for v in rng.normal(size=(200, 3)):
            assert best <= np.linalg.norm(cayley_to_matrix(v) - A) + 1e-12


@prop
def antipode_is_rotation():
    rng = np.random.default_rng(7)
    for _ in range(50):
        A = rng.normal(size=(3, 3))
        R, _ = procrustes_plus(A)
        S = antipodal_rotation(A, R)
        assert np.abs(S.T @ S - np.eye(3)).max() < 1e-12 and np.linalg.det(S) > 0


@prop
def omega_matches_explicit_error():
    for seed in range(10):
        scene, truth = _scene(seed, noise=1e-3)
        form = build_omega(scene)
        R = cayley_to_matrix(_vectors(seed, 1)[0])
        explicit = explicit_reconstruction_error(scene, R, form.translation(R))
        assert abs(form.value(R.ravel()) - explicit) <= 1e-10 * explicit


@prop
def omega_planar_kernel():
    scene, _ = _scene(11)
    for a, b in kernel_norms(build_omega(scene)).values():
        assert a <= 1e-12 and b <= 1e-12


@prop
def omega_psd_rank():
    # noiseless: the three planar columns plus the true rotation span the kernel
    for noise, rank in ((0.0, 5), (1e-3, 6)):
        scene, _ = _scene(12, noise=noise)
        w = np.linalg.eigvalsh(build_omega(scene).omega)
        assert w.min() > -1e-12 * w.max()
        assert int(np.sum(w > 1e-10 * w.max())) == rank


@prop
def residuals_vanish_at_truth():
    scene, truth = _scene(13)
    T = build_omega(scene).translation_op
    v = matrix_to_cayley(truth.rotation)
    assert np.abs(projection_residuals(v, scene, T)).max() < 1e-12
    assert np.abs(reconstruction_residuals(v, scene, T)).max() < 1e-12


@prop
def residual_forms_related_by_depth():
    scene, _ = _scene(14, noise=1e-3)
    T = build_omega(scene).translation_op
    v = _vectors(14, 1, 0.1)[0]
    R = cayley_to_matrix(v)
    t = T @ R.ravel()
    depth = scene.board_points @ R[2, :2] + t[2]
    proj = projection_residuals(v, scene, T).reshape(-1, 2)
    rec = reconstruction_residuals(v, scene, T).reshape(-1, 2)
    assert np.abs(rec + depth[:, None] * proj).max() < 1e-10


@prop
def jacobian_matches_differences():
    scene, _ = _scene(15, noise=1e-3)
    T = build_omega(scene).translation_op
    v = _vectors(15, 1, 0.2)[0]
    J = projection_jacobian(v, scene, T)
    Jn = numeric_jacobian(lambda u: projection_residuals(u, scene, T), v, 1e-6)
    assert np.abs(J - Jn).max() < 1e-5


@prop
def behind_camera_detected():
    scene, _ = _scene(16)
    T = np.zeros((3, 9))
    try:
        projection_residuals(np.zeros(3), scene, T)
    except NonPositiveDepth:
        return
    raise AssertionError("zero depth accepted")


@prop
def error_stats_examples():
    s = error_stats([3.0, 4.0, 0.0, 0.0])
    assert abs(s.rmse - math.sqrt(12.5)) < 1e-15 and s.median == 2.5 and s.max == 5.0
    try:
        error_stats([])
    except EmptyInput:
        return
    raise AssertionError("empty input accepted")


@prop
def lsq_linear_and_rosenbrock():
    for method in ("lm", "trf"):
        cfg = LsqConfig(method=method)
        v, cost, _ = lsq_solve(lambda u: u - np.array([1.0, 2.0, 3.0]), np.zeros(3), cfg)
        assert cost <= 1e-20 and np.allclose(v, [1, 2, 3], atol=1e-10)
        ros = lambda u: np.array([10.0 * (u[1] - u[0] ** 2), 1.0 - u[0], u[2]])  # noqa: E731
        v, _, _ = lsq_solve(ros, [-1.2, 1.0, 1.0], cfg)
        assert np.abs(v - [1.0, 1.0, 0.0]).max() < 1e-6


@prop
def start_rule():
    assert choose_start(0.0004, 0.0006)[0] is StartIndex.E7
    assert choose_start(0.0006, 0.0004)[0] is StartIndex.E8
    assert choose_start(0.5, 0.5)[0] is StartIndex.E8


@prop
def noiseless_recovery():
    for seed in range(20, 30):
        scene, truth = _scene(seed)
        sol = solve_pnp_procay78(scene)
        assert np.linalg.norm(sol.pose.rotation - truth.rotation) <= 1e-8
        assert np.linalg.norm(sol.pose.translation - truth.translation) <= 1e-8 * np.linalg.norm(truth.translation)


@prop
def lm_trf_agree():
    for seed in range(30, 36):
        scene, _ = _scene(seed)
        a = solve_pnp_procay78(scene, LsqConfig(method="lm")).cayley
        b = solve_pnp_procay78(scene, LsqConfig(method="trf")).cayley
        assert np.abs(a - b).max() <= 1e-6


@prop
def starts_are_antipodal():
    scene, _ = _scene(36)
    sol = solve_pnp_procay78(scene)
    p, a = sol.traces[0].start, sol.traces[1].start
    assert np.array_equal(p, -a)
    assert np.abs(cayley_to_matrix(p) - cayley_to_matrix(a).T).max() < 1e-15


@prop
def duality_identity():
    assert duality_check(0, 100)["max_deviation"] <= 1e-12
    assert np.array_equal(E_XZ @ E_XZ, np.eye(3))
    W, w = corrective_isometry(np.eye(3), np.zeros(3))
    assert np.array_equal(W, np.eye(3)) and np.array_equal(w, np.zeros(3))


@prop
def radial_circular_round_trip():
    assert sign_prime(-0.0) == -1.0 and sign_prime(0.0) == 1.0
    for v in _vectors(40, 2000):
        v[2] = np.round(v[2], 1)  # keep |v_z| away from the lossy band near zero
        back = radial_circular_inverse(radial_circular(v))
        assert np.abs(back - v).max() <= 1e-12
    back = radial_circular_inverse(radial_circular([3.0, 4.0, -0.0]))
    assert np.signbit(back[2])


@prop
def correspondence_round_trip():
    scene, truth = _scene(41, noise=1e-4)
    doc = CorrespondenceFile(scene.board_points * 1e6, scene.image_points * 1e-6, 2175.0, truth)
    back = loads(dumps(doc))
    assert np.array_equal(back.board_points, doc.board_points)
    assert np.array_equal(back.image_points, doc.image_points)
    assert np.array_equal(back.ground_truth.rotation, truth.rotation)


@prop
def generator_reproducible():
    a = [Xorshift64Star(42).next_u64() for _ in range(3)]
    b = [Xorshift64Star(42).next_u64() for _ in range(3)]
    assert a == b
    s1, _ = _scene(43, noise=1e-3)
    s2, _ = _scene(43, noise=1e-3)
    assert np.array_equal(s1.image_points, s2.image_points)


@prop
def kernel_backends_agree():
    scene, _ = _scene(44, noise=1e-3)
    T = np.ascontiguousarray(build_omega(scene).translation_op)
    B = np.ascontiguousarray(scene.board_points)
    P = np.ascontiguousarray(scene.image_points)
    v = _vectors(44, 1, 0.3)[0]
    loop, vec = kernels.LOOP_KERNELS, kernels.NUMPY_KERNELS
    for name in ("projection_residuals", "projection_jacobian"):
        for x, y in zip(loop[name](v, B, P, T), vec[name](v, B, P, T)):
            assert np.allclose(x, y, rtol=1e-12, atol=1e-14)
    assert np.allclose(loop["omega_assemble"](B, P, T), vec["omega_assemble"](B, P, T), rtol=1e-12, atol=1e-16)


def run_selftest():
    results = []
    for fn in PROPERTIES:
        start = time.perf_counter()
        try:
            fn()
            ok, detail = True, ""
        except Exception as exc:  # report every failure, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(PropertyResult(fn.__name__, ok, time.perf_counter() - start, detail))
    return results
