import math

import numpy as np
import pytest

from procay.errors import InvalidScene, SingularNormal
from procay.omega import (
    PlanarScene,
    build_omega,
    canonical_diagonal,
    explicit_reconstruction_error,
    kernel_norms,
    min_positive_diagonal_index,
    omega_spectrum,
    whitened_scene,
)
from procay.rotations import cayley_to_matrix
from procay.synth import SynthSpec, board_grid, generate_scene, pose_from_cayley

from conftest import make_scene


def _oracle_omega(scene):
    """Block-by-block assembly straight from the definitions."""
    SQ = np.zeros((3, 3))
    SQP = np.zeros((3, 9))
    blocks = []
    for (X, Y), (x, y) in zip(scene.board_points, scene.image_points):
        M = np.outer([x, y, 1.0], [0.0, 0.0, 1.0]) - np.eye(3)
        Q = M.T @ M
        P = np.zeros((3, 9))
        for k in range(3):
            P[k, 3 * k:3 * k + 3] = [X, Y, 0.0]
        SQ += Q
        SQP += Q @ P
        blocks.append((P, Q))
    T = -np.linalg.solve(SQ, SQP)
    omega = sum((P + T).T @ Q @ (P + T) for P, Q in blocks)
    return omega, T


def test_matches_oracle():
    for seed in range(5):
        scene, _ = make_scene(seed, noise=1e-3)
        form = build_omega(scene)
        omega, T = _oracle_omega(scene)
        assert np.allclose(form.omega, omega, rtol=1e-10, atol=1e-14)
        assert np.allclose(form.translation_op, T, rtol=1e-10, atol=1e-14)


def test_kernel_columns_vanish():
    scene, _ = make_scene(3, noise=1e-3)
    form = build_omega(scene)
    for a, b in kernel_norms(form).values():
        assert a <= 1e-12 and b <= 1e-12
    diag, perm = canonical_diagonal(form)
    assert set(perm[:3].tolist()) == {2, 5, 8}
    assert np.all(diag[[2, 5, 8]] == 0.0)
    assert np.array_equal(diag, [form.omega[i, i] for i in range(9)])


def test_truth_is_in_kernel():
    scene, truth = make_scene(4)
    form = build_omega(scene)
    r = truth.rotation.ravel()
    assert abs(r @ form.omega @ r) <= 1e-16 * scene.n
    assert np.abs(form.translation_op @ r - truth.translation).max() <= 1e-10


@pytest.mark.parametrize("seed", range(3))
def test_value_equals_explicit_error(seed):
    scene, _ = make_scene(seed, noise=1e-3)
    form = build_omega(scene)
    rng = np.random.default_rng(seed)
    for _ in range(200):
        r = rng.normal(size=9)
        R = r.reshape(3, 3)
        explicit = explicit_reconstruction_error(scene, R, form.translation_op @ r)
        assert form.value(r) == pytest.approx(explicit, rel=1e-10)
        assert form.value(-r) == form.value(r)


def test_spectrum_structure():
    scene, _ = make_scene(5)
    w, V = omega_spectrum(build_omega(scene))
    assert np.all(np.diff(w) >= 0)
    assert int(np.sum(np.abs(w) <= 1e-10 * w[-1])) == 4
    omega = build_omega(scene).omega
    for k in range(9):
        q = V[:, k]
        assert np.linalg.norm(omega @ q - w[k] * q) <= 1e-10
        assert q[np.argmax(np.abs(q))] > 0


def test_spectrum_of_zero_matrix():
    w, _ = omega_spectrum(np.zeros((9, 9)))
    assert np.array_equal(w, np.zeros(9))


def test_whitened_fronto_parallel_spectrum():
    # symmetric grid straight ahead: the top three eigenvalues are exactly one
    scene, _ = generate_scene(SynthSpec(5, 5, 1.0, pose_from_cayley([0, 0, 0], [0, 0, 1e3])))
    w, _ = omega_spectrum(build_omega(whitened_scene(scene)))
    assert np.abs(w[:4]).max() <= 1e-10
    assert 0 < w[4] <= w[5] < 1
    assert np.abs(w[6:] - 1.0).max() <= 1e-9


def test_min_positive_diagonal_is_7_or_8():
    hits = []
    for seed in range(20):
        scene, _ = make_scene(seed, max_angle=math.radians(30.0))
        hits.append(min_positive_diagonal_index(build_omega(scene)))
    assert set(hits) <= {7, 8}


def test_translation_scales_with_board():
    scene, _ = make_scene(6, noise=1e-4)
    scaled = PlanarScene(scene.board_points * 7.0, scene.image_points)
    assert np.allclose(build_omega(scaled).translation_op, 7.0 * build_omega(scene).translation_op, rtol=1e-10)


def test_invalid_scenes():
    with pytest.raises(InvalidScene):
        PlanarScene(np.zeros((3, 2)), np.zeros((3, 2)))
    with pytest.raises(InvalidScene):
        PlanarScene(np.column_stack([np.arange(5.0), 2 * np.arange(5.0)]), np.zeros((5, 2)))
    with pytest.raises(InvalidScene):
        PlanarScene(board_grid(2, 2, 1.0), np.zeros((3, 2)))
    with pytest.raises(InvalidScene):
        PlanarScene(board_grid(2, 2, 1.0), np.full((4, 2), np.nan))


def test_singular_normal():
    board = board_grid(2, 2, 1.0)
    # a huge image spread makes sum Q_i ill conditioned
    image = np.array([[1e9, 0.0], [-1e9, 0.0], [0.0, 1e9], [0.0, -1e9]])
    with pytest.raises(SingularNormal):
        build_omega(PlanarScene(board, image))


def test_scene_is_read_only():
    scene, _ = make_scene(0)
    with pytest.raises(ValueError):
        scene.board_points[0, 0] = 1.0


def test_permutation_invariance():
    scene, _ = make_scene(8, noise=1e-3)
    perm = np.random.default_rng(0).permutation(scene.n)
    a, b = build_omega(scene), build_omega(scene.permuted(perm))
    assert np.allclose(a.omega, b.omega, rtol=1e-12, atol=1e-15)
    R = cayley_to_matrix([0.1, 0.2, 0.3])
    assert np.allclose(a.translation(R), b.translation(R), rtol=1e-12)
