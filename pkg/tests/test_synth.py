import math

import numpy as np
import pytest

from procay.errors import CheiralityViolation, InvalidScene
from procay.lsq import LsqConfig
from procay.residuals import error_stats
from procay.solver import solve_pnp_procay78
from procay.synth import (
    SynthSpec,
    Xorshift64Star,
    board_grid,
    generate_scene,
    normalized_to_pixels,
    pixels_to_normalized,
    pose_from_cayley,
    project_points,
    random_pose,
    splitmix64,
)


def _xorshift_reference(seed, n):
    """Straight transcription of the published constants."""
    mask = (1 << 64) - 1
    z = (seed + 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    x = z ^ (z >> 31)
    out = []
    for _ in range(n):
        x ^= x >> 12
        x = (x ^ (x << 25)) & mask
        x ^= x >> 27
        out.append((x * 0x2545F4914F6CDD1D) & mask)
    return out


def test_generator_constants():
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    rng = Xorshift64Star(7)
    assert [rng.next_u64() for _ in range(5)] == _xorshift_reference(7, 5)


def test_generator_distributions():
    rng = Xorshift64Star(1)
    u = np.array([rng.uniform() for _ in range(20000)])
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01
    z = Xorshift64Star(2).normals(20000)
    assert abs(z.mean()) < 0.03 and abs(z.std() - 1.0) < 0.03


def test_seed_range():
    with pytest.raises(ValueError):
        Xorshift64Star(-1)
    Xorshift64Star(2**64 - 1).next_u64()


def test_grid_layout():
    g = board_grid(3, 2, 0.5)
    assert np.array_equal(g, [[-0.5, -0.25], [0.0, -0.25], [0.5, -0.25], [-0.5, 0.25], [0.0, 0.25], [0.5, 0.25]])
    with pytest.raises(InvalidScene):
        board_grid(1, 3, 1.0)


def test_identity_example():
    scene, _ = generate_scene(SynthSpec(2, 2, 1.0, pose_from_cayley([0, 0, 0], [0, 0, 2])))
    assert np.array_equal(scene.image_points, [[-0.25, -0.25], [0.25, -0.25], [-0.25, 0.25], [0.25, 0.25]])


def test_same_seed_bit_identical():
    pose = pose_from_cayley([0.1, 0.2, 0.0], [0.0, 0.0, 1.0])
    a, _ = generate_scene(SynthSpec(5, 4, 0.03, pose, 1e-3, 99))
    b, _ = generate_scene(SynthSpec(5, 4, 0.03, pose, 1e-3, 99))
    c, _ = generate_scene(SynthSpec(5, 4, 0.03, pose, 1e-3, 100))
    assert a.image_points.tobytes() == b.image_points.tobytes()
    assert not np.array_equal(a.image_points, c.image_points)


def test_behind_camera():
    with pytest.raises(CheiralityViolation):
        generate_scene(SynthSpec(2, 2, 1.0, pose_from_cayley([0, 0, 0], [0, 0, -2])))


def test_random_pose_contract():
    rng = Xorshift64Star(5)
    board = board_grid(8, 6, 0.03)
    for _ in range(50):
        pose = random_pose(rng, board, max_angle=math.radians(160.0))
        angle = math.acos(max(-1.0, min(1.0, 0.5 * (np.trace(pose.rotation) - 1))))
        assert angle <= math.radians(160.0) + 1e-12
        project_points(pose, board)  # no CheiralityViolation


def test_noiseless_scenes_solve_exactly():
    rng = Xorshift64Star(6)
    board = board_grid(8, 6, 0.03)
    for _ in range(10):
        pose = random_pose(rng, board, max_angle=math.radians(45.0))
        scene, _ = generate_scene(SynthSpec(8, 6, 0.03, pose))
        assert solve_pnp_procay78(scene).projection_stats.rmse <= 1e-10


def test_pixel_scaling():
    assert np.array_equal(pixels_to_normalized([[320.0, 240.0]], 500.0, (320.0, 240.0)), [[0.0, 0.0]])
    assert np.array_equal(pixels_to_normalized([[100.0, -50.0]], 100.0), [[1.0, -0.5]])
    pts = np.random.default_rng(0).uniform(0, 1000, size=(20, 2))
    back = normalized_to_pixels(pixels_to_normalized(pts, 2175.0, (640, 480)), 2175.0, (640, 480))
    assert np.allclose(back, pts, rtol=1e-15, atol=1e-12)
    with pytest.raises(ValueError):
        pixels_to_normalized(pts, 0.0)


def test_stats_scale_to_pixels():
    f, c = 2175.0, np.array([640.0, 480.0])
    pose = pose_from_cayley([0.1, -0.1, 0.05], [0.0, 0.0, 0.6])
    scene, truth = generate_scene(SynthSpec(8, 6, 0.03, pose, 1e-4, 3))
    clean = project_points(truth, scene.board_points)
    res_norm = (scene.image_points - clean).ravel()
    res_pix = (normalized_to_pixels(scene.image_points, f, c) - normalized_to_pixels(clean, f, c)).ravel()
    a, b = error_stats(res_norm, f), error_stats(res_pix)
    assert a.rmse == pytest.approx(b.rmse, rel=1e-9)
    assert a.median == pytest.approx(b.median, rel=1e-9)
    assert a.max == pytest.approx(b.max, rel=1e-9)
