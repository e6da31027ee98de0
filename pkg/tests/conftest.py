import math

import numpy as np
import pytest

from procay.synth import SynthSpec, Xorshift64Star, board_grid, generate_scene, random_pose


def make_scene(seed, *, cols=8, rows=6, square=0.03, max_angle=math.radians(60.0), noise=0.0):
    """Seeded synthetic scene and its ground-truth pose."""
    rng = Xorshift64Star(seed)
    board = board_grid(cols, rows, square)
    pose = random_pose(rng, board, max_angle=max_angle)
    return generate_scene(SynthSpec(cols, rows, square, pose, noise, seed))


@pytest.fixture
def scene_factory():
    return make_scene


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
