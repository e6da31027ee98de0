import os
import subprocess
import sys

import numpy as np
import pytest

from procay import kernels
from procay.omega import build_omega

from conftest import make_scene


@pytest.fixture(scope="module")
def inputs():
    scene, _ = make_scene(21, noise=1e-3)
    T = np.ascontiguousarray(build_omega(scene).translation_op)
    return (
        np.ascontiguousarray(scene.board_points),
        np.ascontiguousarray(scene.image_points),
        T,
    )


@pytest.mark.parametrize("name", sorted(kernels.LOOP_KERNELS))
def test_backends_agree(name, inputs):
    B, P, T = inputs
    args = (B, P) if name == "omega_sums" else (B, P, T) if name == "omega_assemble" else (np.array([0.2, -0.1, 0.3]), B, P, T)
    a = kernels.LOOP_KERNELS[name](*args)
    b = kernels.NUMPY_KERNELS[name](*args)
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-15)


def test_backends_agree_on_bad_depth(inputs):
    B, P, T = inputs
    v = np.array([1e8, 0.0, 0.0])
    for name in ("projection_residuals", "projection_jacobian"):
        a = kernels.LOOP_KERNELS[name](v, B, P, -T)
        b = kernels.NUMPY_KERNELS[name](v, B, P, -T)
        assert a[-2] == b[-2] and a[-2] >= 0
        assert a[-1] == b[-1]


@pytest.mark.parametrize("flag, backend", [("1", "numpy"), ("0", "numba")])
def test_env_flag_selects_backend(flag, backend):
    pytest.importorskip("numba")
    env = dict(os.environ, PROCAY_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from procay import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == backend
