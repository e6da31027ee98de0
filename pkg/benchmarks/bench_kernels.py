"""Compare the numba loop kernels with the vectorised numpy kernels.

Run ``python benchmarks/bench_kernels.py``. Kernel timings are taken in one
process (both backends are always importable); the end-to-end solve is
timed in subprocesses so ``PROCAY_DISABLE_NUMBA`` picks the backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from procay import kernels
from procay._accel import HAVE_NUMBA
from procay.omega import build_omega
from procay.synth import SynthSpec, Xorshift64Star, board_grid, generate_scene, random_pose

SOLVE_SNIPPET = """
import time
from procay import kernels
from procay.synth import SynthSpec, Xorshift64Star, board_grid, generate_scene, random_pose
from procay.solver import solve_pnp_procay78
rng = Xorshift64Star(3)
board = board_grid(8, 6, 0.03)
scenes = [generate_scene(SynthSpec(8, 6, 0.03, random_pose(rng, board, max_angle=1.0), 1e-4, k))[0]
          for k in range(200)]
solve_pnp_procay78(scenes[0])  # compile / warm up
t0 = time.perf_counter()
for s in scenes:
    solve_pnp_procay78(s)
print(kernels.BACKEND, (time.perf_counter() - t0) / len(scenes))
"""


def make_inputs(cols, rows):
    board = board_grid(cols, rows, 0.03)
    pose = random_pose(Xorshift64Star(cols * rows), board, max_angle=1.0)
    scene, _ = generate_scene(SynthSpec(cols, rows, 0.03, pose, 1e-4, 1))
    T = np.ascontiguousarray(build_omega(scene).translation_op)
    B = np.ascontiguousarray(scene.board_points)
    P = np.ascontiguousarray(scene.image_points)
    v = np.array([0.1, -0.2, 0.05])
    return {
        "omega_sums": (B, P),
        "omega_assemble": (B, P, T),
        "projection_residuals": (v, B, P, T),
        "projection_jacobian": (v, B, P, T),
        "reconstruction_residuals": (v, B, P, T),
    }


def best_time(fn, args, number):
    fn(*args)  # compile on first call
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=5)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[48, 480, 4800])
    parser.add_argument("--number", type=int, default=200)
    parser.add_argument("--no-solve", action="store_true")
    args = parser.parse_args()

    if not HAVE_NUMBA:
        print("numba is not installed; loop kernels run as plain Python", file=sys.stderr)
    print(f"{'kernel':26s} {'n':>6s} {'numba us':>10s} {'numpy us':>10s} {'speedup':>8s}")
    for n in args.sizes:
        cols = int(np.sqrt(n * 4 / 3))
        rows = max(2, n // cols)
        inputs = make_inputs(cols, rows)
        number = max(1, args.number * 48 // n)
        for name, fargs in inputs.items():
            t_loop = best_time(kernels.LOOP_KERNELS[name], fargs, number)
            t_vec = best_time(kernels.NUMPY_KERNELS[name], fargs, number)
            print(f"{name:26s} {cols * rows:6d} {t_loop * 1e6:10.2f} {t_vec * 1e6:10.2f} {t_vec / t_loop:8.2f}")

    if args.no_solve:
        return
    print()
    print("end-to-end solve, 48 points, mean seconds per scene")
    for flag in ("0", "1"):
        env = dict(os.environ, PROCAY_DISABLE_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c", SOLVE_SNIPPET], env=env, capture_output=True, text=True, check=True
        )
        backend, seconds = out.stdout.split()
        print(f"  {backend:6s} {float(seconds) * 1e3:8.3f} ms")


if __name__ == "__main__":
    main()
