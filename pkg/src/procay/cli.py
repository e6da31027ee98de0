"""``procay`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Reports go to stdout as JSON; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import omega as om
from .correspondence import (
    CorrespondenceFile,
    atomic_write_text,
    format_number,
    read_correspondences,
    write_correspondences,
)
from .duality import duality_check
from .errors import DataError, NumericalError
from .lsq import LsqConfig
from .solver import Winner, choose_start, solve_pnp_procay78
from .synth import SynthSpec, Xorshift64Star, board_grid, generate_scene, pose_from_cayley, random_pose
from .viz import emit_trajectory

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def to_json(obj, indent=0) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}\"{k}\": {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(x, (dict, list, tuple, np.ndarray)) for x in obj):
            return "[" + ", ".join(to_json(x) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(x, indent + 1) for x in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return format_number(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(report, out=None):
    text = to_json(report) + "\n"
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def solve_report(doc: CorrespondenceFile, method="trf", f_pixel=None):
    """Solve ``doc`` and build the report dict; also returns the solution."""
    scene = doc.scene()
    sol = solve_pnp_procay78(scene, LsqConfig(method=method))
    report = {
        "rotation_row_major": sol.pose.rotation.ravel(),
        "translation": sol.pose.translation,
        "cayley": sol.cayley,
        "start_index": sol.start_index.value,
        "winner": sol.winner.value,
        "stats_normalized": sol.projection_stats.as_dict(),
    }
    f = f_pixel if f_pixel is not None else doc.f_pixel
    if f is not None:
        report["stats_pixels"] = {k: v * f for k, v in sol.projection_stats.as_dict().items()}
    report["iterations"] = {
        "primary": sol.traces[0].iterations,
        "antipodal": sol.traces[1].iterations,
    }
    return report, sol


def cmd_solve(args):
    doc = read_correspondences(args.input)
    report, sol = solve_report(doc, args.method, args.f_pixel)
    _emit(report, args.out)
    if args.traj:
        winner = 0 if sol.winner is Winner.PRIMARY else 1
        for path in emit_trajectory(sol.traces, args.traj, winner=winner):
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args):
    board = board_grid(args.cols, args.rows, args.square)
    if args.pose is not None:
        pose = pose_from_cayley(args.pose[:3], args.pose[3:])
    else:
        pose = random_pose(Xorshift64Star(args.random_pose), board)
    scene, truth = generate_scene(
        SynthSpec(args.cols, args.rows, args.square, pose, args.noise, args.seed)
    )
    write_correspondences(
        CorrespondenceFile(scene.board_points, scene.image_points, args.f_pixel, truth), args.out
    )
    return EXIT_OK


def spectrum_report(scene):
    form = om.build_omega(scene)
    white = om.build_omega(om.whitened_scene(scene))
    eig_white, _ = om.omega_spectrum(white)
    eig_raw, _ = om.omega_spectrum(form)
    diag, perm = om.canonical_diagonal(form)
    index, v, v_anti = choose_start(form.omega[6, 6], form.omega[7, 7])
    return {
        "eigenvalues": eig_white,
        "eigenvalues_raw": eig_raw,
        "diagonal": diag,
        "diagonal_order": [int(k) + 1 for k in perm],
        "kernel_norms": {
            f"e{k}": {"omega": a, "translation": b} for k, (a, b) in om.kernel_norms(form).items()
        },
        "omega77": form.omega[6, 6],
        "omega88": form.omega[7, 7],
        "start_index": index.value,
        "start": v,
        "start_antipodal": v_anti,
    }


def cmd_spectrum(args):
    doc = read_correspondences(args.input)
    _emit(spectrum_report(doc.scene()))
    return EXIT_OK


def cmd_duality_check(args):
    result = duality_check(args.seed, args.count)
    report = {
        "passed": result["passed"],
        "configurations": result["configurations"],
        "max_deviation": result["max_deviation"],
        "tolerance": result["tolerance"],
        "identity": {
            "W_row_major": result["identity"]["W"].ravel(),
            "w": result["identity"]["w"],
        },
    }
    _emit(report)
    return EXIT_OK if result["passed"] else EXIT_NUMERIC


def cmd_selftest(args):
    from .selftest import run_selftest

    results = run_selftest()
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"{status}  {r.name:<{width}}  {r.seconds:7.3f}s"
        if r.detail:
            line += f"  {r.detail}"
        print(line)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} properties passed")
    return EXIT_OK if passed == len(results) else EXIT_NUMERIC


def build_parser():
    parser = _Parser(prog="procay", description="Planar PnP pose estimation in Cayley space.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("solve", help="estimate the pose of a correspondence file")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("lm", "trf"), default="trf")
    p.add_argument("--out", help="report path (stdout if omitted)")
    p.add_argument("--traj", help="base path for the trajectory SVG and CSV")
    p.add_argument("--f-pixel", type=_positive(float), help="focal length in pixels")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("synth", help="write a synthetic correspondence file")
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--square", type=_positive(float), required=True)
    pose = p.add_mutually_exclusive_group(required=True)
    pose.add_argument("--pose", type=float, nargs=6, metavar=("V1", "V2", "V3", "T1", "T2", "T3"))
    pose.add_argument("--random-pose", type=_seed, metavar="SEED")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--f-pixel", type=_positive(float))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("spectrum", help="eigen and diagonal structure of Omega")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("duality-check", help="verify the pose exchange identity")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--count", type=_positive(int), default=100)
    p.set_defaults(func=cmd_duality_check)

    p = sub.add_parser("selftest", help="run the embedded property suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "noise", 0.0) < 0:
            raise UsageError("procay synth: --noise must be >= 0")
        if getattr(args, "cols", 2) < 2 or getattr(args, "rows", 2) < 2:
            raise UsageError("procay synth: grid must be at least 2x2")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
