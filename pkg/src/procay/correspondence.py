"""JSON correspondence files.

Layout::

    {"version": 1,
     "board_points": [[X, Y], ...],
     "image_points": [[x, y], ...],          # normalised, plane z = 1
     "f_pixel": 2175.0,                       # optional
     "ground_truth": {"rotation_row_major": [9 numbers],
                      "translation": [3 numbers]}}   # optional

Numbers are written with 17 significant digits, which round-trips every
float64 exactly.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, ParseError
from .omega import PlanarScene
from .residuals import Pose

FORMAT_VERSION = 1
_KEYS = {"version", "n", "board_points", "image_points", "f_pixel", "ground_truth"}


@dataclass(frozen=True, eq=False)
class CorrespondenceFile:
    board_points: np.ndarray
    image_points: np.ndarray
    f_pixel: Optional[float] = None
    ground_truth: Optional[Pose] = None

    @property
    def n(self) -> int:
        return len(self.board_points)

    def scene(self) -> PlanarScene:
        return PlanarScene(self.board_points, self.image_points)


def format_number(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x!r}")
    text = format(x, ".17g")
    # keep a float marker so readers in typed languages see a double
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _row(values) -> str:
    return "[" + ", ".join(format_number(v) for v in values) + "]"


def _points(points) -> str:
    rows = ",\n".join("    " + _row(p) for p in np.asarray(points, dtype=float))
    return "[\n" + rows + "\n  ]"


def dumps(doc: CorrespondenceFile) -> str:
    board = np.asarray(doc.board_points, dtype=float)
    image = np.asarray(doc.image_points, dtype=float)
    if board.shape != image.shape or board.ndim != 2 or board.shape[1] != 2:
        raise DimensionMismatch(f"board {board.shape} and image {image.shape} must both be (n, 2)")
    parts = [
        f'  "version": {FORMAT_VERSION}',
        f'  "board_points": {_points(board)}',
        f'  "image_points": {_points(image)}',
    ]
    if doc.f_pixel is not None:
        parts.append(f'  "f_pixel": {format_number(doc.f_pixel)}')
    if doc.ground_truth is not None:
        R = np.asarray(doc.ground_truth.rotation, dtype=float).ravel()
        t = np.asarray(doc.ground_truth.translation, dtype=float).ravel()
        parts.append(
            '  "ground_truth": {\n'
            f'    "rotation_row_major": {_row(R)},\n'
            f'    "translation": {_row(t)}\n'
            "  }"
        )
    return "{\n" + ",\n".join(parts) + "\n}\n"


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` as UTF-8 through a temporary file and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_correspondences(doc: CorrespondenceFile, path) -> None:
    atomic_write_text(path, dumps(doc))


def _number(value, field) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {type(value).__name__}", field=field)
    x = float(value)
    if not math.isfinite(x):
        raise ParseError("number is not finite", field=field)
    return x


def _vector(value, size, field) -> np.ndarray:
    if not isinstance(value, list):
        raise ParseError("expected an array", field=field)
    if len(value) != size:
        raise DimensionMismatch(f"{field}: expected {size} numbers, got {len(value)}")
    return np.array([_number(x, f"{field}[{i}]") for i, x in enumerate(value)])


def _point_array(obj, field) -> np.ndarray:
    if field not in obj:
        raise ParseError("missing required array", field=field)
    value = obj[field]
    if not isinstance(value, list):
        raise ParseError("expected an array of [x, y] pairs", field=field)
    if not value:
        raise DimensionMismatch(f"{field} is empty")
    rows = [_vector(p, 2, f"{field}[{i}]") for i, p in enumerate(value)]
    return np.array(rows)


def loads(text: str) -> CorrespondenceFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    if not isinstance(obj, dict):
        raise ParseError("top level must be an object")
    unknown = sorted(set(obj) - _KEYS)
    if unknown:
        raise ParseError("unknown key", field=unknown[0])
    if "version" not in obj:
        raise ParseError("missing version tag", field="version")
    if obj["version"] != FORMAT_VERSION or isinstance(obj["version"], bool):
        raise ParseError(f"unsupported version {obj['version']!r}", field="version")
    board = _point_array(obj, "board_points")
    image = _point_array(obj, "image_points")
    if len(board) != len(image):
        raise DimensionMismatch(
            f"{len(board)} board points but {len(image)} image points"
        )
    if "n" in obj and obj["n"] != len(board):
        raise DimensionMismatch(f"n = {obj['n']!r} but {len(board)} points are listed")
    f_pixel = None
    if obj.get("f_pixel") is not None:
        f_pixel = _number(obj["f_pixel"], "f_pixel")
        if f_pixel <= 0:
            raise ParseError("must be positive", field="f_pixel")
    truth = None
    if obj.get("ground_truth") is not None:
        gt = obj["ground_truth"]
        if not isinstance(gt, dict):
            raise ParseError("expected an object", field="ground_truth")
        for key in ("rotation_row_major", "translation"):
            if key not in gt:
                raise ParseError("missing field", field=f"ground_truth.{key}")
        R = _vector(gt["rotation_row_major"], 9, "ground_truth.rotation_row_major").reshape(3, 3)
        t = _vector(gt["translation"], 3, "ground_truth.translation")
        truth = Pose(R, t)
    return CorrespondenceFile(board, image, f_pixel, truth)


def read_correspondences(path) -> CorrespondenceFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}") from exc
    return loads(text)
