import json

import numpy as np
import pytest

from procay.correspondence import (
    CorrespondenceFile,
    dumps,
    format_number,
    loads,
    read_correspondences,
    write_correspondences,
)
from procay.errors import DimensionMismatch, ParseError
from procay.residuals import Pose

from conftest import make_scene


def _doc(scale_board=1.0, scale_image=1.0, f=None, truth=True):
    scene, pose = make_scene(2, noise=1e-4)
    return CorrespondenceFile(
        scene.board_points * scale_board, scene.image_points * scale_image, f, pose if truth else None
    )


@pytest.mark.parametrize("scale", [1.0, 1e6, 1e-6])
def test_round_trip_exact(tmp_path, scale):
    doc = _doc(scale, scale, 2175.0)
    path = tmp_path / "c.json"
    write_correspondences(doc, path)
    back = read_correspondences(path)
    assert back.board_points.tobytes() == doc.board_points.tobytes()
    assert back.image_points.tobytes() == doc.image_points.tobytes()
    assert back.f_pixel == 2175.0
    assert back.ground_truth.rotation.tobytes() == doc.ground_truth.rotation.tobytes()
    assert back.ground_truth.translation.tobytes() == doc.ground_truth.translation.tobytes()


def test_random_doubles_round_trip():
    x = np.random.default_rng(0).standard_normal(1000) * 10.0 ** np.random.default_rng(1).integers(-300, 300, 1000)
    assert all(float(format_number(v)) == v for v in x)


def test_optional_fields_absent():
    doc = loads(dumps(_doc(truth=False)))
    assert doc.f_pixel is None and doc.ground_truth is None
    assert "f_pixel" not in dumps(doc)


def test_output_is_valid_json_with_17_digits():
    text = dumps(_doc(f=2175.0))
    obj = json.loads(text)
    assert obj["version"] == 1
    assert len(obj["ground_truth"]["rotation_row_major"]) == 9
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(2175) == "2175.0"


def test_missing_image_points():
    with pytest.raises(ParseError) as err:
        loads('{"version": 1, "board_points": [[0, 0], [1, 0], [0, 1], [1, 1]]}')
    assert err.value.field == "image_points"


def test_syntax_error_has_line():
    with pytest.raises(ParseError) as err:
        loads('{\n"version": 1,\n"board_points": [[0, 0]\n}')
    assert err.value.line == 4


@pytest.mark.parametrize(
    "text, exc",
    [
        ('{"version": 2, "board_points": [[0,0]], "image_points": [[0,0]]}', ParseError),
        ('{"board_points": [[0,0]], "image_points": [[0,0]]}', ParseError),
        ('{"version": 1, "board_points": [[0,0],[1,1]], "image_points": [[0,0]]}', DimensionMismatch),
        ('{"version": 1, "board_points": [[0,0,0]], "image_points": [[0,0]]}', DimensionMismatch),
        ('{"version": 1, "board_points": [[0,"a"]], "image_points": [[0,0]]}', ParseError),
        ('{"version": 1, "board_points": [[0,true]], "image_points": [[0,0]]}', ParseError),
        ('{"version": 1, "board_points": [[0,0]], "image_points": [[0,0]], "f_pixel": -1}', ParseError),
        ('{"version": 1, "board_points": [[0,0]], "image_points": [[0,0]], "extra": 1}', ParseError),
        ('{"version": 1, "board_points": [[0,0]], "image_points": [[0,0]], "n": 2}', DimensionMismatch),
        ('{"version": 1, "board_points": [[0,0]], "image_points": [[0,0]],'
         ' "ground_truth": {"rotation_row_major": [1,0,0], "translation": [0,0,1]}}', DimensionMismatch),
        ('{"version": 1, "board_points": [[0,0]], "image_points": [[0,0]],'
         ' "ground_truth": {"translation": [0,0,1]}}', ParseError),
        ('[1, 2]', ParseError),
        ('{"version": 1, "board_points": [[0, NaN]], "image_points": [[0,0]]}', ParseError),
    ],
)
def test_malformed(text, exc):
    with pytest.raises(exc):
        loads(text)


def test_atomic_write_leaves_no_temp(tmp_path):
    path = tmp_path / "c.json"
    write_correspondences(_doc(), path)
    write_correspondences(_doc(f=100.0), path)
    assert [p.name for p in tmp_path.iterdir()] == ["c.json"]
    assert read_correspondences(path).f_pixel == 100.0


def test_scene_view():
    doc = _doc()
    assert doc.scene().n == doc.n
