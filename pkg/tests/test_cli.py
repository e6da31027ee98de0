import json
import math
import time

import numpy as np
import pytest

from procay.cli import main, to_json
from procay.correspondence import CorrespondenceFile, write_correspondences

from conftest import make_scene


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def noiseless(tmp_path):
    path = tmp_path / "scene.json"
    scene, pose = make_scene(31)
    write_correspondences(CorrespondenceFile(scene.board_points, scene.image_points, None, pose), path)
    return path, pose


def test_synth_identity_example(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, _, _ = run(capsys, "synth", "--cols", "2", "--rows", "2", "--square", "1",
                     "--pose", "0", "0", "0", "0", "0", "2", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["image_points"] == [[-0.25, -0.25], [0.25, -0.25], [-0.25, 0.25], [0.25, 0.25]]
    assert doc["ground_truth"]["translation"] == [0, 0, 2]


def test_synth_bytes_repeat(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(capsys, "synth", "--cols", "8", "--rows", "6", "--square", "0.03",
                   "--random-pose", "9", "--noise", "1e-4", "--seed", "4", "--out", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_synth_behind_camera(tmp_path, capsys):
    code, out, err = run(capsys, "synth", "--cols", "2", "--rows", "2", "--square", "1",
                         "--pose", "0", "0", "0", "0", "0", "-2", "--out", str(tmp_path / "x.json"))
    assert code == 3 and out == "" and "CheiralityViolation" in err


def test_solve_report(noiseless, capsys):
    path, pose = noiseless
    code, out, _ = run(capsys, "solve", "--input", str(path))
    assert code == 0
    report = json.loads(out)
    assert list(report) == ["rotation_row_major", "translation", "cayley", "start_index", "winner",
                            "stats_normalized", "iterations"]
    R = np.array(report["rotation_row_major"]).reshape(3, 3)
    assert np.linalg.norm(R - pose.rotation) <= 1e-8
    assert report["start_index"] in ("E7", "E8")
    assert report["winner"] in ("Primary", "Antipodal")
    assert set(report["stats_normalized"]) == {"rmse", "med", "max"}
    assert set(report["iterations"]) == {"primary", "antipodal"}


def test_solve_pixel_stats(tmp_path, capsys):
    scene, pose = make_scene(32, noise=1e-4)
    path = tmp_path / "f.json"
    write_correspondences(CorrespondenceFile(scene.board_points, scene.image_points, 2175.0, pose), path)
    report = json.loads(run(capsys, "solve", "--input", str(path))[1])
    for k in ("rmse", "med", "max"):
        assert report["stats_pixels"][k] == pytest.approx(2175.0 * report["stats_normalized"][k], rel=1e-15)
    report = json.loads(run(capsys, "solve", "--input", str(path), "--f-pixel", "100")[1])
    assert report["stats_pixels"]["max"] == pytest.approx(100.0 * report["stats_normalized"]["max"], rel=1e-15)


def test_solve_methods_agree(noiseless, capsys):
    path, _ = noiseless
    a = json.loads(run(capsys, "solve", "--input", str(path), "--method", "lm")[1])["cayley"]
    b = json.loads(run(capsys, "solve", "--input", str(path), "--method", "trf")[1])["cayley"]
    assert np.abs(np.subtract(a, b)).max() <= 1e-6


def test_solve_out_and_traj(noiseless, tmp_path, capsys):
    path, _ = noiseless
    out, traj = tmp_path / "r.json", tmp_path / "t"
    code, stdout, _ = run(capsys, "solve", "--input", str(path), "--out", str(out), "--traj", str(traj))
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["winner"]
    assert (tmp_path / "t.svg").exists() and (tmp_path / "t.csv").exists()


def test_exit_codes(tmp_path, capsys):
    assert run(capsys)[0] == 1
    assert run(capsys, "nonsense")[0] == 1
    assert run(capsys, "solve")[0] == 1
    assert run(capsys, "solve", "--input", "x", "--bogus")[0] == 1
    assert run(capsys, "solve", "--input", "x", "--method", "gd")[0] == 1
    assert run(capsys, "synth", "--cols", "1", "--rows", "2", "--square", "1", "--random-pose", "1",
               "--out", str(tmp_path / "o"))[0] == 1
    assert run(capsys, "solve", "--input", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 1, "board_points": [[0, 0]]}')
    code, out, err = run(capsys, "solve", "--input", str(bad))
    assert code == 2 and out == "" and "image_points" in err
    bad.write_text('{"version": 1,')
    assert run(capsys, "spectrum", "--input", str(bad))[0] == 2


def test_both_runs_infeasible_exit_3(tmp_path, capsys):
    scene, pose = make_scene(1, max_angle=math.radians(160.0))
    path = tmp_path / "inf.json"
    write_correspondences(CorrespondenceFile(scene.board_points, scene.image_points), path)
    code, _, err = run(capsys, "solve", "--input", str(path))
    assert code == 3 and "BothRunsInfeasible" in err


def test_spectrum(noiseless, capsys):
    path, _ = noiseless
    code, out, _ = run(capsys, "spectrum", "--input", str(path))
    assert code == 0
    report = json.loads(out)
    assert report["eigenvalues"] == sorted(report["eigenvalues"])
    for k in ("e3", "e6", "e9"):
        assert report["kernel_norms"][k]["omega"] <= 1e-12
        assert report["kernel_norms"][k]["translation"] <= 1e-12
    assert report["start_index"] in ("E7", "E8")
    assert report["start_index"] == ("E7" if report["omega77"] < report["omega88"] else "E8")
    assert sorted(report["diagonal_order"][:3]) == [3, 6, 9]
    assert run(capsys, "spectrum", "--input", str(path))[1] == out


def test_duality_check(capsys):
    code, out, _ = run(capsys, "duality-check", "--seed", "5")
    assert code == 0
    report = json.loads(out)
    assert report["passed"] and report["max_deviation"] <= 1e-12 and report["configurations"] >= 100
    assert report["identity"]["W_row_major"] == [1, 0, 0, 0, 1, 0, 0, 0, 1]
    assert report["identity"]["w"] == [0, 0, 0]
    assert run(capsys, "duality-check", "--seed", "5")[1] == out


def test_selftest(capsys):
    start = time.perf_counter()
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert time.perf_counter() - start <= 60
    lines = [l for l in out.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert len(lines) >= 20 and all(l.startswith("PASS") for l in lines)


def test_to_json():
    assert to_json({"a": [1.0, 2], "b": None, "c": True, "d": "x"}) == (
        '{\n  "a": [1.0, 2],\n  "b": null,\n  "c": true,\n  "d": "x"\n}'
    )
    assert to_json(float("inf")) == "null"
    with pytest.raises(TypeError):
        to_json(object())
