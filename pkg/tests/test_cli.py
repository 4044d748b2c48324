import json
import os

import numpy as np
import pytest

from skylands.cli import main
from skylands.worldio import load_float_buffer, save_world

from conftest import fast_world


@pytest.fixture()
def tiny_world_file(tmp_path):
    p = str(tmp_path / "tiny.skyw")
    save_world(fast_world(23), p)
    return p


def test_forward_render_writes_layers(tmp_path, tiny_world_file, capsys):
    out = str(tmp_path / "out")
    code = main(["--world", tiny_world_file, "--traj", "forward",
                 "--steps", "1", "--res", "16",
                 "--layers", "full,disparity,mask", "--out", out])
    assert code == 0
    for i in range(2):  # steps + 1 frames
        assert os.path.exists(f"{out}/frame_{i:04d}_full.png")
        disp = load_float_buffer(f"{out}/frame_{i:04d}_disparity.fbuf")
        assert disp.shape == (16, 16)
        assert np.isfinite(disp).all()


def test_cyclic_trajectory_closes_bit_exactly(tmp_path, tiny_world_file):
    out = str(tmp_path / "out")
    code = main(["--world", tiny_world_file, "--traj", "cyclic",
                 "--steps", "6", "--res", "16", "--layers", "full",
                 "--out", out])
    assert code == 0
    first = open(f"{out}/frame_0000_full.png", "rb").read()
    last = open(f"{out}/frame_0006_full.png", "rb").read()
    assert first == last


def test_cycle_metric_is_zero(tmp_path, tiny_world_file, capsys):
    out = str(tmp_path / "out")
    code = main(["--world", tiny_world_file, "--metrics", "cycle",
                 "--traj", "forward", "--steps", "2", "--res", "8",
                 "--out", out])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "cycle = 0.00" in stdout
    records = json.load(open(f"{out}/metrics.json"))
    assert len(records) == 3
    assert all(r["value"] == 0.0 for r in records)


def test_transparency_metric_runs(tmp_path, tiny_world_file):
    out = str(tmp_path / "out")
    code = main(["--world", tiny_world_file, "--metrics", "transparency",
                 "--steps", "1", "--res", "8", "--out", out])
    assert code == 0
    records = json.load(open(f"{out}/metrics.json"))
    assert all(np.isfinite(r["value"]) and r["value"] >= 0 for r in records)


def test_world_file_created_and_reused(tmp_path, tiny_world_file):
    # loading never re-saves; a missing path is created on exit
    wpath = str(tmp_path / "new.skyw")
    src = open(tiny_world_file, "rb").read()
    open(wpath, "wb").write(src)
    before = os.path.getmtime(wpath)
    out = str(tmp_path / "out")
    assert main(["--world", wpath, "--steps", "0", "--res", "8",
                 "--out", out]) == 0
    assert os.path.getmtime(wpath) == before


def test_invalid_arguments_exit_2(tmp_path, tiny_world_file, capsys):
    out = str(tmp_path / "out")
    assert main(["--world", tiny_world_file, "--layers", "bogus",
                 "--steps", "0", "--res", "8", "--out", out]) == 2
    assert main(["--world", tiny_world_file, "--traj", "sideways",
                 "--steps", "0", "--res", "8", "--out", out]) == 2
    assert main(["--seed", "1", "--res", "13", "--out", out]) == 2
    capsys.readouterr()


def test_io_errors_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.skyw"
    bad.write_bytes(b"garbage bytes, not a world file")
    out = str(tmp_path / "out")
    assert main(["--world", str(bad), "--steps", "0", "--res", "8",
                 "--out", out]) == 3
    missing = str(tmp_path / "nope" / "t.txt")
    assert main(["--traj", f"file={missing}", "--seed", "1", "--res", "8",
                 "--out", out]) == 3
    capsys.readouterr()
