import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from illumopt.cli import main, render_design
from illumopt.dataset import load_dataset
from illumopt.io import load_array, save_array

SMALL = {
    "dataset": {"grid_h": 20, "grid_w": 20, "n_leds": 13, "n_train": 4, "n_test": 2},
    "recon": {"n_iters": 5},
    "learn": {"n_updates": 3, "batch_fraction": 0.5},
    "benchmark": {"designs": ["qdpc", "annular", "random"], "ring_fraction": 0.8, "random_seed": 0},
    "k": 2,
}


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "small.json").write_text(json.dumps(SMALL))
    assert run("gen-dataset", "--config", root / "small.json", "--seed", 7, "--out", root / "data") == 0
    return root


def read(path):
    return path.read_bytes()


def test_gen_dataset_outputs(workdir):
    data = workdir / "data"
    ds = load_dataset(data)
    assert len(ds.train) == 4 and len(ds.test) == 2
    manifest = json.loads((data / "manifest.json").read_text())
    assert manifest["command"] == "gen-dataset"
    assert manifest["seeds"] == {"dataset": 7}
    assert "dataset.json" in manifest["outputs"]


def test_gen_dataset_is_byte_identical(workdir, tmp_path):
    assert run("gen-dataset", "--config", workdir / "small.json", "--seed", 7, "--threads", 3,
               "--out", tmp_path / "again") == 0
    for f in (workdir / "data").iterdir():
        if f.name != "manifest.json":
            assert read(f) == read(tmp_path / "again" / f.name), f.name


def test_gen_dataset_replays_from_manifest(workdir, tmp_path):
    assert run("gen-dataset", "--config", workdir / "data" / "manifest.json", "--out", tmp_path / "r") == 0
    assert read(tmp_path / "r" / "pair_0000_Y.bin") == read(workdir / "data" / "pair_0000_Y.bin")


@pytest.fixture(scope="module")
def trained(workdir):
    out = workdir / "train"
    cfg = dict(SMALL, learn={**SMALL["learn"], "checkpoint_every": 1})
    (workdir / "train.json").write_text(json.dumps(cfg))
    assert run("train", workdir / "data", "--config", workdir / "train.json", "--threads", 1, "--out", out) == 0
    return out


def test_train_outputs(trained):
    for name in ("design.json", "initial_design.json", "loss.csv", "timing.csv", "manifest.json"):
        assert (trained / name).exists()
    rows = list(csv.reader((trained / "loss.csv").open()))
    assert rows[0] == ["update_index", "mean_batch_loss"]
    assert [r[0] for r in rows[1:]] == ["0", "1", "2"]
    assert sorted(p.name for p in (trained / "checkpoints").iterdir()) == [
        "design_0001.json", "design_0002.json", "design_0003.json"]
    assert read(trained / "checkpoints" / "design_0003.json") == read(trained / "design.json")


def test_train_is_deterministic(workdir, trained, tmp_path):
    assert run("train", workdir / "data", "--config", workdir / "train.json", "--threads", 1,
               "--out", tmp_path / "a") == 0
    assert run("train", "--config", trained / "manifest.json", "--threads", 4, "--out", tmp_path / "b") == 0
    for out in (tmp_path / "a", tmp_path / "b"):
        assert read(out / "design.json") == read(trained / "design.json")
        assert read(out / "loss.csv") == read(trained / "loss.csv")


def test_train_seed_flag_overrides_config(workdir, trained, tmp_path):
    assert run("train", workdir / "data", "--config", workdir / "train.json", "--seed", 99,
               "--out", tmp_path / "s") == 0
    manifest = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert manifest["config"]["learn"]["rng_seed"] == 99
    assert manifest["config"]["recon"]["n_iters"] == 5


def test_reconstruct_from_dataset(workdir, trained, tmp_path):
    args = ("reconstruct", workdir / "data", "--config", workdir / "small.json", "--design",
            trained / "design.json", "--pair", 1)
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    assert read(tmp_path / "a" / "phase.png") == read(tmp_path / "b" / "phase.png")
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert np.isfinite(report["psnr_db"])
    phase, meta = load_array(tmp_path / "a" / "phase")
    assert phase.shape == (20, 20) and meta["domain"] == "spatial"
    from PIL import Image

    png = np.asarray(Image.open(tmp_path / "a" / "phase.png"))
    assert png.dtype == np.uint8 and png.min() == 0 and png.max() == 255


def test_reconstruct_zero_measurements(workdir, trained, tmp_path):
    save_array(tmp_path / "m", np.zeros((2, 20, 20), complex), "fourier")
    assert run("reconstruct", "--config", workdir / "small.json", "--design", trained / "design.json",
               "--measurements", tmp_path / "m", "--out", tmp_path / "o") == 0
    phase, _ = load_array(tmp_path / "o" / "phase")
    np.testing.assert_array_equal(phase, 0)
    assert "psnr_db" not in json.loads((tmp_path / "o" / "report.json").read_text())


def test_reconstruct_spatial_measurements(workdir, trained, tmp_path):
    save_array(tmp_path / "m", np.ones((2, 20, 20)), "spatial")
    assert run("reconstruct", "--config", workdir / "small.json", "--design", trained / "design.json",
               "--measurements", tmp_path / "m", "--out", tmp_path / "o") == 0
    np.testing.assert_allclose(load_array(tmp_path / "o" / "phase")[0], 0, atol=1e-15)
    save_array(tmp_path / "bad", np.ones((3, 20, 20)), "spatial")
    assert run("reconstruct", "--config", workdir / "small.json", "--design", trained / "design.json",
               "--measurements", tmp_path / "bad", "--out", tmp_path / "o") == 1


def test_benchmark(workdir, trained, tmp_path, capsys):
    out = tmp_path / "bench"
    assert run("benchmark", workdir / "data", "--config", workdir / "small.json",
               "--design", f"learned={trained / 'design.json'}", "--out", out) == 0
    rows = list(csv.DictReader((out / "results.csv").open()))
    assert len(rows) == 4 * 6
    assert [r["design"] for r in rows[::6]] == ["qdpc", "annular-approx", "random", "learned"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["learned"]["test"]["n"] == 2
    assert (out / "psnr_bar.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert "learned" in capsys.readouterr().out


def test_benchmark_single_pair_has_zero_std(workdir, tmp_path):
    cfg = dict(SMALL, dataset={**SMALL["dataset"], "n_train": 1, "n_test": 1})
    (tmp_path / "one.json").write_text(json.dumps(cfg))
    assert run("gen-dataset", "--config", tmp_path / "one.json", "--out", tmp_path / "d") == 0
    assert run("benchmark", tmp_path / "d", "--config", tmp_path / "one.json", "--out", tmp_path / "b") == 0
    summary = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert all(s["std_db"] == 0.0 for d in summary.values() for s in d.values())


def test_gradcheck_exit_codes(tmp_path):
    assert run("gradcheck", "--instances", 4, "--out", tmp_path) == 0
    assert (tmp_path / "gradcheck.csv").exists()
    assert run("gradcheck", "--instances", 4, "--corrupt-gradient") == 2


def test_show_design(workdir, trained, capsys, monkeypatch):
    monkeypatch.setenv("ILLUMOPT_NO_COLOR", "1")
    assert run("show-design", "--design", trained / "design.json", "--dataset", workdir / "data") == 0
    text = capsys.readouterr().out
    assert "measurement 1" in text and "measurement 2" in text
    assert "\x1b[" not in text
    monkeypatch.delenv("ILLUMOPT_NO_COLOR")
    assert run("show-design", "--design", trained / "design.json", "--config", workdir / "small.json") == 0
    assert "\x1b[38;5;" in capsys.readouterr().out


def test_render_design_glyphs():
    from illumopt.optics import LedArray

    leds = LedArray([(0.0, 0.1), (0.0, -0.1), (0.1, 0.0)])
    text = render_design(np.array([[0.75], [0.0], [0.25]]), np.array([[False], [True], [False]]), leds,
                         cells=3, color=False)
    lines = text.splitlines()
    assert lines[1].split() == ["9"]
    assert lines[2].split() == ["3"]
    assert lines[3].split() == ["."]


@pytest.mark.parametrize("argv", [
    ["train", "/nonexistent/dataset"],
    ["train"],
    ["reconstruct", "/nonexistent"],
    ["benchmark", "--k", "7"],
    ["show-design"],
    ["nope"],
])
def test_user_errors_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 1
    assert not any(tmp_path.iterdir())


def test_bad_config_exits_1(tmp_path, workdir):
    (tmp_path / "c.json").write_text(json.dumps({"recon": {"n_iters": 0}}))
    assert run("train", workdir / "data", "--config", tmp_path / "c.json") == 1
    (tmp_path / "c.json").write_text(json.dumps({"colour": 1}))
    assert run("gen-dataset", "--config", tmp_path / "c.json", "--out", tmp_path / "x") == 1
    (tmp_path / "c.json").write_text("{")
    assert run("gen-dataset", "--config", tmp_path / "c.json", "--out", tmp_path / "x") == 1


def test_infeasible_design_exits_1(workdir, tmp_path):
    bad = {"S": 13, "K": 2, "weights": [[-1.0, 1.0]] + [[2.0 / 12, 0.0]] * 12, "masks": [[0, 0]] * 13}
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    assert run("reconstruct", workdir / "data", "--design", tmp_path / "bad.json", "--out", tmp_path) == 1


def test_top_level_optics_keys(workdir, tmp_path):
    cfg = {"grid_h": 20, "grid_w": 20, "dataset": {"n_leds": 9, "n_train": 1, "n_test": 1}}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert run("gen-dataset", "--config", tmp_path / "c.json", "--out", tmp_path / "d") == 0
    ds = load_dataset(tmp_path / "d")
    assert ds.system.shape == (20, 20) and len(ds.leds) == 9


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "illumopt", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "illumopt" in proc.stdout
