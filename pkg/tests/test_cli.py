import subprocess
import sys

import numpy as np
import pytest

from floatbase.cli import main
from floatbase.config import RunConfig
from floatbase.dataset import read_dataset, read_table
from floatbase.process import GRAVITY

SHORT = "gait.duration = 3.0\n"
STILL = ("gait.duration = 2.0\ngait.step_length = 0\ngait.sway_amplitude = 0\ngait.tilt_amplitude = 0\n"
         "gait.accel_bias = 0 0 0\ngait.gyro_bias = 0 0 0\nsim.noise_scale = 0\n")


def config(tmp_path, text, name="cfg.txt"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = config(root, SHORT)
    assert main(["simulate", "--config", cfg, "--out", str(root / "sim")]) == 0
    assert main(["estimate", "--config", cfg, "--dataset", str(root / "sim/dataset.csv"), "--out",
                 str(root / "est")]) == 0
    assert main(["evaluate", "--config", cfg, "--estimate", str(root / "est/estimate.csv"), "--truth",
                 str(root / "sim/truth.csv"), "--out", str(root / "eval")]) == 0
    return root


def test_simulate_rows_and_columns(pipeline):
    cols, data = read_table(pipeline / "sim/dataset.csv")
    assert data.shape[0] == 3.0 * 100 + 1
    assert cols[:7] == ["t", "ax", "ay", "az", "gx", "gy", "gz"]
    assert [c for c in cols if c.startswith("s_")] == [f"s_{i}" for i in range(1, 13)]


@pytest.mark.parametrize("sub", ["sim", "est", "eval"])
def test_config_is_written(pipeline, sub):
    cfg = RunConfig.load(pipeline / sub / "config.txt")
    assert cfg["gait.duration"] == 3.0


def test_evaluation_summary(pipeline):
    text = (pipeline / "eval/summary.txt").read_text()
    summary = dict(line.split(" = ") for line in text.splitlines())
    assert summary["alignment"] == "first_pose"
    assert float(summary["ate_pos_m"]) < 0.05
    assert float(summary["ate_rot_deg"]) < 2.0


def test_reruns_are_byte_identical(pipeline, tmp_path):
    cfg = config(tmp_path, SHORT)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "sim")])
    main(["estimate", "--config", cfg, "--dataset", str(tmp_path / "sim/dataset.csv"), "--out", str(tmp_path / "est")])
    for rel in ("sim/dataset.csv", "sim/truth.csv", "est/estimate.csv"):
        assert (tmp_path / rel).read_bytes() == (pipeline / rel).read_bytes(), rel


def test_seed_flag_changes_noise(pipeline, tmp_path):
    main(["simulate", "--config", config(tmp_path, SHORT), "--seed", "5", "--out", str(tmp_path / "sim")])
    assert (tmp_path / "sim/dataset.csv").read_bytes() != (pipeline / "sim/dataset.csv").read_bytes()
    assert RunConfig.load(tmp_path / "sim/config.txt")["seed"] == 5


def test_stationary_imu_columns(tmp_path):
    assert main(["simulate", "--config", config(tmp_path, STILL), "--out", str(tmp_path)]) == 0
    ds = read_dataset(tmp_path / "dataset.csv")
    assert np.allclose(ds.accel, [0, 0, GRAVITY], atol=1e-12) and np.abs(ds.gyro).max() == 0
    assert ds.contact_l.all() and ds.contact_r.all()


def test_evaluate_truth_against_itself(pipeline, tmp_path):
    truth = str(pipeline / "sim/truth.csv")
    assert main(["evaluate", "--estimate", truth, "--truth", truth, "--out", str(tmp_path)]) == 0
    summary = dict(line.split(" = ") for line in (tmp_path / "summary.txt").read_text().splitlines())
    for key in ("ate_pos_m", "ate_rot_deg", "ate_vel_mps", "rpe_pos_m", "rpe_rot_deg"):
        assert float(summary[key]) == 0.0, key


def test_converge_outputs(pipeline, tmp_path):
    cfg = config(tmp_path, SHORT + "converge.settle_time = 2.5\n")
    assert main(["converge", "--config", cfg, "--dataset", str(pipeline / "sim/dataset.csv"), "--trials", "3",
                 "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.glob("trial_*.csv")) == ["trial_000.csv", "trial_001.csv", "trial_002.csv"]
    _, trials = read_table(tmp_path / "trials.csv")
    assert trials.shape[0] == 3
    summary = dict(line.split(" = ") for line in (tmp_path / "summary.txt").read_text().splitlines())
    assert summary["trials"] == "3" and summary["converged"] == "3"


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["estimate", "--dataset", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--config", config(tmp_path, "noise.acel = 1\n"), "--out", str(tmp_path)]) == 1
    assert "unknown key" in capsys.readouterr().err
    bad = config(tmp_path, "gait.step_length = 0.8\n")
    assert main(["simulate", "--config", bad, "--out", str(tmp_path)]) == 1


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["simulate"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "floatbase.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
