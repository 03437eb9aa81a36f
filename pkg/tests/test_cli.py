import os
import subprocess
import sys

import numpy as np
import pytest

from sisfit.spectral import write_dataset

from test_extra import indicator_dataset


def run_cli(*args, env_extra=None, cwd=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "sisfit", *map(str, args)],
        capture_output=True,
        text=True,
        env=env,
        cwd=cwd,
    )


def report_value(text, key):
    for line in text.splitlines():
        if line.startswith(key + ":"):
            return line.split(":", 1)[1].strip()
    raise AssertionError(f"no {key!r} line in:\n{text}")


def test_synth_fit_verify_round_trip(tmp_path):
    data = tmp_path / "data"
    res = run_cli(
        "synth", "--family", "gaussian", "--sigma", 1, "--dim", 1,
        "--cells", 8, "--trunc", 1, "--out", data,
    )
    assert res.returncode == 0, res.stderr
    assert (data / "dataset.json").is_file() and (data / "dataset.bin").is_file()

    model = tmp_path / "model"
    res = run_cli(
        "fit", "--regime", "sis", "--data", data / "dataset.json",
        "--rank", 1, "--out", model,
    )
    assert res.returncode == 0, res.stderr
    assert float(report_value(res.stdout, "error")) <= 1e-12
    assert (model / "model.json").is_file()
    assert (model / "report.txt").is_file()
    assert (model / "generators.bin").is_file()
    assert (model / "residuals.csv").is_file()
    assert (model / "eigencurves.csv").is_file()

    res = run_cli("verify", "--model", model, "--data", data / "dataset.json")
    assert res.returncode == 0, res.stderr
    assert "result: pass" in res.stdout


def test_extra_golden_via_cli(tmp_path):
    ds = indicator_dataset()
    manifest = write_dataset(ds, tmp_path / "data", stem="chi")
    model = tmp_path / "model"
    res = run_cli(
        "fit", "--regime", "extra", "--data", manifest,
        "--rank", 1, "--dual-lattice", "2", "--out", model,
    )
    assert res.returncode == 0, res.stderr
    assert abs(float(report_value(res.stdout, "error")) - 1.0) <= 1e-9
    assert report_value(res.stdout, "cosets") == "2"
    assert (model / "home_cosets.csv").is_file()

    res = run_cli("verify", "--model", model, "--data", manifest)
    assert res.returncode == 0, res.stderr

    res = run_cli(
        "fit", "--regime", "extra", "--data", manifest,
        "--rank", 2, "--dual-lattice", "2", "--out", tmp_path / "model2",
    )
    assert abs(float(report_value(res.stdout, "error"))) <= 1e-10


def test_pw_fit_and_verify(tmp_path):
    data = tmp_path / "data"
    run_cli(
        "synth", "--family", "gaussian", "--sigma", 1, "--dim", 1,
        "--cells", 8, "--trunc", 1, "--out", data,
    )
    model = tmp_path / "model"
    res = run_cli(
        "fit", "--regime", "pw", "--data", data / "dataset.json",
        "--rank", 3, "--box", 1, "--out", model,
    )
    assert res.returncode == 0, res.stderr
    assert float(report_value(res.stdout, "error")) == 0.0
    rows = (model / "chosen.csv").read_text().strip().splitlines()
    assert all(row.split(",", 1)[1] == "-1,0,1" for row in rows)

    res = run_cli("verify", "--model", model, "--data", data / "dataset.json")
    assert res.returncode == 0, res.stderr
    assert "result: pass" in res.stdout


def test_discrete_fit_and_verify(tmp_path):
    seqs = tmp_path / "seqs.txt"
    seqs.write_text("0,0,1.0,0.0\n1,1,1.0,0.0\n")
    part = tmp_path / "part.txt"
    part.write_text("lattice: 2\n")
    model = tmp_path / "model"
    res = run_cli(
        "fit", "--regime", "discrete", "--data", seqs,
        "--rank", 1, "--partition", part, "--out", model,
    )
    assert res.returncode == 0, res.stderr
    assert float(report_value(res.stdout, "error")) == pytest.approx(1.0, abs=1e-12)
    assert report_value(res.stdout, "allocation") == "1 0"
    assert (model / "partition.txt").read_text() == part.read_text()

    res = run_cli("verify", "--model", model, "--data", seqs)
    assert res.returncode == 0, res.stderr
    assert "result: pass" in res.stdout


def test_verify_detects_corruption(tmp_path):
    data = tmp_path / "data"
    run_cli(
        "synth", "--family", "bspline", "--order", 1, "--dim", 1,
        "--cells", 4, "--trunc", 1, "--out", data,
    )
    model = tmp_path / "model"
    run_cli(
        "fit", "--regime", "sis", "--data", data / "dataset.json",
        "--rank", 1, "--out", model,
    )
    payload = model / "generators.bin"
    raw = np.fromfile(payload, dtype="<c16")
    raw[1] += 0.5
    raw.tofile(payload)
    res = run_cli("verify", "--model", model, "--data", data / "dataset.json")
    assert res.returncode == 1
    assert "FAIL" in res.stdout


def test_verify_wrong_grid_is_usage_error(tmp_path):
    data = tmp_path / "a"
    other = tmp_path / "b"
    for out, cells in ((data, 4), (other, 8)):
        run_cli(
            "synth", "--family", "gaussian", "--sigma", 1, "--dim", 1,
            "--cells", cells, "--trunc", 1, "--out", out,
        )
    model = tmp_path / "model"
    run_cli(
        "fit", "--regime", "sis", "--data", data / "dataset.json",
        "--rank", 1, "--out", model,
    )
    res = run_cli("verify", "--model", model, "--data", other / "dataset.json")
    assert res.returncode == 2
    assert "error:" in res.stderr


def test_usage_errors(tmp_path):
    res = run_cli(
        "synth", "--family", "wavelet", "--dim", 1, "--cells", 4,
        "--trunc", 1, "--out", tmp_path,
    )
    assert res.returncode == 2
    assert "error:" in res.stderr

    res = run_cli(
        "synth", "--family", "gaussian", "--dim", 1, "--cells", 4,
        "--trunc", 1, "--out", tmp_path,
    )
    assert res.returncode == 2  # missing --sigma

    res = run_cli(
        "synth", "--family", "gaussian", "--sigma", 1, "--order", 2,
        "--dim", 1, "--cells", 4, "--trunc", 1, "--out", tmp_path,
    )
    assert res.returncode == 2  # foreign family flag

    res = run_cli("verify", "--model", tmp_path / "nope", "--data", tmp_path / "nope.json")
    assert res.returncode == 2


def test_fit_flag_consistency(tmp_path):
    data = tmp_path / "data"
    run_cli(
        "synth", "--family", "gaussian", "--sigma", 1, "--dim", 1,
        "--cells", 4, "--trunc", 1, "--out", data,
    )
    manifest = data / "dataset.json"
    res = run_cli(
        "fit", "--regime", "sis", "--data", manifest, "--rank", 1,
        "--box", 1, "--out", tmp_path / "m1",
    )
    assert res.returncode == 2
    res = run_cli(
        "fit", "--regime", "extra", "--data", manifest, "--rank", 1,
        "--out", tmp_path / "m2",
    )
    assert res.returncode == 2  # missing --dual-lattice
    res = run_cli(
        "fit", "--regime", "pw", "--data", manifest, "--rank", 1,
        "--partition", "x.txt", "--out", tmp_path / "m3",
    )
    assert res.returncode == 2


def test_compare_sweep(tmp_path):
    data = tmp_path / "data"
    run_cli(
        "synth", "--family", "boxcar", "--halfwidth", 1, "--dim", 1,
        "--cells", 8, "--trunc", 2, "--out", data,
    )
    table = tmp_path / "table.csv"
    res = run_cli(
        "compare", "--data", data / "dataset.json",
        "--regimes", "sis,extra,pw", "--ranks", "1,2",
        "--dual-lattice", "2", "--boxes", "1,2", "--out", table,
    )
    assert res.returncode == 0, res.stderr
    assert "defect" not in res.stdout
    lines = table.read_text().strip().splitlines()
    assert lines[0] == "regime,rank,box,error,tail,total"
    # 2 sis + 2 extra + 2 ranks x 2 boxes pw
    assert len(lines) == 1 + 2 + 2 + 4

    res = run_cli(
        "compare", "--data", data / "dataset.json",
        "--regimes", "sis,discrete", "--ranks", "1",
    )
    assert res.returncode == 2


def test_compare_discrete(tmp_path):
    seqs = tmp_path / "seqs.txt"
    seqs.write_text("0,0,1.0,0.0\n1,1,1.0,0.0\n0,2,0.5,0.0\n")
    part = tmp_path / "part.txt"
    part.write_text("lattice: 2\n")
    res = run_cli(
        "compare", "--data", seqs, "--regimes", "discrete",
        "--ranks", "1,2,3", "--partition", part,
    )
    assert res.returncode == 0, res.stderr


def test_out_env_default(tmp_path):
    outdir = tmp_path / "env_out"
    res = run_cli(
        "synth", "--family", "gaussian", "--sigma", 1, "--dim", 1,
        "--cells", 4, "--trunc", 1,
        env_extra={"SISFIT_OUT": str(outdir)},
    )
    assert res.returncode == 0, res.stderr
    assert (outdir / "dataset.json").is_file()
