import csv
import os
import shutil
import subprocess
import sys

import pytest

from stiffchemo import cli, ks
from stiffchemo import config as C
from stiffchemo.model import TABLE1, TABLE1_CLASSIFICATION, params_from_table1
from stiffchemo.snapshots import read_header, read_snapshots

MC_SMALL = ["--set", "B", "--k", "0.1", "--L", "5", "--I", "100", "--M", "20",
            "--t-end", "1", "--snapshot-every", "0.25", "--window-start", "0.5",
            "--window-interval", "0.25", "--seed", "2"]


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "stiffchemo" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stiffchemo", "--version"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0 and "0.1.0" in res.stdout


def test_classify_table1(tmp_path):
    assert cli.main(["classify", "--table1", "--out", str(tmp_path)]) == cli.EXIT_OK
    rows = _rows(tmp_path / "classify.csv")
    got = {(r["set"], float(r["k"])): r["unstable"] == "True" for r in rows}
    assert got == {(n, float(k)): v for (n, k), v in TABLE1_CLASSIFICATION.items()}


def test_classify_single_set(tmp_path, capsys):
    assert cli.main(["classify", "--set", "B", "--k", "0.1", "--out", str(tmp_path)]) == 0
    assert "unstable" in capsys.readouterr().out
    cfg = C.loads(read_header(tmp_path / "classify.csv"))
    assert cfg.params == params_from_table1(*TABLE1["B"], k=0.1)
    assert cfg.mode == "classify"


@pytest.mark.parametrize("argv", [
    ["classify", "--set", "B"],                                        # no k
    ["classify", "--set", "B", "--k", "1", "--chi-over-sqrtk", "3"],   # chi >= 1
    ["classify", "--k", "1", "--d", "1"],                              # partial raw
    ["stability-diagram", "--d-over-k-range", "5", "1", "3"],
    ["stability-diagram", "--k-values", "-1"],
    ["dispersion", "--set", "B", "--k", "1", "--lambda-range", "1", "0", "5"],
    ["mc-run", *MC_SMALL, "--dt", "0.3"],                              # tumble prob > 1
    ["ks-run", "--set", "B", "--k", "0.1", "--init", "mode", "--mode", "0"],
    ["spectrum", "does-not-exist.csv"],
    ["verify", "--check", "nope"],
    ["verify", "--mutate", "diffusion"],
    ["verify", "--mutate", "gravity=1"],
])
def test_invalid_input_exits_1(argv, tmp_path, capsys):
    assert cli.main([*argv, "--out", str(tmp_path)]) == cli.EXIT_INVALID
    assert "invalid input" in capsys.readouterr().err


def test_stability_diagram(tmp_path):
    argv = ["stability-diagram", "--k-values", "0.1", "1", "--d-over-k-values", "0.5", "2",
            "--out", str(tmp_path)]
    assert cli.main(argv) == 0
    rows = _rows(tmp_path / "stability_diagram.csv")
    assert [r["curve"] for r in rows].count("kinetic") == 4
    assert [r["curve"] for r in rows].count("continuum") == 2


def test_dispersion(tmp_path):
    argv = ["dispersion", "--set", "B", "--k", "0.1", "--lambda-range", "0.5", "20", "40",
            "--out", str(tmp_path)]
    assert cli.main(argv) == 0
    rows = _rows(tmp_path / "dispersion.csv")
    assert len(rows) == 40
    assert any(r["unstable"] == "True" for r in rows)
    for r in rows:
        assert (r["unstable"] == "True") == (float(r["mu1"]) > 0)


def test_mc_run_outputs_and_rerun_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["mc-run", *MC_SMALL, "--out", str(a)]) == 0
    assert cli.main(["mc-run", *MC_SMALL, "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["metrics.csv", "peak.csv", "snapshots.csv", "spacetime.csv", "spectrum.csv"]
    for n in names:
        # headers carry the output directory, so compare everything else
        strip = lambda p: [ln for ln in p.read_text().splitlines() if not ln.startswith("# dir")]
        assert strip(a / n) == strip(b / n), n
    snaps, dx, solver, header = read_snapshots(a / "snapshots.csv")
    assert len(snaps) == 5 and dx == pytest.approx(0.05) and solver == "mc"
    cfg = C.loads(header)
    assert cfg.mc.seed == 2 and cfg.mc.M == 20
    assert "backend = " in header


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "env"))
    assert cli.main(["classify", "--set", "D", "--k", "1"]) == 0
    assert (tmp_path / "env" / "classify.csv").exists()
    monkeypatch.delenv(cli.ENV_OUT)
    assert cli.main(["classify", "--set", "D", "--k", "1"]) == 0
    assert (tmp_path / "out" / "classify.csv").exists()


def test_binary_output_and_spectrum_reanalysis(tmp_path):
    run = tmp_path / "run"
    assert cli.main(["mc-run", *MC_SMALL, "--format", "binary", "--out", str(run)]) == 0
    again = tmp_path / "again"
    assert cli.main(["spectrum", str(run / "snapshots.bin"), "--out", str(again)]) == 0
    assert _rows(run / "spectrum.csv") == _rows(again / "spectrum.csv")
    assert _rows(run / "peak.csv") == _rows(again / "peak.csv")


def test_config_file_with_overrides(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[params]\nset = D\nk = 1\n[mc]\nseed = 5\nM = 7\n")
    out = tmp_path / "o"
    argv = ["mc-run", "--config", str(ini), "--L", "2", "--I", "40", "--t-end", "0.5",
            "--snapshot-every", "0.25", "--seed", "9", "--k", "2", "--out", str(out)]
    assert cli.main(argv) == 0
    cfg = C.loads(read_header(out / "snapshots.csv"))
    assert (cfg.mc.seed, cfg.mc.M, cfg.mc.I) == (9, 7, 40)
    # moving k alone keeps the configured set's Table 1 triple
    assert cfg.params == params_from_table1(*TABLE1["D"], k=2.0)


def test_ks_run(tmp_path, capsys):
    argv = ["ks-run", "--set", "B", "--k", "0.1", "--L", "30", "--I", "150", "--t-end", "4",
            "--snapshot-every", "1", "--out", str(tmp_path)]
    assert cli.main(argv) == 0
    snaps, _, solver, header = read_snapshots(tmp_path / "snapshots.csv")
    assert solver == "ks" and len(snaps) == 5
    assert C.loads(header).ks.L == 30.0
    assert "final pattern class" in capsys.readouterr().out


def test_ks_blowup_exits_2(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(ks, "BLOWUP", 1.0 + 1e-6)
    argv = ["ks-run", "--set", "B", "--k", "0.1", "--L", "30", "--I", "150", "--t-end", "1",
            "--amplitude", "1e-3", "--out", str(tmp_path)]
    assert cli.main(argv) == cli.EXIT_ABORT
    assert "aborted" in capsys.readouterr().err


def test_verify_pass_and_mutation(tmp_path, capsys):
    assert cli.main(["verify", "--check", "table1", "--out", str(tmp_path)]) == 0
    assert "PASS table1" in capsys.readouterr().out
    assert (tmp_path / "verify.json").exists()
    argv = ["verify", "--check", "continuum_dispersion", "--mutate", "diffusion=0.3"]
    assert cli.main(argv) == cli.EXIT_VERIFY
    assert "FAIL continuum_dispersion" in capsys.readouterr().out
    assert ks.DIFFUSION == pytest.approx(1 / 3)


def test_console_script_installed():
    exe = os.path.join(os.path.dirname(sys.executable), "stiffchemo")
    if not os.path.exists(exe):
        exe = shutil.which("stiffchemo")
    if exe is None:
        pytest.skip("console script not on this interpreter's bin path")
    res = subprocess.run([exe, "classify", "--help"], capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "--table1" in res.stdout
