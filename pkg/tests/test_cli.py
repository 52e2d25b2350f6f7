import json
import subprocess
import sys

import pytest

from nlthermo.cli import bundled_scenarios, main


def test_list_shows_bundled_scenarios(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("gk_uniform_decay", "ch_spinodal", "plate_single_mode", "dielectric_plane_wave"):
        assert name in out


def test_every_bundled_scenario_validates(capsys):
    for path in bundled_scenarios().values():
        assert main(["validate", str(path)]) == 0


def test_uniform_decay_passes_with_trace(tmp_path, capsys):
    assert main(["run", "gk_uniform_decay", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "gk_uniform_decay" / "report.json").read_text())
    assert report["verdict"] == "PASS"
    assert len(report["traces"]["decay_error"]) == 101
    header = (tmp_path / "gk_uniform_decay" / "timeseries.csv").read_text().splitlines()[0]
    assert header.split(",")[0] == "t" and "decay_error" in header


def test_negative_tau_n_fails_and_names_the_check(tmp_path, capsys):
    assert main(["run", "gk_negative_tau_n", "--out", str(tmp_path)]) == 1
    out = capsys.readouterr().out
    assert "FAIL second_law" in out
    report = json.loads((tmp_path / "gk_negative_tau_n" / "report.json").read_text())
    assert report["failed"] == ["second_law"]


def test_flipped_memory_kernel_fails(tmp_path, capsys):
    assert main(["run", "memory_flipped_kernel", "--out", str(tmp_path)]) == 1
    assert "FAIL psi2" in capsys.readouterr().out


def test_memory_report_flags_energy_identification(tmp_path, capsys):
    assert main(["run", "memory_switch_on", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "memory_switch_on" / "report.json").read_text())
    assert any("psi2" in n for n in report["notes"])
    assert "note:" in capsys.readouterr().out


def test_thermal_plate_reports_printed_flux_gap(tmp_path, capsys):
    cfg = tmp_path / "thermal.cfg"
    cfg.write_text(
        "model = plate\ngrid.n = 32\nmodel.a = 1.0\nmodel.c_th = 0.5\n"
        "theta.preset = sine\ntheta.amplitude = 0.3\ntime.steps = 50\n"
    )
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "thermal" / "report.json").read_text())
    assert report["traces"]["printed_flux_gap"] > 1e-3


def test_empty_config_is_a_validation_error(tmp_path, capsys):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("")
    assert main(["validate", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "model" in err and "grid.n" in err and "time.steps" in err


def test_unknown_key_names_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model = fourier\ngrid.n = 16\ntime.steps = 2\ncolour = blue\n")
    assert main(["run", str(cfg)]) == 2
    assert "line 4" in capsys.readouterr().err


def test_output_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("NLT_OUTPUT_DIR", str(tmp_path / "env_root"))
    assert main(["run", "fourier_control"]) == 0
    assert (tmp_path / "env_root" / "fourier_control" / "report.json").exists()


def _small_batch(dirpath):
    dirpath.mkdir()
    (dirpath / "a.cfg").write_text(
        "model = gk\ngrid.n = 32\nmodel.tau_r = 0.5\nmodel.tau_n = 0.02\nmodel.c0 = 2\n"
        "init.preset = random\ntime.steps = 20\n"
    )
    (dirpath / "b.cfg").write_text(
        "model = cahn_hilliard\ngrid.n = 32\nmodel.gamma = 0.02\nmodel.beta = 1\nmodel.theta0 = 1\n"
        "model.theta = 0.5\ninit.preset = noise\ntime.steps = 20\n"
    )


def test_batch_is_byte_identical(tmp_path, capsys):
    cfgs = tmp_path / "cfgs"
    _small_batch(cfgs)
    outs = []
    for k in range(2):
        root = tmp_path / f"out{k}"
        assert main(["batch", str(cfgs), "--jobs", "2", "--seed", "11", "--out", str(root)]) == 0
        outs.append({p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()})
    assert outs[0] == outs[1]
    assert len(outs[0]) == 6


def test_seed_changes_random_outputs(tmp_path, capsys):
    cfgs = tmp_path / "cfgs"
    _small_batch(cfgs)
    main(["batch", str(cfgs), "--seed", "1", "--out", str(tmp_path / "s1")])
    main(["batch", str(cfgs), "--seed", "2", "--out", str(tmp_path / "s2")])
    a = (tmp_path / "s1" / "a" / "timeseries.csv").read_text()
    b = (tmp_path / "s2" / "a" / "timeseries.csv").read_text()
    assert a != b


@pytest.mark.slow
def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "nlthermo", "run", "fourier_control", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "PASS virtual_balance" in proc.stdout
