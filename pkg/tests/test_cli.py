"""Command line entry points, run directories, and determinism."""

import json
import re

import pytest

from fluxgate.cli import main

BASE = """\
[qubit0]
e_c = 1.02
e_l = 1.14
e_j = 4.75

[qubit1]
e_c = 0.96
e_l = 1.2
e_j = 4.25

[coupler]
e_c = 0.155
e_j_max = 55.0

[couplings]
j_c0 = 0.5
j_c1 = 0.5
j_01 = 0.035
"""

CHEVRON_TINY = """\
[output]
dt = 0.002

[chevron]
flux_s = 0.35
drive_amp = 0.03
freq_min = 10.78
freq_max = 10.80
freq_points = 2
time_max = 20.0
time_points = 3
"""


def write_cfg(tmp_path, extra="", name="run.cfg"):
    path = tmp_path / name
    path.write_text(BASE + extra)
    return str(path)


def run_json(run_dir):
    payload = json.loads((run_dir / "run.json").read_text())
    payload.pop("created")
    return payload


def only_run_dir(root, command):
    dirs = [p for p in root.iterdir() if p.name.startswith(command + "-")]
    assert len(dirs) == 1
    return dirs[0]


def test_spectrum_with_reference(cfg500_path, tmp_path, capsys):
    out = tmp_path / "a"
    assert main(["spectrum", "--config", cfg500_path, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "reference comparison" in text
    assert len(re.findall(r"\| \d\.\d{2}e-0\d", text)) == 20

    run_dir = only_run_dir(out, "spectrum")
    assert re.fullmatch(r"spectrum-[0-9a-f]{12}", run_dir.name)
    csv = (run_dir / "result.csv").read_text()
    assert csv.splitlines()[0] == "circuit,kind,i,j,value"
    meta = run_json(run_dir)
    assert meta["schema"] == "fluxgate.run/1"
    assert meta["failures"] == []
    assert meta["run_id"] == run_dir.name.split("-")[1]

    # Same inputs land in the same directory with identical content.
    assert main(["spectrum", "--config", cfg500_path, "--out", str(out)]) == 0
    assert only_run_dir(out, "spectrum") == run_dir
    assert (run_dir / "result.csv").read_text() == csv
    assert run_json(run_dir) == meta


def test_spectrum_without_reference(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert "reference comparison" not in capsys.readouterr().out


def test_worker_count_invisible_in_results(tmp_path):
    cfg = write_cfg(tmp_path, "[shift_scan]\nflux_min = 0.0\nflux_max = 0.2\npoints = 3\n")
    a, b = tmp_path / "w1", tmp_path / "w2"
    assert main(["shift-scan", "--config", cfg, "--out", str(a), "--workers", "1"]) == 0
    assert main(["shift-scan", "--config", cfg, "--out", str(b), "--workers", "2"]) == 0
    csv_a = (only_run_dir(a, "shift-scan") / "result.csv").read_bytes()
    csv_b = (only_run_dir(b, "shift-scan") / "result.csv").read_bytes()
    assert csv_a == csv_b
    header = csv_a.decode().splitlines()[0]
    assert header == "flux,shift_p0,shift_p1,zz,ambiguous"


def test_chevron_domain_failure_sets_exit_code(tmp_path, capsys):
    bad = CHEVRON_TINY.replace("flux_s = 0.35", "flux_s = 0.46").replace(
        "drive_amp = 0.03", "drive_amp = 0.07"
    )
    cfg = write_cfg(tmp_path, bad)
    out = tmp_path / "o"
    assert main(["chevron", "--config", cfg, "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "point failed" in err

    run_dir = only_run_dir(out, "chevron")
    meta = run_json(run_dir)
    assert len(meta["failures"]) == 2
    body = (run_dir / "result.csv").read_text().splitlines()[1:]
    assert all("nan" in line for line in body)


def test_chevron_resume_and_recompute(tmp_path, capsys):
    cfg = write_cfg(tmp_path, CHEVRON_TINY)
    out = tmp_path / "o"
    assert main(["chevron", "--config", cfg, "--out", str(out)]) == 0
    assert "deepest 101 depletion" in capsys.readouterr().out
    run_dir = only_run_dir(out, "chevron")
    first = (run_dir / "result.csv").read_text()
    assert not (run_dir / "progress.jsonl").exists()

    # A checkpointed point is trusted under --resume and recomputed without.
    fake = {k: [0.5, 0.5, 0.5] for k in ("000", "001", "100", "101", "202",
                                         "computational")}
    entry = {"key": "10.78", "value": fake}
    (run_dir / "progress.jsonl").write_text(json.dumps(entry) + "\n")
    assert main(["chevron", "--config", cfg, "--out", str(out), "--resume"]) == 0
    resumed = (run_dir / "result.csv").read_text()
    assert resumed != first
    assert "10.78,0,0.5" in resumed or "10.78,0.0,0.5" in resumed

    assert main(["chevron", "--config", cfg, "--out", str(out)]) == 0
    assert (run_dir / "result.csv").read_text() == first


def test_floquet_not_found_is_a_failure(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "[output]\ndt = 0.002\n\n[floquet]\nflux_s = 0.35\namp_values = 0.1\n"
        "window = 0.001\nresolution = 5\n",
    )
    out = tmp_path / "o"
    assert main(["floquet", "--config", cfg, "--out", str(out)]) == 1
    assert "not found" in capsys.readouterr().err

    run_dir = only_run_dir(out, "floquet")
    body = (run_dir / "result.csv").read_text().splitlines()
    assert body[0] == "amp,omega_res,strength,found"
    assert body[1].endswith(",0")


def test_gate_opt_stagnation_report(tmp_path, capsys):
    # Search window pinned 100 MHz above the resonance: the conditional
    # phase cannot reach pi, so the calibration must report stagnation.
    cfg = write_cfg(
        tmp_path,
        "[output]\ndt = 0.002\n\n[gate]\nmode = static-bias\nflux_idle = 0.35\n"
        "gate_time = 30.0\nrestarts = 1\nbudget = 10\n"
        "freq_min = 10.90\nfreq_max = 10.95\namp_min = 0.01\namp_max = 0.05\n",
    )
    out = tmp_path / "o"
    code = main(["gate-opt", "--config", cfg, "--out", str(out)])
    assert code == 1
    text = capsys.readouterr()
    assert "optimum:" in text.out
    assert "stagnated" in text.err

    report = json.loads((only_run_dir(out, "gate-opt") / "report.json").read_text())
    assert report["schema"] == "fluxgate.gate_opt/1"
    assert report["success"] is False
    assert report["n_evaluations"] >= 10
    assert report["metrics"]["leakage"] >= 0.0


def test_gate_sweep_rows(tmp_path):
    cfg = write_cfg(
        tmp_path,
        "[output]\ndt = 0.002\n\n[gate]\nmode = static-bias\nflux_idle = 0.35\n"
        "gate_time = 30.0\nrestarts = 1\nbudget = 10\n"
        "freq_min = 10.90\nfreq_max = 10.95\namp_min = 0.01\namp_max = 0.05\n\n"
        "[gate_sweep]\ngate_times = 12.0, 30.0\ndrive_ramps = 5.0\n",
    )
    out = tmp_path / "o"
    assert main(["gate-sweep", "--config", cfg, "--out", str(out)]) == 1
    run_dir = only_run_dir(out, "gate-sweep")
    body = (run_dir / "result.csv").read_text().splitlines()
    assert body[0] == "gate_time,drive_ramp,error,leakage,omega_p,drive_amp,success"
    assert len(body) == 2  # 12 ns fails the ramp precondition and is dropped
    assert body[1].startswith("30,5,")
    assert body[1].endswith(",0")
    meta = run_json(run_dir)
    assert meta["failures"][0]["point"] == "30|5"


def test_output_root_priority(tmp_path, monkeypatch, capsys):
    cfg = write_cfg(tmp_path)
    env_root = tmp_path / "from_env"
    monkeypatch.setenv("FLUXGATE_OUTPUT_ROOT", str(env_root))
    assert main(["spectrum", "--config", cfg]) == 0
    assert only_run_dir(env_root, "spectrum").exists()

    flag_root = tmp_path / "from_flag"
    assert main(["spectrum", "--config", cfg, "--out", str(flag_root)]) == 0
    assert only_run_dir(flag_root, "spectrum").exists()
    capsys.readouterr()


def test_dt_flag_is_picoseconds(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "o"
    assert main(["spectrum", "--config", cfg, "--out", str(out), "--dt", "2.0"]) == 0
    meta = run_json(only_run_dir(out, "spectrum"))
    assert meta["dt"] == 0.002
    capsys.readouterr()


def test_config_errors_leave_no_output(tmp_path, capsys):
    out = tmp_path / "o"
    missing = str(tmp_path / "absent.cfg")
    assert main(["spectrum", "--config", missing, "--out", str(out)]) == 2
    assert "configuration error" in capsys.readouterr().err
    assert not out.exists()

    cfg = write_cfg(tmp_path, "[vortex]\nx = 1\n")
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()

    good = write_cfg(tmp_path, name="good.cfg")
    assert main(["spectrum", "--config", good, "--out", str(out), "--workers", "0"]) == 2
    assert not out.exists()
    capsys.readouterr()
