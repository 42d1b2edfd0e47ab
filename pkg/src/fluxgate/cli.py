"""Command-line entry points for every bundled experiment.

Each command reads one INI config, validates it fully before touching
the filesystem, and writes a CSV (or JSON report) plus a versioned JSON
sidecar into a content-addressed run directory. Grid commands process
independent points through an optional process pool; per-point failures
are logged and reflected in the exit code while the scan continues.
Completed points are checkpointed, so an interrupted run can be resumed
with ``--resume`` without recomputing finished work.

Exit codes: 0 clean, 1 at least one point or optimization failed,
2 configuration or usage errors (nothing is written).

Output files use GHz, ns, and flux quanta, matching the config format.
The default output root comes from ``--out``, the config, or the
``FLUXGATE_OUTPUT_ROOT`` environment variable, in that order.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import gates
from .circuits import diagonalize_fluxonium, diagonalize_transmon_charge
from .config import RunConfig, load_config
from .errors import ConfigError, FluxgateError
from .evolve import (
    DEFAULT_RECORD,
    amplitude_point,
    chevron_column,
    dressed_frame,
)
from .floquet import extract_transition
from .pulses import ParametricPulse
from .system import build_hamiltonian, label_eigenstates, state_dependent_shifts, zz_coupling

SIDECAR_SCHEMA = "fluxgate.run/1"
OUTPUT_ROOT_ENV = "FLUXGATE_OUTPUT_ROOT"
PROGRESS_NAME = "progress.jsonl"


def _fmt(value) -> str:
    """Stable text form for CSV cells."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _canonical(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def _label_text(label) -> str:
    return "".join(str(d) for d in label)


class RunDirectory:
    """Content-addressed output directory with point checkpoints."""

    def __init__(self, root: Path, command: str, payload: dict):
        digest = hashlib.sha256(_canonical(payload).encode()).hexdigest()
        self.command = command
        self.run_id = digest[:12]
        self.payload = payload
        self.path = root / f"{command}-{self.run_id}"
        self.path.mkdir(parents=True, exist_ok=True)

    def completed_points(self, resume: bool) -> dict[str, object]:
        progress = self.path / PROGRESS_NAME
        if not resume:
            progress.unlink(missing_ok=True)
            return {}
        done: dict[str, object] = {}
        if progress.exists():
            with open(progress, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        entry = json.loads(line)
                        done[entry["key"]] = entry["value"]
        return done

    def checkpoint(self, key: str, value) -> None:
        with open(self.path / PROGRESS_NAME, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"key": key, "value": value}) + "\n")
            fh.flush()

    def clear_checkpoints(self) -> None:
        (self.path / PROGRESS_NAME).unlink(missing_ok=True)

    def write_csv(self, name: str, header: list[str], rows: list[list]) -> Path:
        target = self.path / name
        lines = [",".join(header)]
        lines += [",".join(_fmt(cell) for cell in row) for row in rows]
        target.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return target

    def write_json(self, name: str, payload: dict) -> Path:
        target = self.path / name
        target.write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        return target

    def write_sidecar(self, dt: float, outputs: list[str], failures: list[dict],
                      n_points: int) -> Path:
        return self.write_json(
            "run.json",
            {
                "schema": SIDECAR_SCHEMA,
                "command": self.command,
                "run_id": self.run_id,
                "created": datetime.now(timezone.utc).isoformat(),
                "dt": dt,
                "inputs": self.payload,
                "n_points": n_points,
                "failures": failures,
                "outputs": outputs,
            },
        )


def _run_points(
    run_dir: RunDirectory,
    jobs: list[tuple[str, tuple]],
    worker,
    workers: int,
    resume: bool,
) -> tuple[dict[str, object], list[dict]]:
    """Evaluate keyed jobs, checkpointing each completed point.

    Returns all point values keyed by job key plus failure records.
    Values must be JSON-serializable. Worker failures of the library's
    error types are recorded; anything else propagates.
    """
    done = run_dir.completed_points(resume)
    pending = [(key, args) for key, args in jobs if key not in done]
    failures: list[dict] = []

    def record(key: str, outcome, error: str | None):
        if error is None:
            done[key] = outcome
            run_dir.checkpoint(key, outcome)
        else:
            failures.append({"point": key, "message": error})

    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(worker, *args): key for key, args in pending}
            for future in as_completed(futures):
                key = futures[future]
                try:
                    record(key, future.result(), None)
                except FluxgateError as exc:
                    record(key, None, str(exc))
    else:
        for key, args in pending:
            try:
                record(key, worker(*args), None)
            except FluxgateError as exc:
                record(key, None, str(exc))
    return done, failures


# Worker functions live at module scope so process pools can import them.

def _shift_point(params, flux: float) -> list:
    try:
        spec = label_eigenstates(build_hamiltonian(params, float(flux)))
        d0, d1 = state_dependent_shifts(spec)
        zz = zz_coupling(spec)
        return [d0, d1, zz, 0]
    except FluxgateError:
        return [np.nan, np.nan, np.nan, 1]


def _chevron_point(params, template, freq, t_grid, psi0, dt, record) -> dict:
    column = chevron_column(
        params, template, freq, np.asarray(t_grid), tuple(psi0), None, dt, record
    )
    return {
        ("computational" if key == "computational" else _label_text(key)): [
            float(v) for v in values
        ]
        for key, values in column.items()
    }


def _amplitude_cell(params, template, freq, amp, fixed_time, psi0, dt) -> float:
    return amplitude_point(
        params, template, freq, amp, fixed_time, tuple(psi0), None, dt
    )


def _floquet_point(params, flux_s, amp, pair, window, resolution, dt) -> list:
    frame = dressed_frame(params, flux_s)
    split = frame.energy_of(pair[1]) - frame.energy_of(pair[0])
    result = extract_transition(
        params, flux_s, amp, pair,
        (split - window, split + window), resolution, dt=dt,
    )
    return [
        result.omega_res if result.found else np.nan,
        result.strength if result.found else np.nan,
        int(result.found),
    ]


def _sweep_cell(params, gate_cfg, t_g, ramp, dt, restarts, budget) -> list:
    row = gates._sweep_point((params, gate_cfg, t_g, ramp, dt, restarts, budget))
    message = row["message"]
    if not row["success"] and not message:
        message = "optimizer stagnated above the objective limit"
    return [
        row["error"], row["leakage"], row["omega_p"], row["drive_amp"],
        bool(row["success"]), message,
    ]


def _params_payload(rc: RunConfig) -> dict:
    return asdict(rc.params)


def _grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(float(lo), float(hi), int(n))


def cmd_spectrum(rc: RunConfig, run_dir: RunDirectory, dt: float, workers: int,
                 resume: bool) -> tuple[list[dict], list[str]]:
    rows: list[list] = []
    computed: dict[str, float] = {}

    # The reported ladder pairs the parity-allowed transitions with their
    # charge matrix elements: 0-1, 1-2, 0-3, 1-4.
    ladder = ((0, 1), (1, 2), (0, 3), (1, 4))
    for name, qubit in (("q0", rc.params.q0), ("q1", rc.params.q1)):
        data = diagonalize_fluxonium(qubit, n_levels=6)
        for i, j in ladder:
            value = data.transition(i, j)
            rows.append([name, "transition", i, j, value])
            computed[f"{name}_f{i}{j}"] = value
        for i, j in ladder:
            value = abs(data.n_elements[i, j])
            rows.append([name, "element", i, j, value])
            computed[f"{name}_n{i}{j}"] = value

    flux_points = [0.0]
    ref = rc.reference
    flux_s = None
    if ref is not None and ref.interaction_flux is not None:
        flux_s = ref.interaction_flux
    elif rc.gate is not None:
        flux_s = rc.gate.drive_flux
    if flux_s is not None:
        flux_points.append(float(flux_s))
    for flux in flux_points:
        data = diagonalize_transmon_charge(rc.params.coupler, n_levels=4, flux=flux)
        for i, j in ((0, 1), (1, 2)):
            value = data.transition(i, j)
            rows.append(["coupler", f"transition@{_fmt(flux)}", i, j, value])
            computed[f"coupler_w{i}{j}@{_fmt(flux)}"] = value
            rows.append(
                ["coupler", f"element@{_fmt(flux)}", i, j, abs(data.n_elements[i, j])]
            )

    csv = run_dir.write_csv("result.csv", ["circuit", "kind", "i", "j", "value"], rows)
    n_points = len(rows)

    if ref is not None:
        print("reference comparison (computed | reference | diff):")
        pairs: list[tuple[str, float, float]] = []
        transition_keys = ("f01", "f12", "f03", "f14")
        for name, values in (("q0", ref.q0_transitions), ("q1", ref.q1_transitions)):
            if values:
                pairs += [
                    (f"{name} {key}", computed[f"{name}_{key}"], v)
                    for key, v in zip(transition_keys, values)
                ]
        element_keys = ("n01", "n12", "n03", "n14")
        for name, values in (("q0", ref.q0_elements), ("q1", ref.q1_elements)):
            if values:
                pairs += [
                    (f"{name} {key}", computed[f"{name}_{key}"], v)
                    for key, v in zip(element_keys, values)
                ]
        for key, ref_value in (("w01", ref.coupler_w01), ("w12", ref.coupler_w12)):
            if ref_value is not None:
                pairs.append((f"coupler {key}", computed[f"coupler_{key}@0"], ref_value))
        if flux_s is not None:
            for key, ref_value in (
                ("w01", ref.coupler_w01_interaction),
                ("w12", ref.coupler_w12_interaction),
            ):
                if ref_value is not None:
                    pairs.append(
                        (
                            f"coupler {key}@{_fmt(float(flux_s))}",
                            computed[f"coupler_{key}@{_fmt(float(flux_s))}"],
                            ref_value,
                        )
                    )
        for label, value, ref_value in pairs:
            print(f"  {label:<14} {value:12.6f} | {ref_value:10.6f} | {abs(value - ref_value):.2e}")

    return [], [csv.name], n_points


def cmd_shift_scan(rc: RunConfig, run_dir: RunDirectory, dt: float, workers: int,
                   resume: bool) -> tuple[list[dict], list[str]]:
    scan = rc.require("shift_scan")
    grid = _grid(scan.flux_min, scan.flux_max, scan.points)
    jobs = [(_fmt(float(f)), (rc.params, float(f))) for f in grid]
    done, failures = _run_points(run_dir, jobs, _shift_point, workers, resume)

    rows = []
    for f in grid:
        key = _fmt(float(f))
        if key in done:
            d0, d1, zz, ambiguous = done[key]
            rows.append([float(f), d0, d1, zz, int(ambiguous)])
        else:
            rows.append([float(f), np.nan, np.nan, np.nan, 1])
    csv = run_dir.write_csv(
        "result.csv", ["flux", "shift_p0", "shift_p1", "zz", "ambiguous"], rows
    )
    return failures, [csv.name], len(jobs)


def cmd_chevron(rc: RunConfig, run_dir: RunDirectory, dt: float, workers: int,
                resume: bool) -> tuple[list[dict], list[str]]:
    scan = rc.require("chevron")
    freqs = _grid(scan.freq_min, scan.freq_max, scan.freq_points)
    t_grid = _grid(0.0, scan.time_max, scan.time_points)
    template = ParametricPulse(
        flux_static=scan.flux_s,
        drive_amp=scan.drive_amp,
        drive_freq=freqs[0],
        ramp_time=scan.ramp_time,
        gate_time=scan.time_max,
    )
    record = DEFAULT_RECORD
    jobs = [
        (_fmt(float(f)), (rc.params, template, float(f), t_grid.tolist(), scan.psi0, dt, record))
        for f in freqs
    ]
    done, failures = _run_points(run_dir, jobs, _chevron_point, workers, resume)

    label_keys = [_label_text(lab) for lab in record]
    header = ["freq", "time"] + [f"p{k}" for k in label_keys] + ["computational"]
    rows = []
    target_key = _label_text(scan.psi0)
    valley_freq, valley_pop = np.nan, np.inf
    for f in freqs:
        key = _fmt(float(f))
        column = done.get(key)
        for ti, t in enumerate(t_grid):
            cells = [float(f), float(t)]
            if column is None:
                cells += [np.nan] * (len(label_keys) + 1)
            else:
                cells += [column[k][ti] for k in label_keys]
                cells.append(column["computational"][ti])
            rows.append(cells)
        if column is not None and target_key in column:
            low = min(column[target_key])
            if low < valley_pop:
                valley_pop, valley_freq = low, float(f)
    csv = run_dir.write_csv("result.csv", header, rows)
    if np.isfinite(valley_freq):
        print(
            f"deepest {target_key} depletion at {valley_freq:.6f} GHz "
            f"(population {valley_pop:.4f})"
        )
    return failures, [csv.name], len(jobs)


def cmd_amplitude(rc: RunConfig, run_dir: RunDirectory, dt: float, workers: int,
                  resume: bool) -> tuple[list[dict], list[str]]:
    scan = rc.require("amplitude")
    freqs = _grid(scan.freq_min, scan.freq_max, scan.freq_points)
    amps = _grid(scan.amp_min, scan.amp_max, scan.amp_points)
    template = ParametricPulse(
        flux_static=scan.flux_s,
        drive_amp=amps[0],
        drive_freq=freqs[0],
        ramp_time=scan.ramp_time,
        gate_time=scan.fixed_time,
    )
    jobs = [
        (
            f"{_fmt(float(f))}|{_fmt(float(a))}",
            (rc.params, template, float(f), float(a), scan.fixed_time, (1, 0, 1), dt),
        )
        for f in freqs
        for a in amps
    ]
    done, failures = _run_points(run_dir, jobs, _amplitude_cell, workers, resume)

    rows = []
    for f in freqs:
        for a in amps:
            key = f"{_fmt(float(f))}|{_fmt(float(a))}"
            rows.append([float(f), float(a), done.get(key, np.nan)])
    csv = run_dir.write_csv("result.csv", ["freq", "amp", "p101"], rows)
    return failures, [csv.name], len(jobs)


def cmd_floquet(rc: RunConfig, run_dir: RunDirectory, dt: float, workers: int,
                resume: bool) -> tuple[list[dict], list[str]]:
    scan = rc.require("floquet")
    jobs = [
        (
            _fmt(float(amp)),
            (rc.params, scan.flux_s, float(amp), scan.pair, scan.window,
             scan.resolution, dt),
        )
        for amp in scan.amp_values
    ]
    done, failures = _run_points(run_dir, jobs, _floquet_point, workers, resume)

    rows = []
    for amp in scan.amp_values:
        key = _fmt(float(amp))
        if key in done:
            omega, strength, found = done[key]
            rows.append([float(amp), omega, strength, int(found)])
            if not found:
                failures.append({
                    "point": key,
                    "message": "transition not found in the scan window",
                })
        else:
            rows.append([float(amp), np.nan, np.nan, 0])
    csv = run_dir.write_csv(
        "result.csv", ["amp", "omega_res", "strength", "found"], rows
    )
    for row in rows:
        if row[3]:
            print(
                f"amp {row[0]:+.4f}: resonance {row[1]:.6f} GHz, "
                f"strength {row[2] * 1e3:.3f} MHz"
            )
    return failures, [csv.name], len(jobs)


def cmd_gate_opt(rc: RunConfig, run_dir: RunDirectory, dt: float, workers: int,
                 resume: bool) -> tuple[list[dict], list[str]]:
    gate_cfg = rc.require("gate")
    result = gates.optimize_cz(
        rc.params, gate_cfg, dt=max(dt, 0.001), final_dt=dt,
        restarts=rc.gate_restarts, budget=rc.gate_budget,
    )
    report = result.report()
    out = run_dir.write_json("report.json", report)
    m = result.metrics
    print(
        f"optimum: omega_p {result.omega_p:.6f} GHz, amplitude {result.drive_amp:.5f}"
    )
    print(
        f"error {m.error:.3e}, leakage {m.leakage:.3e}, "
        f"conditional phase {m.conditional_phase:+.5f} rad"
    )
    failures = [] if result.success else [
        {"point": "optimization", "message": "stagnated above the objective limit"}
    ]
    return failures, [out.name], 1


def cmd_gate_sweep(rc: RunConfig, run_dir: RunDirectory, dt: float, workers: int,
                   resume: bool) -> tuple[list[dict], list[str]]:
    gate_cfg = rc.require("gate")
    sweep = rc.require("sweep")
    jobs = []
    for t_g in sweep.gate_times:
        for ramp in sweep.drive_ramps:
            if float(t_g) < 2.0 * float(ramp) + 10.0:
                continue
            key = f"{_fmt(float(t_g))}|{_fmt(float(ramp))}"
            jobs.append(
                (key, (rc.params, gate_cfg, float(t_g), float(ramp),
                       max(dt, 0.001), rc.gate_restarts, rc.gate_budget))
            )
    if not jobs:
        raise ConfigError("no gate length satisfies t_g >= 2 drive_ramp + 10 ns",
                          "gate_sweep.gate_times")
    done, failures = _run_points(run_dir, jobs, _sweep_cell, workers, resume)

    rows = []
    for key, _ in jobs:
        t_text, ramp_text = key.split("|")
        if key in done:
            error, leakage, omega, amp, success, message = done[key]
            if not success:
                failures.append({"point": key, "message": message})
            rows.append([float(t_text), float(ramp_text), error, leakage,
                         omega, amp, bool(success)])
        else:
            rows.append([float(t_text), float(ramp_text), np.nan, np.nan,
                         np.nan, np.nan, False])
    rows.sort(key=lambda r: (r[0], r[1]))
    csv = run_dir.write_csv(
        "result.csv",
        ["gate_time", "drive_ramp", "error", "leakage", "omega_p", "drive_amp",
         "success"],
        rows,
    )
    return failures, [csv.name], len(jobs)


_COMMANDS = {
    "spectrum": (cmd_spectrum, None),
    "shift-scan": (cmd_shift_scan, "shift_scan"),
    "chevron": (cmd_chevron, "chevron"),
    "amplitude": (cmd_amplitude, "amplitude"),
    "floquet": (cmd_floquet, "floquet"),
    "gate-opt": (cmd_gate_opt, "gate"),
    "gate-sweep": (cmd_gate_sweep, "sweep"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxgate",
        description="Spectra, parametric transition scans, and CZ gate "
        "calibration for two fluxoniums with a tunable coupler.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to an INI config")
        cmd.add_argument("--out", default=None, help="output root directory")
        cmd.add_argument("--workers", type=int, default=None,
                         help="process count for independent points")
        cmd.add_argument("--dt", type=float, default=None,
                         help="integrator step in picoseconds")
        cmd.add_argument("--resume", action="store_true",
                         help="skip points already checkpointed in the run directory")
    return parser


def _section_payload(rc: RunConfig, section: str | None):
    if section is None:
        return None
    value = rc.require(section)
    return asdict(value)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler, section = _COMMANDS[args.command]

    try:
        rc = load_config(args.config)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("workers must be at least 1", "--workers")
        if args.dt is not None and args.dt <= 0:
            raise ConfigError("dt must be positive", "--dt")
        workers = args.workers if args.workers is not None else rc.workers
        dt = args.dt / 1000.0 if args.dt is not None else rc.dt

        payload = {
            "command": args.command,
            "params": _params_payload(rc),
            "section": _section_payload(rc, section),
            "dt": dt,
        }
        if args.command == "gate-sweep":
            payload["gate"] = asdict(rc.require("gate"))

        root = Path(
            args.out
            or rc.output_dir
            or os.environ.get(OUTPUT_ROOT_ENV, "")
            or "runs"
        )
        run_dir = RunDirectory(root, args.command, payload)
        failures, outputs, n_points = handler(rc, run_dir, dt, workers, bool(args.resume))
        run_dir.write_sidecar(dt, outputs, failures, n_points)
        if not failures:
            run_dir.clear_checkpoints()
        print(f"run directory: {run_dir.path}")
        for failure in failures:
            print(f"point failed: {failure['point']}: {failure['message']}",
                  file=sys.stderr)
        return 1 if failures else 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FluxgateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
