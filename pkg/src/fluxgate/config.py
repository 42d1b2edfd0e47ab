"""Run configuration files: parsing, validation, and typed access.

Configs are INI text with sections for the three circuits, their
couplings, truncation, and one section per command that needs grids or
gate settings. Keys are validated against a fixed schema; unknown
sections or keys are rejected with their field path, and every numeric
constraint of the underlying modules is checked before any computation
starts. Frequencies are GHz, times ns, fluxes in flux quanta.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .circuits import FluxoniumParams, TransmonParams
from .errors import ConfigError
from .gates import GateConfig
from .system import CompositeParams

Label = tuple[int, int, int]


@dataclass(frozen=True)
class ReferenceValues:
    """Expected single-circuit values for the spectrum comparison block.

    Transitions are measured from the ground state; elements are the
    charge matrix elements (|<0|n|1>|, |<1|n|2>|, |<0|n|3>|, |<1|n|4>|).
    Coupler frequencies refer to zero flux; the ``_interaction`` pair to
    ``interaction_flux``.
    """

    q0_transitions: tuple[float, ...] | None = None
    q1_transitions: tuple[float, ...] | None = None
    q0_elements: tuple[float, ...] | None = None
    q1_elements: tuple[float, ...] | None = None
    coupler_w01: float | None = None
    coupler_w12: float | None = None
    interaction_flux: float | None = None
    coupler_w01_interaction: float | None = None
    coupler_w12_interaction: float | None = None


def _require_grid(points: int, lo: float, hi: float, what: str):
    if points < 1:
        raise ValueError(f"{what} grid must have at least one point")
    if points > 1 and hi <= lo:
        raise ValueError(f"{what} grid needs max > min")


@dataclass(frozen=True)
class ShiftScanConfig:
    flux_min: float = 0.0
    flux_max: float = 0.45
    points: int = 46

    def __post_init__(self):
        _require_grid(self.points, self.flux_min, self.flux_max, "flux")


@dataclass(frozen=True)
class ChevronConfig:
    """Grid for population maps versus drive frequency and time."""

    flux_s: float
    drive_amp: float
    freq_min: float
    freq_max: float
    freq_points: int
    time_max: float
    time_points: int
    ramp_time: float = 5.0
    psi0: Label = (1, 0, 1)

    def __post_init__(self):
        _require_grid(self.freq_points, self.freq_min, self.freq_max, "frequency")
        _require_grid(self.time_points, 0.0, self.time_max, "time")
        if self.drive_amp < 0:
            raise ValueError("drive_amp must be non-negative")


@dataclass(frozen=True)
class AmplitudeConfig:
    """Grid for the final target population versus frequency and amplitude."""

    flux_s: float
    fixed_time: float
    freq_min: float
    freq_max: float
    freq_points: int
    amp_min: float
    amp_max: float
    amp_points: int
    ramp_time: float = 5.0

    def __post_init__(self):
        _require_grid(self.freq_points, self.freq_min, self.freq_max, "frequency")
        _require_grid(self.amp_points, self.amp_min, self.amp_max, "amplitude")
        if self.fixed_time <= 0:
            raise ValueError("fixed_time must be positive")
        if self.amp_min < 0:
            raise ValueError("amplitudes must be non-negative")


@dataclass(frozen=True)
class FloquetConfig:
    """Resonance extraction settings per drive amplitude."""

    flux_s: float
    amp_values: tuple[float, ...]
    pair: tuple[Label, Label] = ((1, 0, 1), (2, 0, 2))
    window: float = 0.08
    resolution: int = 41

    def __post_init__(self):
        if not self.amp_values or any(a <= 0 for a in self.amp_values):
            raise ValueError("amp_values must be a nonempty list of positive numbers")
        if self.window <= 0:
            raise ValueError("window must be positive")
        if self.resolution < 5:
            raise ValueError("resolution must be at least 5")


@dataclass(frozen=True)
class SweepConfig:
    gate_times: tuple[float, ...]
    drive_ramps: tuple[float, ...] = (5.0, 10.0)

    def __post_init__(self):
        if not self.gate_times:
            raise ValueError("gate_times must be nonempty")
        if not self.drive_ramps or any(r < 0 for r in self.drive_ramps):
            raise ValueError("drive_ramps must be nonempty and non-negative")


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of one configuration file."""

    params: CompositeParams
    output_dir: str
    workers: int
    dt: float
    gate: GateConfig | None = None
    shift_scan: ShiftScanConfig | None = None
    chevron: ChevronConfig | None = None
    amplitude: AmplitudeConfig | None = None
    floquet: FloquetConfig | None = None
    sweep: SweepConfig | None = None
    reference: ReferenceValues | None = None
    gate_restarts: int = 3
    gate_budget: int = 400

    def require(self, name: str):
        """Section accessor that fails with a clear field path."""
        value = getattr(self, name)
        if value is None:
            raise ConfigError("section required by this command is missing", name)
        return value


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text)


def _parse_str(text: str) -> str:
    return text.strip()


def _parse_floats(text: str) -> tuple[float, ...]:
    items = [s for s in (part.strip() for part in text.split(",")) if s]
    if not items:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(float(s) for s in items)


def _parse_label(text: str) -> Label:
    digits = text.strip()
    if len(digits) != 3 or not digits.isdigit():
        raise ValueError("state labels are three digits, e.g. 101")
    return (int(digits[0]), int(digits[1]), int(digits[2]))


def _parse_pair(text: str) -> tuple[Label, Label]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError("pairs are two labels joined by a colon, e.g. 101:202")
    return (_parse_label(parts[0]), _parse_label(parts[1]))


# Schema: section -> key -> (parser, required). Sections marked optional
# may be absent entirely; required keys apply only when present.
_REQUIRED_SECTIONS = ("qubit0", "qubit1", "coupler", "couplings")

_SCHEMA: dict[str, dict[str, tuple]] = {
    "qubit0": {"e_c": (_parse_float, True), "e_l": (_parse_float, True), "e_j": (_parse_float, True)},
    "qubit1": {"e_c": (_parse_float, True), "e_l": (_parse_float, True), "e_j": (_parse_float, True)},
    "coupler": {"e_c": (_parse_float, True), "e_j_max": (_parse_float, True)},
    "couplings": {
        "j_c0": (_parse_float, True),
        "j_c1": (_parse_float, True),
        "j_01": (_parse_float, True),
    },
    "truncation": {
        "fluxonium_levels": (_parse_int, False),
        "coupler_levels": (_parse_int, False),
    },
    "output": {
        "directory": (_parse_str, False),
        "workers": (_parse_int, False),
        "dt": (_parse_float, False),
    },
    "reference": {
        "q0_transitions": (_parse_floats, False),
        "q1_transitions": (_parse_floats, False),
        "q0_elements": (_parse_floats, False),
        "q1_elements": (_parse_floats, False),
        "coupler_w01": (_parse_float, False),
        "coupler_w12": (_parse_float, False),
        "interaction_flux": (_parse_float, False),
        "coupler_w01_interaction": (_parse_float, False),
        "coupler_w12_interaction": (_parse_float, False),
    },
    "shift_scan": {
        "flux_min": (_parse_float, False),
        "flux_max": (_parse_float, False),
        "points": (_parse_int, False),
    },
    "chevron": {
        "flux_s": (_parse_float, True),
        "drive_amp": (_parse_float, True),
        "freq_min": (_parse_float, True),
        "freq_max": (_parse_float, True),
        "freq_points": (_parse_int, True),
        "time_max": (_parse_float, True),
        "time_points": (_parse_int, True),
        "ramp_time": (_parse_float, False),
        "psi0": (_parse_label, False),
    },
    "amplitude": {
        "flux_s": (_parse_float, True),
        "fixed_time": (_parse_float, True),
        "freq_min": (_parse_float, True),
        "freq_max": (_parse_float, True),
        "freq_points": (_parse_int, True),
        "amp_min": (_parse_float, True),
        "amp_max": (_parse_float, True),
        "amp_points": (_parse_int, True),
        "ramp_time": (_parse_float, False),
    },
    "floquet": {
        "flux_s": (_parse_float, True),
        "amp_values": (_parse_floats, True),
        "pair": (_parse_pair, False),
        "window": (_parse_float, False),
        "resolution": (_parse_int, False),
    },
    "gate": {
        "mode": (_parse_str, True),
        "flux_idle": (_parse_float, True),
        "flux_interaction": (_parse_float, False),
        "gate_time": (_parse_float, True),
        "bias_ramp": (_parse_float, False),
        "drive_ramp": (_parse_float, False),
        "freq_min": (_parse_float, False),
        "freq_max": (_parse_float, False),
        "amp_min": (_parse_float, False),
        "amp_max": (_parse_float, False),
        "restarts": (_parse_int, False),
        "budget": (_parse_int, False),
    },
    "gate_sweep": {
        "gate_times": (_parse_floats, True),
        "drive_ramps": (_parse_floats, False),
    },
}


def _read_sections(path: Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(
        delimiters=("=",), inline_comment_prefixes=("#",), interpolation=None,
        strict=True,
    )
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}", str(path)) from exc
    return {name: dict(parser[name]) for name in parser.sections()}


def _validate_keys(sections: dict[str, dict[str, str]]) -> dict[str, dict]:
    parsed: dict[str, dict] = {}
    for name, raw in sections.items():
        if name not in _SCHEMA:
            raise ConfigError("unknown section", name)
        schema = _SCHEMA[name]
        out: dict[str, object] = {}
        for key, text in raw.items():
            if key not in schema:
                raise ConfigError("unknown key", f"{name}.{key}")
            parser_fn = schema[key][0]
            try:
                out[key] = parser_fn(text)
            except ValueError as exc:
                raise ConfigError(str(exc), f"{name}.{key}") from exc
        for key, (_, required) in schema.items():
            if required and key not in out:
                raise ConfigError("required key missing", f"{name}.{key}")
        parsed[name] = out
    for name in _REQUIRED_SECTIONS:
        if name not in parsed:
            raise ConfigError("required section missing", name)
    return parsed


def _build(section: str, factory, kwargs):
    try:
        return factory(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), section) from exc


def load_config(path) -> RunConfig:
    """Parse and fully validate one configuration file."""
    parsed = _validate_keys(_read_sections(Path(path)))

    q0 = _build("qubit0", FluxoniumParams, parsed["qubit0"])
    q1 = _build("qubit1", FluxoniumParams, parsed["qubit1"])
    coupler = _build("coupler", TransmonParams, parsed["coupler"])
    trunc = parsed.get("truncation", {})
    params = _build(
        "truncation",
        CompositeParams,
        {
            "q0": q0,
            "q1": q1,
            "coupler": coupler,
            "j_c0": parsed["couplings"]["j_c0"],
            "j_c1": parsed["couplings"]["j_c1"],
            "j_01": parsed["couplings"]["j_01"],
            "n_flux_levels": trunc.get("fluxonium_levels", 5),
            "n_coupler_levels": trunc.get("coupler_levels", 6),
        },
    )

    out = parsed.get("output", {})
    workers = out.get("workers", 1)
    dt = out.get("dt", 0.0005)
    if workers < 1:
        raise ConfigError("workers must be at least 1", "output.workers")
    if dt <= 0:
        raise ConfigError("dt must be positive", "output.dt")

    gate = None
    gate_restarts, gate_budget = 3, 400
    if "gate" in parsed:
        g = dict(parsed["gate"])
        gate_restarts = g.pop("restarts", 3)
        gate_budget = g.pop("budget", 400)
        if gate_restarts < 1:
            raise ConfigError("restarts must be at least 1", "gate.restarts")
        if gate_budget < 10:
            raise ConfigError("budget must be at least 10", "gate.budget")
        freq_bounds = None
        if "freq_min" in g or "freq_max" in g:
            if not ("freq_min" in g and "freq_max" in g):
                raise ConfigError("freq_min and freq_max come together", "gate.freq_min")
            freq_bounds = (g.pop("freq_min"), g.pop("freq_max"))
        amp_bounds = None
        if "amp_min" in g or "amp_max" in g:
            if not ("amp_min" in g and "amp_max" in g):
                raise ConfigError("amp_min and amp_max come together", "gate.amp_min")
            amp_bounds = (g.pop("amp_min"), g.pop("amp_max"))
        gate = _build(
            "gate", GateConfig, {**g, "freq_bounds": freq_bounds, "amp_bounds": amp_bounds}
        )

    scans = {}
    for section, factory in (
        ("shift_scan", ShiftScanConfig),
        ("chevron", ChevronConfig),
        ("amplitude", AmplitudeConfig),
        ("floquet", FloquetConfig),
    ):
        if section in parsed:
            scans[section] = _build(section, factory, parsed[section])
        else:
            scans[section] = None

    sweep = None
    if "gate_sweep" in parsed:
        sweep = _build("gate_sweep", SweepConfig, parsed["gate_sweep"])

    reference = None
    if "reference" in parsed:
        reference = _build("reference", ReferenceValues, parsed["reference"])

    return RunConfig(
        params=params,
        output_dir=out.get("directory", ""),
        workers=workers,
        dt=dt,
        gate=gate,
        shift_scan=scans["shift_scan"],
        chevron=scans["chevron"],
        amplitude=scans["amplitude"],
        floquet=scans["floquet"],
        sweep=sweep,
        reference=reference,
        gate_restarts=gate_restarts,
        gate_budget=gate_budget,
    )
