"""Parametric CZ gates on the |101> <-> |202> transition.

Builds full gate schedules (bias ramp plus enveloped flux drive), scores
the resulting truncated propagators with a state-average fidelity,
leakage, and conditional phase, and calibrates the two drive parameters
(frequency, amplitude) with a bounded derivative-free search seeded from
the Floquet resonance. Sweeps over gate length and ranked reports of
leakage channels support synchronization studies; an analytic
white-noise estimate covers the incoherent error floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import Bounds, minimize

from .errors import SearchError
from .evolve import (
    COMPUTATIONAL_LABELS,
    DEFAULT_DT,
    dressed_frame,
    propagate_computational_unitary,
)
from .floquet import extract_transition
from .pulses import BiasRamp, ParametricPulse
from .system import CompositeParams

Label = tuple[int, int, int]

GATE_MODES = ("dynamic-bias", "static-bias")
DIAGONAL_FLOOR = 1e-3
CHANNEL_FLOOR = 1e-15
OPTIMIZER_BUDGET = 400
SEED_PROBE_AMP = 0.02
STAGNATION_LIMIT = 1e-2

CZ_TARGET = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

# Restart k starts from the seed displaced by OFFSET_TABLE[k] times ten
# initial-simplex steps, so restarts explore beyond the first basin.
OFFSET_TABLE = (
    (0.0, 0.0),
    (1.0, -1.0),
    (-1.0, 1.0),
    (1.0, 1.0),
    (-1.0, -1.0),
    (2.0, 0.0),
    (0.0, 2.0),
)


@dataclass(frozen=True)
class GateConfig:
    """Operational configuration of a CZ gate schedule.

    ``dynamic-bias`` ramps the coupler from ``flux_idle`` to
    ``flux_interaction`` before driving and back afterwards;
    ``static-bias`` parks it at ``flux_idle`` throughout. Bounds, when
    given, constrain the (drive frequency, drive amplitude) search.
    """

    mode: str
    flux_idle: float
    gate_time: float
    flux_interaction: float | None = None
    bias_ramp: float = 3.0
    drive_ramp: float = 5.0
    freq_bounds: tuple[float, float] | None = None
    amp_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.mode not in GATE_MODES:
            raise ValueError(f"mode must be one of {GATE_MODES}, got {self.mode!r}")
        if self.mode == "dynamic-bias":
            if self.flux_interaction is None:
                raise ValueError("dynamic-bias mode requires flux_interaction")
            if self.flux_idle == self.flux_interaction:
                raise ValueError(
                    "dynamic-bias mode requires flux_idle != flux_interaction"
                )
        if self.gate_time <= 0:
            raise ValueError("gate_time must be positive")
        if self.bias_ramp <= 0:
            raise ValueError("bias_ramp must be positive")
        if self.drive_ramp < 0 or 2.0 * self.drive_ramp > self.gate_time:
            raise ValueError("need 0 <= 2 drive_ramp <= gate_time")

    @property
    def drive_flux(self) -> float:
        """Static coupler flux while the drive is on."""
        return self.flux_interaction if self.mode == "dynamic-bias" else self.flux_idle


@dataclass(frozen=True)
class GateMetrics:
    """Scores of one evaluated gate.

    ``channel_populations`` maps each prepared computational label to the
    final dressed-state populations it produced. ``single_qubit_phases``
    are the Z rotation angles removed before the fidelity trace; when any
    truncated-propagator diagonal falls below 1e-3 those extractions are
    unreliable and ``phases_reliable`` is cleared.
    """

    fidelity: float
    error: float
    leakage: float
    conditional_phase: float
    single_qubit_phases: tuple[float, float]
    channel_populations: dict[Label, dict[Label, float]] = field(default_factory=dict)
    phases_reliable: bool = True


@dataclass(frozen=True)
class CoherenceTimes:
    """Relaxation and white-noise dephasing times of |202>, in us."""

    t1_22: float
    tphi_22: float

    def __post_init__(self):
        if self.t1_22 <= 0 or self.tphi_22 <= 0:
            raise ValueError("coherence times must be positive")


class LeakageChannel(NamedTuple):
    label: Label
    population: float
    source: Label


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of one CZ calibration run.

    ``trace`` holds every objective evaluation in order; ``success`` is
    cleared when the best objective stays above the stagnation limit
    after the full restart budget.
    """

    omega_p: float
    drive_amp: float
    metrics: GateMetrics
    objective: float
    success: bool
    trace: tuple[dict, ...]
    seed: tuple[float, float]
    bounds: tuple[tuple[float, float], tuple[float, float]]
    restarts: int
    gate_time: float

    def report(self) -> dict:
        """JSON-ready summary of inputs, optimum, metrics, and trace size."""
        m = self.metrics
        channels = [
            {"label": list(ch.label), "population": ch.population, "source": list(ch.source)}
            for ch in leakage_channels(m, top_k=8)
        ]
        return {
            "schema": "fluxgate.gate_opt/1",
            "gate_time": self.gate_time,
            "seed": {"omega_p": self.seed[0], "drive_amp": self.seed[1]},
            "bounds": {"omega_p": list(self.bounds[0]), "drive_amp": list(self.bounds[1])},
            "restarts": self.restarts,
            "optimum": {"omega_p": self.omega_p, "drive_amp": self.drive_amp},
            "metrics": {
                "fidelity": m.fidelity,
                "error": m.error,
                "leakage": m.leakage,
                "conditional_phase": m.conditional_phase,
                "single_qubit_phases": list(m.single_qubit_phases),
                "phases_reliable": m.phases_reliable,
            },
            "leakage_channels": channels,
            "objective": self.objective,
            "success": self.success,
            "n_evaluations": len(self.trace),
        }


def gate_metrics(
    u, channel_populations: dict[Label, dict[Label, float]] | None = None
) -> GateMetrics:
    """Score a truncated 4x4 propagator against the ideal CZ.

    Single-qubit Z freedom is removed analytically by zeroing the phases
    of the |001> and |100> diagonals relative to |000>; the fidelity is
    the state-average trace formula on the corrected matrix. Leakage is
    the average population lost per column, and the conditional phase is
    read off the raw diagonal, where it is gauge invariant.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError("expected a 4x4 truncated propagator")
    diag = np.diagonal(u)
    reliable = bool(np.all(np.abs(diag) >= DIAGONAL_FLOOR))

    theta1 = -np.angle(diag[1] / diag[0]) if reliable else 0.0
    theta2 = -np.angle(diag[2] / diag[0]) if reliable else 0.0
    corr = np.exp(1j * np.array([0.0, theta1, theta2, theta1 + theta2]))
    v = corr[:, None] * u

    tr_uu = float(np.trace(u.conj().T @ u).real)
    fidelity = (tr_uu + abs(np.trace(CZ_TARGET.conj().T @ v)) ** 2) / 20.0
    # Roundoff can push either score past its endpoint by ~1e-12; the
    # clamp stays within the leakage-trace consistency tolerance.
    fidelity = min(max(fidelity, 0.0), 1.0)
    leakage = min(max(1.0 - tr_uu / 4.0, 0.0), 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        conditional = float(np.angle(diag[0] * diag[3] / (diag[1] * diag[2])))
    if not np.isfinite(conditional):  # empty diagonal, already flagged
        conditional = 0.0

    return GateMetrics(
        fidelity=float(fidelity),
        error=float(1.0 - fidelity),
        leakage=float(leakage),
        conditional_phase=conditional,
        single_qubit_phases=(float(theta1), float(theta2)),
        channel_populations=channel_populations or {},
        phases_reliable=reliable,
    )


def gate_schedule(
    cfg: GateConfig, omega_p: float, drive_amp: float
) -> tuple[ParametricPulse, BiasRamp | None]:
    """Pulse and optional bias ramp realizing the configured gate."""
    pulse = ParametricPulse(
        flux_static=cfg.drive_flux,
        drive_amp=drive_amp,
        drive_freq=omega_p,
        ramp_time=cfg.drive_ramp,
        gate_time=cfg.gate_time,
    )
    ramp = None
    if cfg.mode == "dynamic-bias":
        ramp = BiasRamp(cfg.flux_idle, cfg.flux_interaction, cfg.bias_ramp)
    return pulse, ramp


def _channel_map(cu) -> dict[Label, dict[Label, float]]:
    channels: dict[Label, dict[Label, float]] = {}
    for j, init in enumerate(cu.labels):
        col = cu.final_populations[:, j]
        channels[init] = {
            cu.state_labels[k]: float(col[k])
            for k in np.nonzero(col > CHANNEL_FLOOR)[0]
        }
    return channels


def evaluate_gate(
    params: CompositeParams,
    cfg: GateConfig,
    omega_p: float,
    drive_amp: float,
    dt: float = DEFAULT_DT,
    stroboscopic: bool = True,
) -> GateMetrics:
    """Run the full schedule and score the truncated propagator."""
    pulse, ramp = gate_schedule(cfg, omega_p, drive_amp)
    cu = propagate_computational_unitary(
        params, pulse, ramp, dt=dt, stroboscopic=stroboscopic
    )
    return gate_metrics(cu.matrix, _channel_map(cu))


def leakage_channels(
    metrics: GateMetrics, top_k: int = 5, threshold: float = 1e-10
) -> list[LeakageChannel]:
    """Non-computational final populations ranked descending.

    Each entry carries the computational state that produced it; entries
    at or below ``threshold`` are dropped.
    """
    computational = set(COMPUTATIONAL_LABELS)
    rows = [
        LeakageChannel(lab, pop, init)
        for init, finals in metrics.channel_populations.items()
        for lab, pop in finals.items()
        if lab not in computational and pop > threshold
    ]
    rows.sort(key=lambda r: (-r.population, r.label, r.source))
    return rows[:top_k]


def incoherent_error(gate_time: float, times: CoherenceTimes) -> float:
    """White-noise error of a CZ idled in |202> for ``gate_time`` ns."""
    if gate_time < 0:
        raise ValueError("gate_time must be non-negative")
    t_us = gate_time * 1e-3
    return (3.0 / 32.0) * (t_us / times.t1_22) + (13.0 / 80.0) * (t_us / times.tphi_22)


def phase_distance(phi: float, target: float) -> float:
    """Signed angular distance from phi to target, wrapped to (-pi, pi]."""
    return float(np.angle(np.exp(1j * (phi - target))))


def simplex_search(
    objective: Callable[[np.ndarray], float],
    seed,
    bounds,
    steps,
    restarts: int = 3,
    budget: int = OPTIMIZER_BUDGET,
    xatol: float = 1e-6,
    fatol: float = 1e-10,
) -> tuple[np.ndarray, float, list[dict]]:
    """Bounded Nelder-Mead from deterministic restart points.

    ``steps`` sets the initial simplex edge per coordinate; restart k
    displaces the seed by a fixed table entry scaled to ten steps, then
    clips into bounds. Returns the best point, its objective, and one
    summary dict per restart.
    """
    seed = np.asarray(seed, dtype=float)
    steps = np.asarray(steps, dtype=float)
    lo = np.asarray([b[0] for b in bounds], dtype=float)
    hi = np.asarray([b[1] for b in bounds], dtype=float)
    if np.any(lo >= hi):
        raise ValueError("each bound must satisfy low < high")
    if restarts < 1:
        raise ValueError("need at least one restart")

    best_x, best_f = None, np.inf
    summaries = []
    for k in range(restarts):
        off = np.asarray(OFFSET_TABLE[k % len(OFFSET_TABLE)], dtype=float)
        x0 = np.clip(seed + 10.0 * steps * off, lo, hi)
        simplex = np.vstack([x0, x0 + np.diag(steps)])
        simplex = np.clip(simplex, lo, hi)
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=Bounds(lo, hi),
            options={
                "initial_simplex": simplex,
                "maxfev": budget,
                "xatol": xatol,
                "fatol": fatol,
            },
        )
        summaries.append(
            {
                "start": x0.tolist(),
                "x": np.asarray(res.x).tolist(),
                "objective": float(res.fun),
                "n_evaluations": int(res.nfev),
                "converged": bool(res.success),
            }
        )
        if res.fun < best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
    return best_x, best_f, summaries


def _seed_from_floquet(
    params: CompositeParams, cfg: GateConfig
) -> tuple[float, float, float]:
    """Drive-parameter seed (omega, amplitude) plus the probe strength.

    The amplitude targets one full population cycle of |101> <-> |202>
    over the effective drive area gate_time - drive_ramp; the frequency
    is the Floquet resonance re-extracted at that amplitude.
    """
    flux_s = cfg.drive_flux
    pair = ((1, 0, 1), (2, 0, 2))
    frame = dressed_frame(params, flux_s)
    split = frame.energy_of(pair[1]) - frame.energy_of(pair[0])

    probe = extract_transition(
        params, flux_s, SEED_PROBE_AMP, pair,
        (split - 0.08, split + 0.04), resolution=25,
    )
    if not probe.found:
        probe = extract_transition(
            params, flux_s, SEED_PROBE_AMP, pair,
            (split - 0.25, split + 0.15), resolution=61,
        )
    if not probe.found or probe.strength <= 0:
        raise SearchError(
            "could not locate the |101><->|202> resonance to seed the optimizer"
        )

    t_area = cfg.gate_time - cfg.drive_ramp
    target = 1.0 / t_area
    amp_seed = SEED_PROBE_AMP * target / probe.strength
    # Cap keeps the driven junction energy positive; user bounds win.
    amp_cap = 0.499 - abs(flux_s)
    hi = min(amp_cap, cfg.amp_bounds[1]) if cfg.amp_bounds else amp_cap
    lo = cfg.amp_bounds[0] if cfg.amp_bounds else 0.0
    amp_seed = float(np.clip(amp_seed, lo, hi))

    refined = extract_transition(
        params, flux_s, amp_seed, pair,
        (probe.omega_res - 0.03, probe.omega_res + 0.03), resolution=13,
    )
    omega_seed = refined.omega_res if refined.found else probe.omega_res
    return float(omega_seed), float(amp_seed), float(probe.strength)


def optimize_cz(
    params: CompositeParams,
    cfg: GateConfig,
    gate_time: float | None = None,
    dt: float = 0.001,
    final_dt: float | None = None,
    restarts: int = 3,
    budget: int = OPTIMIZER_BUDGET,
) -> OptimizationResult:
    """Calibrate (drive frequency, amplitude) of a CZ at fixed length.

    Minimizes leakage + (conditional phase error)^2 / pi^2 with a
    bounded simplex from a physics-informed seed. The search runs at
    ``dt``; the returned metrics are re-evaluated at ``final_dt``
    (default dt/2). Stagnation above the failure threshold clears
    ``success`` instead of raising, so sweeps can continue.
    """
    if gate_time is not None:
        cfg = replace(cfg, gate_time=gate_time)
    if final_dt is None:
        final_dt = dt / 2.0

    omega_seed, amp_seed, _ = _seed_from_floquet(params, cfg)

    flux_s = cfg.drive_flux
    # Amplitude ceiling keeps the junction energy positive over the swing.
    amp_cap = 0.499 - abs(flux_s)
    freq_bounds = cfg.freq_bounds or (omega_seed - 0.05, omega_seed + 0.05)
    amp_bounds = cfg.amp_bounds or (0.25 * amp_seed, min(2.0 * amp_seed, amp_cap))
    seed = (
        float(np.clip(omega_seed, *freq_bounds)),
        float(np.clip(amp_seed, *amp_bounds)),
    )

    trace: list[dict] = []

    def objective(x) -> float:
        omega, amp = float(x[0]), float(x[1])
        metrics = evaluate_gate(params, cfg, omega, amp, dt=dt)
        value = (
            metrics.leakage
            + phase_distance(metrics.conditional_phase, math.pi) ** 2 / math.pi**2
        )
        trace.append(
            {
                "omega_p": omega,
                "drive_amp": amp,
                "objective": value,
                "leakage": metrics.leakage,
                "conditional_phase": metrics.conditional_phase,
            }
        )
        return value

    steps = (0.0025, 0.04 * seed[1])
    best_x, _, _ = simplex_search(
        objective, seed, (freq_bounds, amp_bounds), steps,
        restarts=restarts, budget=budget,
    )

    metrics = evaluate_gate(params, cfg, best_x[0], best_x[1], dt=final_dt)
    best_f = (
        metrics.leakage
        + phase_distance(metrics.conditional_phase, math.pi) ** 2 / math.pi**2
    )
    return OptimizationResult(
        omega_p=float(best_x[0]),
        drive_amp=float(best_x[1]),
        metrics=metrics,
        objective=float(best_f),
        success=bool(best_f <= STAGNATION_LIMIT),
        trace=tuple(trace),
        seed=seed,
        bounds=(tuple(freq_bounds), tuple(amp_bounds)),
        restarts=restarts,
        gate_time=cfg.gate_time,
    )


def _sweep_point(args) -> dict:
    params, cfg, t_g, ramp, dt, restarts, budget = args
    point_cfg = replace(cfg, gate_time=t_g, drive_ramp=ramp)
    try:
        res = optimize_cz(
            params, point_cfg, dt=dt, restarts=restarts, budget=budget
        )
    except Exception as exc:  # noqa: BLE001  (sweep records and continues)
        return {
            "gate_time": t_g, "drive_ramp": ramp,
            "error": math.nan, "leakage": math.nan,
            "omega_p": math.nan, "drive_amp": math.nan,
            "success": False, "message": str(exc),
        }
    return {
        "gate_time": t_g, "drive_ramp": ramp,
        "error": res.metrics.error, "leakage": res.metrics.leakage,
        "omega_p": res.omega_p, "drive_amp": res.drive_amp,
        "success": res.success, "message": "",
    }


def error_vs_length(
    params: CompositeParams,
    cfg: GateConfig,
    gate_times,
    drive_ramps=(5.0, 10.0),
    dt: float = 0.001,
    restarts: int = 3,
    budget: int = OPTIMIZER_BUDGET,
    workers: int = 1,
) -> list[dict]:
    """Optimized error and leakage per (gate length, drive ramp).

    Each point is an independent calibration; failures are recorded in
    the row and the sweep continues. Rows come back sorted by
    (gate_time, drive_ramp) regardless of worker count.
    """
    jobs = [
        (params, cfg, float(t_g), float(ramp), dt, restarts, budget)
        for t_g in gate_times
        for ramp in drive_ramps
        if float(t_g) >= 2.0 * float(ramp) + 10.0
    ]
    if not jobs:
        raise ValueError("no gate length satisfies t_g >= 2 drive_ramp + 10 ns")

    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(job) for job in jobs]
    rows.sort(key=lambda r: (r["gate_time"], r["drive_ramp"]))
    return rows
