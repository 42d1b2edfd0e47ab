"""Flux waveforms: flat-top cosine parametric drives and slow bias ramps.

The coupler flux is the sum of a slow bias schedule and a fast
parametric modulation,

    Phi(t) = Phi_bias(t) + delta_Phi env(tau) cos(2 pi f_p tau + phi_0)

where tau is time measured from the start of the drive window. The
envelope rises and falls with half-cosine flanks of length ``ramp_time``
and is flat in between, so the waveform and its first derivative are
continuous at every junction. An optional bias ramp carries the coupler
from its idle flux to the interaction flux (and back) with the same
half-cosine shape, with ``lead`` and ``lag`` hold padding around the
drive window.

Times are in ns, frequencies in GHz, fluxes in units of the flux
quantum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ParametricPulse:
    """Flat-top cosine flux modulation around a static bias.

    ``gate_time`` spans the whole drive window including both envelope
    flanks of ``ramp_time`` each.
    """

    flux_static: float
    drive_amp: float
    drive_freq: float
    drive_phase: float = 0.0
    ramp_time: float = 5.0
    gate_time: float = 100.0

    def __post_init__(self):
        if self.drive_amp < 0:
            raise ValueError("drive_amp must be non-negative")
        if self.ramp_time < 0 or 2.0 * self.ramp_time > self.gate_time:
            raise ValueError("ramps must satisfy 0 <= 2 ramp_time <= gate_time")


@dataclass(frozen=True)
class BiasRamp:
    """Slow excursion from the idle flux to the interaction flux.

    ``lead`` and ``lag`` hold the interaction flux before and after the
    drive window; the outer flanks take ``ramp_time`` each.
    """

    flux_idle: float
    flux_interaction: float
    ramp_time: float = 3.0
    lead: float = 0.0
    lag: float = 0.0

    def __post_init__(self):
        if self.ramp_time <= 0:
            raise ValueError("ramp_time must be positive")
        if self.lead < 0 or self.lag < 0:
            raise ValueError("lead and lag must be non-negative")


def envelope(tau, ramp_time: float, gate_time: float):
    """Flat-top cosine envelope on [0, gate_time], zero outside."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    if ramp_time > 0:
        rising = (tau >= 0) & (tau < ramp_time)
        out[rising] = 0.5 * (1.0 - np.cos(np.pi * tau[rising] / ramp_time))
        falling = (tau > gate_time - ramp_time) & (tau <= gate_time)
        out[falling] = 0.5 * (1.0 - np.cos(np.pi * (gate_time - tau[falling]) / ramp_time))
        flat = (tau >= ramp_time) & (tau <= gate_time - ramp_time)
        out[flat] = 1.0
    else:
        out[(tau >= 0) & (tau <= gate_time)] = 1.0
    return out if out.ndim else float(out)


def drive_window(pulse: ParametricPulse, ramp: BiasRamp | None) -> tuple[float, float]:
    """Absolute start and end times of the parametric drive."""
    t0 = 0.0 if ramp is None else ramp.ramp_time + ramp.lead
    return t0, t0 + pulse.gate_time


def total_duration(pulse: ParametricPulse, ramp: BiasRamp | None) -> float:
    if ramp is None:
        return pulse.gate_time
    return 2.0 * ramp.ramp_time + ramp.lead + ramp.lag + pulse.gate_time


def bias_flux(pulse: ParametricPulse, ramp: BiasRamp | None, t):
    """Slow bias component of the flux schedule at time(s) t."""
    if ramp is None:
        return (
            np.full_like(np.asarray(t, dtype=float), pulse.flux_static)
            if np.ndim(t)
            else pulse.flux_static
        )
    t_arr = np.asarray(t, dtype=float)
    tr = ramp.ramp_time
    t_fall = tr + ramp.lead + pulse.gate_time + ramp.lag
    span = ramp.flux_interaction - ramp.flux_idle

    out = np.full_like(t_arr, ramp.flux_idle)
    rising = (t_arr >= 0) & (t_arr < tr)
    out[rising] = ramp.flux_idle + span * 0.5 * (1.0 - np.cos(np.pi * t_arr[rising] / tr))
    hold = (t_arr >= tr) & (t_arr < t_fall)
    out[hold] = ramp.flux_interaction
    falling = (t_arr >= t_fall) & (t_arr < t_fall + tr)
    out[falling] = ramp.flux_idle + span * 0.5 * (
        1.0 - np.cos(np.pi * (t_fall + tr - t_arr[falling]) / tr)
    )
    return out if out.ndim else float(out)


def drive_flux(pulse: ParametricPulse, ramp: BiasRamp | None, t):
    """Fast modulation component, zero outside the drive window.

    The carrier phase is referenced to the start of the drive window, so
    lead padding does not change the waveform seen by the coupler.
    """
    t0, _ = drive_window(pulse, ramp)
    tau = np.asarray(t, dtype=float) - t0
    env = envelope(tau, pulse.ramp_time, pulse.gate_time)
    out = pulse.drive_amp * env * np.cos(TWO_PI * pulse.drive_freq * tau + pulse.drive_phase)
    return out if np.ndim(out) else float(out)


def flux_waveform(pulse: ParametricPulse, ramp: BiasRamp | None, t):
    """Total coupler flux Phi(t); accepts scalars or arrays."""
    return bias_flux(pulse, ramp, t) + drive_flux(pulse, ramp, t)
