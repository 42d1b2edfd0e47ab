"""Analytic reduced models of the coupler-mediated interaction.

Two fluxonium plasmon modes (a chosen pair of levels per qubit) exchange
excitations through the off-resonant coupler. In the dispersive regime
the exchange strength, shifts, and the flux-drive coefficients all follow
from second-order perturbation theory in g / Delta, giving:

  * static plasmon-plasmon coupling
        g_p = g_p01 + (g_pc0 g_pc1 / 2) sum_k (1/Delta_k - 1/S_k)
  * parametric strength, first order in the drive amplitude,
        g_eff = (delta_Phi / 4) g_pc0 g_pc1 (d omega_c / d Phi)
                sum_k (1/Delta_k^2 + 1/S_k^2)
  * dressed-frequency shifts +- g^2 / Delta
  * the two-photon (squeezing) rate of the modulated junction

with Delta_k = omega_pk - omega_c and S_k = omega_pk + omega_c.

These closed forms are deliberately approximate; the time-domain and
Floquet modules are the quantitative references they are compared to.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .circuits import SpectralData, TransmonParams, coupler_flux_derivative, transmon_oscillator_params
from .errors import (
    AmplitudeWarning,
    DispersiveWarning,
    ForbiddenTransitionWarning,
    LabelingError,
)
from .system import CompositeParams, assemble_operators, build_hamiltonian, label_eigenstates

ZERO_ELEMENT_TOL = 1e-12


@dataclass(frozen=True)
class PlasmonModeSelection:
    """Level pairs (j, l) and (r, t) defining the two plasmon modes."""

    q0_pair: tuple[int, int] = (1, 2)
    q1_pair: tuple[int, int] = (1, 2)

    def __post_init__(self):
        for pair in (self.q0_pair, self.q1_pair):
            if pair[0] >= pair[1] or pair[0] < 0:
                raise ValueError(f"plasmon pair {pair} must satisfy 0 <= low < high")


@dataclass
class EffectiveCouplings:
    """Coupling strengths of the two plasmon modes and the coupler, in GHz.

    ``g_pc0``, ``g_pc1``, ``g_p01`` are filled by
    :func:`plasmon_coupler_strengths`; ``deltas``, ``sums`` and ``g_p``
    are completed by :func:`static_plasmon_coupling` once the mode
    frequencies are known.
    """

    g_pc0: float
    g_pc1: float
    g_p01: float
    g_p: float | None = None
    deltas: tuple[float, float] | None = None
    sums: tuple[float, float] | None = None


@dataclass(frozen=True)
class ParametricCoupling:
    """First-order parametric exchange strength and its resonance data.

    ``g_eff`` keeps the sign of the flux derivative; ``resonance_sum``
    is the two-plasmon resonance omega_p0 + omega_p1 and
    ``resonance_diff`` their detuning. ``frequency_basis`` records
    whether dressed or bare plasmon frequencies entered the formula, and
    ``note`` carries degeneracy flags such as a vanishing derivative.
    """

    g_eff: float
    drive_amp: float
    derivative: float
    resonance_sum: float
    resonance_diff: float
    frequency_basis: str = "dressed"
    note: str = ""


class TransitionCategory(enum.Enum):
    """Taxonomy of parametrically activated transitions."""

    BSWAP_PLASMON = "bSWAP-plasmon"
    SIDEBAND_COUPLER = "sideband-coupler"
    COUPLER_SQUEEZING = "coupler-squeezing"
    CROSS_DRIVING = "cross-driving"
    OTHER = "other"


def plasmon_coupler_strengths(
    q0: SpectralData,
    q1: SpectralData,
    c_n01: float,
    sel: PlasmonModeSelection,
    j_c0: float,
    j_c1: float,
    j_01: float,
) -> EffectiveCouplings:
    """Bare coupling strengths of the selected plasmon modes.

    ``c_n01`` is the coupler charge element |<1|n_c|0>| at the operating
    flux. Magnitudes are returned; a selected matrix element below 1e-12
    triggers a forbidden-transition warning (the strength is then zero).
    """
    n0 = abs(q0.n_elements[sel.q0_pair[0], sel.q0_pair[1]])
    n1 = abs(q1.n_elements[sel.q1_pair[0], sel.q1_pair[1]])
    for name, val in (("q0", n0), ("q1", n1)):
        if val < ZERO_ELEMENT_TOL:
            warnings.warn(
                f"{name} matrix element for pair is below {ZERO_ELEMENT_TOL:g}; "
                "the selected transition is charge-forbidden",
                ForbiddenTransitionWarning,
                stacklevel=2,
            )
    return EffectiveCouplings(
        g_pc0=j_c0 * n0 * abs(c_n01),
        g_pc1=j_c1 * n1 * abs(c_n01),
        g_p01=j_01 * n0 * n1,
    )


def static_plasmon_coupling(
    ec: EffectiveCouplings, omega_p0: float, omega_p1: float, omega_c: float
) -> float:
    """Coupler-mediated plasmon-plasmon exchange strength in GHz.

    Completes ``ec`` with the detunings and frequency sums and stores the
    result on ``ec.g_p`` as well as returning it. Warns when either mode
    sits within ten linewidths (10 g) of the coupler.
    """
    deltas = (omega_p0 - omega_c, omega_p1 - omega_c)
    sums = (omega_p0 + omega_c, omega_p1 + omega_c)
    for d, s in zip(deltas, sums):
        if d == 0.0 or s == 0.0:
            raise ZeroDivisionError("plasmon mode degenerate with the coupler")
    for g, d in zip((ec.g_pc0, ec.g_pc1), deltas):
        if abs(d) < 10.0 * g:
            warnings.warn(
                f"detuning {d:.4f} GHz below 10 g = {10 * g:.4f} GHz; "
                "second-order result is unreliable",
                DispersiveWarning,
                stacklevel=2,
            )
    bracket = sum(1.0 / d - 1.0 / s for d, s in zip(deltas, sums))
    g_p = ec.g_p01 + 0.5 * ec.g_pc0 * ec.g_pc1 * bracket
    ec.g_p = g_p
    ec.deltas = deltas
    ec.sums = sums
    return g_p


def _dressed_plasmon_frequencies(
    params: CompositeParams, sel: PlasmonModeSelection, flux_s: float
) -> tuple[float, float] | None:
    try:
        spec = label_eigenstates(build_hamiltonian(params, flux_s))
        j, l = sel.q0_pair
        r, t = sel.q1_pair
        w0 = spec.energy_of((l, 0, 0)) - spec.energy_of((j, 0, 0))
        w1 = spec.energy_of((0, 0, t)) - spec.energy_of((0, 0, r))
        return w0, w1
    except LabelingError:
        return None


def parametric_strength(
    params: CompositeParams,
    sel: PlasmonModeSelection,
    flux_s: float,
    drive_amp: float,
) -> ParametricCoupling:
    """Exchange strength of the flux-modulated coupler, linear in amplitude.

    Uses dressed plasmon frequencies when the composite labeling is
    unambiguous at ``flux_s`` and falls back to bare single-circuit
    transitions otherwise (recorded in ``frequency_basis``). A vanishing
    flux derivative, e.g. at the symmetry point flux_s = 0, yields a
    zero-strength result carrying an explanatory note.
    """
    if drive_amp > 0.1:
        warnings.warn(
            f"drive amplitude {drive_amp} exceeds 0.1; the first-order "
            "expansion degrades",
            AmplitudeWarning,
            stacklevel=2,
        )
    ops = assemble_operators(params)
    osc = transmon_oscillator_params(params.coupler, flux_s)

    dressed = _dressed_plasmon_frequencies(params, sel, flux_s)
    if dressed is not None:
        omega_p0, omega_p1 = dressed
        basis = "dressed"
    else:
        omega_p0 = ops.q0_data.transition(*sel.q0_pair)
        omega_p1 = ops.q1_data.transition(*sel.q1_pair)
        basis = "bare"

    ec = plasmon_coupler_strengths(
        ops.q0_data, ops.q1_data, osc.n_zpf, sel,
        params.j_c0, params.j_c1, params.j_01,
    )
    deriv = coupler_flux_derivative(params.coupler, flux_s)
    if abs(deriv) < 1e-9:
        return ParametricCoupling(
            g_eff=0.0,
            drive_amp=drive_amp,
            derivative=deriv,
            resonance_sum=omega_p0 + omega_p1,
            resonance_diff=omega_p0 - omega_p1,
            frequency_basis=basis,
            note="flux derivative vanishes at this bias",
        )

    deltas = (omega_p0 - osc.omega_c, omega_p1 - osc.omega_c)
    sums = (omega_p0 + osc.omega_c, omega_p1 + osc.omega_c)
    bracket = sum(1.0 / d**2 + 1.0 / s**2 for d, s in zip(deltas, sums))
    g_eff = 0.25 * drive_amp * ec.g_pc0 * ec.g_pc1 * deriv * bracket
    return ParametricCoupling(
        g_eff=g_eff,
        drive_amp=drive_amp,
        derivative=deriv,
        resonance_sum=omega_p0 + omega_p1,
        resonance_diff=omega_p0 - omega_p1,
        frequency_basis=basis,
    )


def swt_dressed_shifts(
    ec: EffectiveCouplings, omega_c: float
) -> tuple[float, float, float]:
    """Second-order dressed-frequency shifts (plasmon 0, plasmon 1, coupler).

    Requires the detunings on ``ec`` (set by static_plasmon_coupling).
    Each plasmon shifts by +g^2/Delta; the coupler picks up the opposite
    sum. ``omega_c`` is accepted for interface symmetry and consistency
    checks but the shifts depend only on the stored detunings.
    """
    if ec.deltas is None:
        raise ValueError("EffectiveCouplings carries no detunings; "
                         "call static_plasmon_coupling first")
    for g, d in zip((ec.g_pc0, ec.g_pc1), ec.deltas):
        if d != 0.0 and abs(d) < 10.0 * g:
            warnings.warn(
                "dressed-shift formula used outside the dispersive regime",
                DispersiveWarning,
                stacklevel=2,
            )
    s0 = ec.g_pc0**2 / ec.deltas[0] if ec.g_pc0 else 0.0
    s1 = ec.g_pc1**2 / ec.deltas[1] if ec.g_pc1 else 0.0
    return s0, s1, -(s0 + s1)


def squeezing_coefficients(
    c: TransmonParams, flux_s: float, drive_amp: float
) -> tuple[float, float]:
    """Drive-induced one- and two-photon rates on the coupler, in GHz.

    For a symmetric junction the one-photon term vanishes identically;
    the two-photon (squeezing) rate multiplies (a a + a^dag a^dag) in the
    rotating frame and is first order in the drive amplitude:

        r2 = -E_J_max sin(pi flux_s) (pi drive_amp / 4) phi_zpf^2
    """
    osc = transmon_oscillator_params(c, flux_s)
    rate = (
        -c.e_j_max
        * np.sin(np.pi * flux_s)
        * (np.pi * drive_amp / 4.0)
        * osc.phi_zpf**2
    )
    return 0.0, float(rate)


def classify_transition(
    from_label: tuple[int, int, int], to_label: tuple[int, int, int]
) -> TransitionCategory:
    """Categorize a drive-activated transition by its bare-label change.

    Rules are applied in order: simultaneous rise of both fluxonia with
    the coupler untouched is the two-qubit exchange (bSWAP); one
    fluxonium rising together with the coupler is a sideband; a bare
    two-photon coupler change is squeezing; a lone multi-level fluxonium
    jump is cross-driving. Everything else is OTHER, so the taxonomy is
    total.
    """
    dq0 = to_label[0] - from_label[0]
    dc = to_label[1] - from_label[1]
    dq1 = to_label[2] - from_label[2]

    if dq0 > 0 and dq1 > 0 and dc == 0:
        return TransitionCategory.BSWAP_PLASMON
    if dc > 0 and ((dq0 > 0 and dq1 == 0) or (dq1 > 0 and dq0 == 0)):
        return TransitionCategory.SIDEBAND_COUPLER
    if dq0 == 0 and dq1 == 0 and abs(dc) == 2:
        return TransitionCategory.COUPLER_SQUEEZING
    if dc == 0 and ((abs(dq0) >= 2 and dq1 == 0) or (abs(dq1) >= 2 and dq0 == 0)):
        return TransitionCategory.CROSS_DRIVING
    return TransitionCategory.OTHER
