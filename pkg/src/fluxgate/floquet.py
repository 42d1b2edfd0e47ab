"""Quasienergy analysis of the periodically driven composite system.

Under a steady flux modulation Phi(t) = Phi_s + delta_Phi cos(2 pi f_p t)
the one-period propagator (monodromy matrix) M has eigenvalues
e^{-i 2 pi eps T}; the quasienergies eps, defined modulo f_p and folded
into [-f_p/2, f_p/2), govern all stroboscopic dynamics. A parametric
resonance between two dressed states appears as an avoided crossing of
their folded quasienergies as the drive frequency is swept. The
minimum splitting is the transition strength: on resonance the
population oscillates at exactly that rate, so its inverse is the
full-exchange-and-return time.

Transition extraction scans f_p across a window, tracks the driven pair
by projecting Floquet modes onto the two target dressed states, then
refines the crossing with a local rescan and a parabolic fit of the
squared gap, which is quadratic in detuning near a two-level avoided
crossing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from . import backends
from .errors import IntegrationError
from .evolve import DEFAULT_DT, _flat_step, dressed_frame, oscillator_coefficients
from .system import CompositeParams, assemble_operators

UNITARITY_LIMIT = 1e-10
DEGENERACY_TOL = 1e-9
REFINE_POINTS = 9

Label = tuple[int, int, int]


@dataclass(frozen=True)
class Monodromy:
    """One-period propagator of the driven system."""

    matrix: np.ndarray
    params: CompositeParams
    flux_s: float
    drive_amp: float
    drive_freq: float
    defect: float


@dataclass(frozen=True)
class FloquetSpectrum:
    """Folded quasienergies with dressed-state labels.

    ``quasienergies`` lie in [-f_p/2, f_p/2) GHz. ``labels`` assigns each
    Floquet mode the dressed state (at the static bias) it overlaps most,
    as a one-to-one matching; ``degenerate`` flags modes whose folded
    quasienergy sits within 1e-9 GHz of another.
    """

    quasienergies: np.ndarray
    labels: tuple[Label, ...]
    overlaps: np.ndarray
    degenerate: np.ndarray
    states: np.ndarray
    drive: tuple[float, float, float]


@dataclass(frozen=True)
class TransitionResult:
    """Resonance location and strength of one parametric transition.

    When no interior gap minimum exists in the scanned window, ``found``
    is False and the scanned gap curve remains attached for inspection.
    ``strength`` is the minimum quasienergy splitting of the tracked
    pair; its inverse is the full population-exchange period on
    resonance.
    """

    found: bool
    omega_res: float
    strength: float
    pair: tuple[Label, Label]
    scan_freqs: np.ndarray
    gaps: np.ndarray
    min_scores: np.ndarray
    flux_s: float
    drive_amp: float


def monodromy(
    params: CompositeParams,
    flux_s: float,
    drive_amp: float,
    drive_freq: float,
    dt: float = DEFAULT_DT,
    t_origin: float = 0.0,
) -> Monodromy:
    """Propagator over one drive period of the steady (unenveloped) drive.

    ``t_origin`` shifts the carrier phase; the eigenphase spectrum is
    invariant under it. Raises IntegrationError if the unitarity defect
    exceeds 1e-10.
    """
    if drive_freq <= 0:
        raise ValueError("drive_freq must be positive")
    if drive_amp < 0:
        raise ValueError("drive_amp must be non-negative")
    if dt > 1.0 / (40.0 * drive_freq):
        raise ValueError(f"dt = {dt} ns does not resolve one drive period")

    period = 1.0 / drive_freq
    n = max(1, int(np.ceil(period / dt)))
    h = period / n
    mids = t_origin + (np.arange(n) + 0.5) * h
    flux_full = flux_s + drive_amp * np.cos(2.0 * np.pi * drive_freq * mids)
    c1, _ = oscillator_coefficients(params.coupler, np.full(n, flux_s), flux_full)
    c1_flat, _ = oscillator_coefficients(params.coupler, flux_s, flux_s)

    ops = assemble_operators(params)
    eye = np.eye(ops.a_fixed.shape[0], dtype=complex)
    u0 = _flat_step(params, flux_s, h)
    m = backends.strang_sequence(u0, ops.n_diag, c1 - float(c1_flat), h, eye)

    defect = float(np.linalg.norm(m.conj().T @ m - eye))
    if defect > UNITARITY_LIMIT:
        raise IntegrationError(
            f"monodromy unitarity defect {defect:.3e} exceeds {UNITARITY_LIMIT:g}"
        )
    return Monodromy(m, params, flux_s, drive_amp, drive_freq, defect)


def fold(eps, drive_freq: float):
    """Fold quasienergies into the first zone [-f_p/2, f_p/2)."""
    return np.mod(np.asarray(eps) + 0.5 * drive_freq, drive_freq) - 0.5 * drive_freq


def quasienergies(mono: Monodromy) -> FloquetSpectrum:
    """Folded quasienergy spectrum with dressed-state labels."""
    t_mat, z = schur(mono.matrix, output="complex")
    lam = np.diag(t_mat)
    period = 1.0 / mono.drive_freq
    eps = fold(-np.angle(lam) / (2.0 * np.pi * period), mono.drive_freq)

    frame = dressed_frame(mono.params, mono.flux_s)
    weights = np.abs(frame.states.conj().T @ z) ** 2

    dim = eps.size
    order = np.argsort(weights, axis=None)[::-1]
    dressed_for = np.full(dim, -1)
    used = np.zeros(dim, dtype=bool)
    done = np.zeros(dim, dtype=bool)
    count = 0
    for flat in order:
        d_idx, f_idx = divmod(int(flat), dim)
        if used[d_idx] or done[f_idx]:
            continue
        dressed_for[f_idx] = d_idx
        used[d_idx] = True
        done[f_idx] = True
        count += 1
        if count == dim:
            break

    overlaps = np.sqrt(weights[dressed_for, np.arange(dim)])
    labels = tuple(frame.labels[d] for d in dressed_for)

    sorted_eps = np.sort(eps)
    degenerate = np.zeros(dim, dtype=bool)
    for i, e in enumerate(eps):
        pos = np.searchsorted(sorted_eps, e)
        left = sorted_eps[pos - 1] if pos > 0 else sorted_eps[-1] - mono.drive_freq
        right = sorted_eps[pos + 1] if pos < dim - 1 else sorted_eps[0] + mono.drive_freq
        # nearest neighbor on the folded circle
        space = min(e - left, right - e) if dim > 1 else np.inf
        degenerate[i] = space < DEGENERACY_TOL

    return FloquetSpectrum(
        quasienergies=eps,
        labels=labels,
        overlaps=overlaps,
        degenerate=degenerate,
        states=z,
        drive=(mono.flux_s, mono.drive_amp, mono.drive_freq),
    )


def _pair_gap(
    params: CompositeParams,
    flux_s: float,
    drive_amp: float,
    drive_freq: float,
    pair_vecs: np.ndarray,
    dt: float,
) -> tuple[float, float]:
    """(circular gap, weaker subspace score) of the tracked pair."""
    spec = quasienergies(monodromy(params, flux_s, drive_amp, drive_freq, dt))
    scores = np.abs(pair_vecs.conj().T @ spec.states) ** 2
    total = scores.sum(axis=0)
    top2 = np.argsort(total)[-2:]
    e1, e2 = spec.quasienergies[top2[0]], spec.quasienergies[top2[1]]
    d = abs(e1 - e2) % drive_freq
    gap = min(d, drive_freq - d)
    return float(gap), float(total[top2].min())


def extract_transition(
    params: CompositeParams,
    flux_s: float,
    drive_amp: float,
    pair: tuple[Label, Label],
    omega_window: tuple[float, float],
    resolution: int = 21,
    dt: float = DEFAULT_DT,
) -> TransitionResult:
    """Locate a parametric resonance between two dressed states.

    Scans the drive frequency across ``omega_window``, tracking the two
    Floquet modes with the largest projection onto the dressed ``pair``
    at each point, and returns the gap minimum refined by a local rescan
    plus a parabolic fit of gap squared. The result reports the scanned
    gap curve either way; ``found`` is False when the minimum sits on the
    window edge.
    """
    lo, hi = omega_window
    if not (hi > lo > 0):
        raise ValueError("omega_window must satisfy 0 < lo < hi")
    if resolution < 5:
        raise ValueError("resolution must be at least 5")

    frame = dressed_frame(params, flux_s)
    pair_vecs = np.stack(
        [frame.states[:, frame.index_of(lab)] for lab in pair], axis=1
    )

    freqs = np.linspace(lo, hi, resolution)
    gaps = np.empty(resolution)
    scores = np.empty(resolution)
    for i, f in enumerate(freqs):
        gaps[i], scores[i] = _pair_gap(params, flux_s, drive_amp, f, pair_vecs, dt)

    i_min = int(np.argmin(gaps))
    if i_min == 0 or i_min == resolution - 1:
        return TransitionResult(
            False, np.nan, np.nan, pair, freqs, gaps, scores, flux_s, drive_amp
        )

    f_ref = np.linspace(freqs[i_min - 1], freqs[i_min + 1], REFINE_POINTS)
    g_ref = np.empty(REFINE_POINTS)
    s_ref = np.empty(REFINE_POINTS)
    for i, f in enumerate(f_ref):
        g_ref[i], s_ref[i] = _pair_gap(params, flux_s, drive_amp, f, pair_vecs, dt)

    j = int(np.argmin(g_ref))
    j = min(max(j, 1), REFINE_POINTS - 2)
    x = f_ref[j - 1 : j + 2]
    y = g_ref[j - 1 : j + 2] ** 2
    coef = np.polyfit(x, y, 2)
    if coef[0] > 0:
        omega_res = float(-coef[1] / (2.0 * coef[0]))
        if not (x[0] <= omega_res <= x[2]):
            omega_res = float(f_ref[j])
        y_min = float(np.polyval(coef, omega_res))
        strength = float(np.sqrt(max(y_min, 0.0)))
    else:
        omega_res = float(f_ref[j])
        strength = float(g_ref[j])

    all_freqs = np.concatenate([freqs, f_ref])
    all_gaps = np.concatenate([gaps, g_ref])
    all_scores = np.concatenate([scores, s_ref])
    order = np.argsort(all_freqs)
    return TransitionResult(
        True,
        omega_res,
        strength,
        pair,
        all_freqs[order],
        all_gaps[order],
        all_scores[order],
        flux_s,
        drive_amp,
    )
