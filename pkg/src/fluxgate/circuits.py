"""Single-circuit eigenproblems for fluxonium and tunable-transmon circuits.

All energies are in GHz (h = 1), phases in radians, and fluxes in units of
the flux quantum. Charge operators are dimensionless Cooper-pair numbers.

The fluxonium Hamiltonian is

    H = 4 E_C n^2 + (E_L / 2)(phi - phi_ext)^2 - E_J cos(phi)

and is diagonalized in the harmonic-oscillator basis of its linearized
(E_C, E_L) circuit, displaced to the inductive minimum. The tunable
transmon is handled both exactly in the charge basis and through its
anharmonic-oscillator approximation, whose frequency

    omega_c(Phi) = sqrt(8 E_C E_J(Phi)) - E_C,    E_J(Phi) = E_J_max cos(pi Phi)

is the quantity modulated by a flux drive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .errors import ConvergenceError, CutoffError, DomainError

DEFAULT_FLUXONIUM_BASIS = 120
MAX_FLUXONIUM_BASIS = 1920
FLUXONIUM_ENERGY_TOL = 1e-6
DEFAULT_CHARGE_CUTOFF = 60
EDGE_WEIGHT_TOL = 1e-8


@dataclass(frozen=True)
class FluxoniumParams:
    """Fluxonium circuit energies (GHz) and external phase (radians)."""

    e_c: float
    e_l: float
    e_j: float
    phi_ext: float = np.pi

    def __post_init__(self):
        if self.e_c <= 0 or self.e_l <= 0 or self.e_j <= 0:
            raise ValueError("fluxonium energies e_c, e_l, e_j must be positive")


@dataclass(frozen=True)
class TransmonParams:
    """Flux-tunable transmon: charging energy, junction energy, bias flux.

    ``flux`` is the default operating bias in units of the flux quantum;
    operations that take an explicit flux argument ignore it.
    """

    e_c: float
    e_j_max: float
    flux: float = 0.0

    def __post_init__(self):
        if self.e_c <= 0 or self.e_j_max <= 0:
            raise ValueError("transmon energies e_c, e_j_max must be positive")
        if self.effective_ej(self.flux) <= 0:
            raise DomainError("flux bias leaves no positive Josephson energy")

    def effective_ej(self, flux: float) -> float:
        """Flux-tuned Josephson energy E_J_max * cos(pi * flux)."""
        return self.e_j_max * np.cos(np.pi * flux)


@dataclass(frozen=True)
class SpectralData:
    """Retained eigenlevels of one circuit.

    ``energies`` are transition frequencies relative to the ground state,
    strictly ascending. ``n_elements`` is the charge operator in the
    eigenbasis, Hermitian, with eigenvector phases fixed so the largest
    component of each eigenvector is real positive.
    """

    energies: np.ndarray
    n_elements: np.ndarray
    n_levels: int
    basis_size: int

    def transition(self, i: int, j: int) -> float:
        """Frequency of |i> -> |j> in GHz."""
        return float(self.energies[j] - self.energies[i])


@dataclass(frozen=True)
class OscillatorParams:
    """Anharmonic-oscillator reduction of the transmon at one flux."""

    omega_c: float
    alpha_c: float
    n_zpf: float
    phi_zpf: float


def _fix_eigenvector_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _fluxonium_once(params: FluxoniumParams, basis_size: int, n_levels: int):
    omega0 = np.sqrt(8.0 * params.e_c * params.e_l)
    phi_zpf = (2.0 * params.e_c / params.e_l) ** 0.25
    n_zpf = 0.5 / phi_zpf

    k = np.arange(basis_size)
    sq = np.sqrt(k[1:])

    # cos(phi) through the eigendecomposition of the tridiagonal phase operator
    # phi = phi_ext + phi_zpf (b + b^dag)
    x_vals, x_vecs = eigh_tridiagonal(np.full(basis_size, params.phi_ext), phi_zpf * sq)
    cos_phi = (x_vecs * np.cos(x_vals)) @ x_vecs.T

    h = np.diag(omega0 * k) - params.e_j * cos_phi
    evals, evecs = eigh(h)
    evecs = _fix_eigenvector_signs(evecs)

    n_op = np.zeros((basis_size, basis_size), dtype=complex)
    n_op[k[1:], k[:-1]] = 1j * n_zpf * sq
    n_op[k[:-1], k[1:]] = -1j * n_zpf * sq

    keep = evecs[:, :n_levels]
    n_el = keep.conj().T @ n_op @ keep
    return evals[:n_levels] - evals[0], n_el


def diagonalize_fluxonium(
    params: FluxoniumParams,
    basis_size: int = DEFAULT_FLUXONIUM_BASIS,
    n_levels: int = 6,
) -> SpectralData:
    """Diagonalize a fluxonium in the displaced harmonic basis.

    The basis is grown (doubling from ``basis_size``) until the retained
    energies move by less than 1e-6 GHz under a further doubling, so the
    returned levels carry that convergence guarantee.

    Raises:
        ConvergenceError: if the bound is not met at the maximum basis size.
    """
    if basis_size < 4 * n_levels:
        raise ValueError("basis_size must be at least 4 * n_levels")

    size = basis_size
    energies, n_el = _fluxonium_once(params, size, n_levels)
    while True:
        energies2, n_el2 = _fluxonium_once(params, 2 * size, n_levels)
        delta = float(np.max(np.abs(energies2 - energies)))
        if delta < FLUXONIUM_ENERGY_TOL:
            return SpectralData(energies, n_el, n_levels, size)
        size *= 2
        energies, n_el = energies2, n_el2
        if 2 * size > MAX_FLUXONIUM_BASIS:
            raise ConvergenceError(
                f"fluxonium energies not converged at basis {size}"
                f" (last delta {delta:.3e} GHz)",
                last_delta=delta,
            )


def diagonalize_transmon_charge(
    params: TransmonParams,
    n_charge_cutoff: int = DEFAULT_CHARGE_CUTOFF,
    n_levels: int = 6,
    flux: float | None = None,
) -> SpectralData:
    """Exact transmon eigenproblem in the charge basis n in [-N, N].

    cos(phi) couples neighboring charge states with amplitude -E_J(Phi)/2.
    Raises CutoffError when the highest retained level puts more than
    1e-8 weight on the edge charge states.
    """
    if n_charge_cutoff < 20:
        raise ValueError("n_charge_cutoff must be at least 20")
    phi = params.flux if flux is None else flux
    ej = params.effective_ej(phi)
    if ej <= 0:
        raise DomainError(f"no positive Josephson energy at flux {phi}")

    n = np.arange(-n_charge_cutoff, n_charge_cutoff + 1)
    evals, evecs = eigh_tridiagonal(4.0 * params.e_c * n.astype(float) ** 2,
                                    np.full(2 * n_charge_cutoff, -ej / 2.0))
    evecs = _fix_eigenvector_signs(evecs)

    top = evecs[:, n_levels - 1]
    edge_weight = float(top[0] ** 2 + top[-1] ** 2)
    if edge_weight > EDGE_WEIGHT_TOL:
        raise CutoffError(
            f"charge cutoff {n_charge_cutoff} too small: edge weight "
            f"{edge_weight:.3e} on level {n_levels - 1}"
        )

    keep = evecs[:, :n_levels]
    n_el = (keep * n[:, None]).T @ keep
    return SpectralData(
        evals[:n_levels] - evals[0],
        n_el.astype(complex),
        n_levels,
        2 * n_charge_cutoff + 1,
    )


def transmon_oscillator_params(params: TransmonParams, flux: float | None = None) -> OscillatorParams:
    """Oscillator reduction at the given flux.

    omega_c = sqrt(8 E_C E_J(Phi)) - E_C, alpha_c = -E_C, and the
    zero-point fluctuations satisfy phi_zpf * n_zpf = 1/2.
    """
    phi = params.flux if flux is None else flux
    ej = params.effective_ej(phi)
    if ej <= 0:
        raise DomainError(f"no positive Josephson energy at flux {phi}")
    phi_zpf = (2.0 * params.e_c / ej) ** 0.25
    return OscillatorParams(
        omega_c=np.sqrt(8.0 * params.e_c * ej) - params.e_c,
        alpha_c=-params.e_c,
        n_zpf=0.5 / phi_zpf,
        phi_zpf=phi_zpf,
    )


def coupler_flux_derivative(params: TransmonParams, flux: float, step: float = 1e-5) -> float:
    """d omega_c / d Phi at the given flux, in GHz per flux quantum.

    Central finite difference of the closed-form oscillator frequency,
    Richardson-checked: the halved-step estimate must agree within
    1e-6 GHz, and that estimate is returned.
    """

    def omega(ph: float) -> float:
        return transmon_oscillator_params(params, ph).omega_c

    estimates = []
    for h in (step, step / 2.0):
        lo, hi = omega(flux - h), omega(flux + h)
        if abs(hi - lo) < 1e-12 and abs(flux) > 1e-9:
            raise ConvergenceError(
                f"finite-difference step {h} underflows at flux {flux}",
                last_delta=abs(hi - lo),
            )
        estimates.append((hi - lo) / (2.0 * h))
    if abs(estimates[1] - estimates[0]) > 1e-6:
        raise ConvergenceError(
            "flux derivative not Richardson-converged "
            f"(delta {abs(estimates[1] - estimates[0]):.3e})",
            last_delta=abs(estimates[1] - estimates[0]),
        )
    return estimates[1]
