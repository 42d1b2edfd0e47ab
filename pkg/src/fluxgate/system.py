"""Composite Hamiltonian of two fluxonia coupled through a tunable transmon.

The three-body model lives on the tensor product Q0 (x) C (x) Q1 of
single-circuit eigenbases, with the coupler reduced to an anharmonic
oscillator whose frequency and charge zero-point fluctuation depend on
its flux bias:

    H(Phi) = sum_k diag(fluxonium energies)
           + omega_c(Phi) a^dag a + (alpha_c / 2) a^dag a^dag a a
           + n_zpf(Phi) [J_c0 n0 (a + a^dag) + J_c1 (a + a^dag) n1]
           + J_01 n0 n1

The coupler charge operator is taken in the rotated gauge where
(a + a^dag) is real, which pairs with the purely imaginary fluxonium
charge operators at the sweet spot to give a complex Hermitian matrix.

The flux-independent pieces (fluxonium diagonals, Kerr term, the bare
coupling matrices) are assembled once per parameter set and cached, so
flux sweeps and time stepping only rescale two scalar coefficients:

    H(Phi) = A + omega_c(Phi) N + n_zpf(Phi) B
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh

from .circuits import (
    FluxoniumParams,
    SpectralData,
    TransmonParams,
    diagonalize_fluxonium,
    transmon_oscillator_params,
)
from .errors import ConstructionError, LabelingError, SearchError

AMBIGUITY_THRESHOLD = 0.5  # on overlap squared
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CompositeParams:
    """Parameters of the full two-qubit device.

    Couplings j_c0, j_c1, j_01 are in GHz. Truncation keeps
    ``n_flux_levels`` per fluxonium and ``n_coupler_levels`` oscillator
    states; defaults cover every state appearing in the transition
    taxonomy.
    """

    q0: FluxoniumParams
    q1: FluxoniumParams
    coupler: TransmonParams
    j_c0: float
    j_c1: float
    j_01: float
    n_flux_levels: int = 5
    n_coupler_levels: int = 6

    def __post_init__(self):
        if self.n_flux_levels < 5:
            raise ValueError("n_flux_levels must be at least 5")
        if self.n_coupler_levels < 4:
            raise ValueError("n_coupler_levels must be at least 4")

    @property
    def dim(self) -> int:
        return self.n_flux_levels**2 * self.n_coupler_levels


@dataclass(frozen=True)
class CompositeOperator:
    """Dense Hermitian Hamiltonian in the bare product basis."""

    matrix: np.ndarray
    flux_c: float
    params: CompositeParams


@dataclass(frozen=True)
class LabeledSpectrum:
    """Dressed spectrum with bare-state labels.

    ``energies`` ascend and are referenced to the dressed ground state
    by the caller's convention (raw eigenvalues here). ``labels[i]`` is
    the bare triple (q0, coupler, q1) assigned to dressed state i,
    ``overlaps[i]`` the magnitude of the winning component, and
    ``ambiguous[i]`` is set when that magnitude squared falls below 0.5.
    """

    energies: np.ndarray
    labels: tuple[tuple[int, int, int], ...]
    overlaps: np.ndarray
    ambiguous: np.ndarray
    states: np.ndarray
    flux_c: float

    def energy_of(self, label: tuple[int, int, int]) -> float:
        """Dressed energy of the state carrying ``label``.

        Raises LabelingError if the label is missing or was flagged
        ambiguous, listing the flagged states involved.
        """
        try:
            idx = self.labels.index(label)
        except ValueError:
            raise LabelingError(f"label {label} not present in spectrum") from None
        if self.ambiguous[idx]:
            raise LabelingError(
                f"label {label} is ambiguous (overlap {self.overlaps[idx]:.3f})",
                flagged=(label,),
            )
        return float(self.energies[idx])

    def index_of(self, label: tuple[int, int, int]) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelingError(f"label {label} not present in spectrum") from None


@dataclass(frozen=True)
class ModelOperators:
    """Flux-independent building blocks of the composite Hamiltonian.

    ``a_fixed`` collects fluxonium diagonals, the coupler Kerr term, and
    the direct J_01 coupling. ``n_diag`` is the coupler occupation per
    product state and ``b_op`` the coupler-mediated coupling matrix
    without its n_zpf prefactor. Arrays are read-only; the composite
    Hamiltonian at flux Phi is A + omega_c(Phi) diag(N) + n_zpf(Phi) B.
    """

    a_fixed: np.ndarray
    n_diag: np.ndarray
    b_op: np.ndarray
    q0_data: SpectralData
    q1_data: SpectralData
    labels: tuple[tuple[int, int, int], ...]
    params: CompositeParams


def _embed(op0: np.ndarray, opc: np.ndarray, op1: np.ndarray) -> np.ndarray:
    return np.kron(op0, np.kron(opc, op1))


@lru_cache(maxsize=8)
def assemble_operators(params: CompositeParams) -> ModelOperators:
    """Build and cache the flux-independent operator pieces."""
    nf, nc = params.n_flux_levels, params.n_coupler_levels
    q0 = diagonalize_fluxonium(params.q0, n_levels=nf)
    q1 = diagonalize_fluxonium(params.q1, n_levels=nf)
    if q0.n_elements.shape != (nf, nf) or q1.n_elements.shape != (nf, nf):
        raise ConstructionError(
            f"fluxonium operator dimensions {q0.n_elements.shape}, "
            f"{q1.n_elements.shape} do not match truncation {nf}"
        )

    eye_f = np.eye(nf)
    eye_c = np.eye(nc)
    k = np.arange(nc, dtype=float)
    kerr = 0.5 * (-params.coupler.e_c) * k * (k - 1.0)
    x_c = np.zeros((nc, nc))
    x_c[np.arange(1, nc), np.arange(nc - 1)] = np.sqrt(k[1:])
    x_c += x_c.T

    a = _embed(np.diag(q0.energies), eye_c, eye_f).astype(complex)
    a += _embed(eye_f, eye_c, np.diag(q1.energies))
    a += _embed(eye_f, np.diag(kerr), eye_f)
    a += params.j_01 * _embed(q0.n_elements, eye_c, q1.n_elements)

    b = params.j_c0 * _embed(q0.n_elements, x_c, eye_f)
    b += params.j_c1 * _embed(eye_f, x_c, q1.n_elements)

    n_diag = _embed(eye_f, np.diag(k), eye_f).diagonal().copy()

    labels = tuple(
        (int(i), int(j), int(l))
        for i in range(nf)
        for j in range(nc)
        for l in range(nf)
    )

    for arr in (a, b, n_diag):
        arr.flags.writeable = False
    return ModelOperators(a, n_diag, b, q0, q1, labels, params)


def build_hamiltonian(params: CompositeParams, flux_c: float) -> CompositeOperator:
    """Composite Hamiltonian at a fixed coupler flux."""
    ops = assemble_operators(params)
    osc = transmon_oscillator_params(params.coupler, flux_c)
    h = ops.a_fixed + osc.omega_c * np.diag(ops.n_diag) + osc.n_zpf * ops.b_op
    h.flags.writeable = False
    return CompositeOperator(h, flux_c, params)


def label_eigenstates(op: CompositeOperator) -> LabeledSpectrum:
    """Diagonalize and assign bare labels by greedy maximum overlap.

    Bare-dressed pairs are processed in descending overlap magnitude and
    each bare label is used exactly once, so the assignment is a
    permutation even through avoided crossings. States whose winning
    overlap squared is below 0.5 are flagged ambiguous.
    """
    ops = assemble_operators(op.params)
    evals, evecs = eigh(op.matrix)
    weights = np.abs(evecs) ** 2

    dim = evals.size
    order = np.argsort(weights, axis=None)[::-1]
    bare_for = np.full(dim, -1)
    bare_used = np.zeros(dim, dtype=bool)
    dressed_done = np.zeros(dim, dtype=bool)
    assigned = 0
    for flat in order:
        bare, dressed = divmod(int(flat), dim)
        if bare_used[bare] or dressed_done[dressed]:
            continue
        bare_for[dressed] = bare
        bare_used[bare] = True
        dressed_done[dressed] = True
        assigned += 1
        if assigned == dim:
            break

    overlap = np.abs(evecs[bare_for, np.arange(dim)])
    return LabeledSpectrum(
        energies=evals,
        labels=tuple(ops.labels[b] for b in bare_for),
        overlaps=overlap,
        ambiguous=overlap**2 < AMBIGUITY_THRESHOLD,
        states=evecs,
        flux_c=op.flux_c,
    )


def _energy_table(spec: LabeledSpectrum, needed) -> dict:
    flagged = [lab for lab in needed if lab in spec.labels
               and spec.ambiguous[spec.labels.index(lab)]]
    if flagged:
        raise LabelingError(
            "required states are ambiguously labeled", flagged=tuple(flagged)
        )
    return {lab: spec.energy_of(lab) for lab in needed}


def state_dependent_shifts(spec: LabeledSpectrum) -> tuple[float, float]:
    """Plasmon frequency shifts conditioned on the partner qubit state.

    Returns (dw_p0, dw_p1) in GHz, where dw_p0 compares the q0 1->2
    transition with q1 in |1> versus |0> (coupler in its ground state)
    and dw_p1 the mirror quantity.
    """
    e = _energy_table(spec, [(1, 0, 0), (1, 0, 1), (2, 0, 0), (2, 0, 1),
                             (0, 0, 1), (0, 0, 2), (1, 0, 1), (1, 0, 2)])
    dw0 = abs((e[(2, 0, 1)] - e[(1, 0, 1)]) - (e[(2, 0, 0)] - e[(1, 0, 0)]))
    dw1 = abs((e[(1, 0, 2)] - e[(1, 0, 1)]) - (e[(0, 0, 2)] - e[(0, 0, 1)]))
    return dw0, dw1


def zz_coupling(spec: LabeledSpectrum) -> float:
    """Static ZZ rate zeta = E_101 - E_100 - E_001 + E_000 in GHz."""
    e = _energy_table(spec, [(0, 0, 0), (1, 0, 0), (0, 0, 1), (1, 0, 1)])
    return e[(1, 0, 1)] - e[(1, 0, 0)] - e[(0, 0, 1)] + e[(0, 0, 0)]


def _shift_cost(params: CompositeParams, flux: float) -> float:
    try:
        spec = label_eigenstates(build_hamiltonian(params, flux))
        return max(state_dependent_shifts(spec))
    except LabelingError:
        return np.inf


def find_idle_point(
    params: CompositeParams,
    flux_range: tuple[float, float] = (0.0, 0.4),
    resolution: int = 41,
) -> float:
    """Coupler flux minimizing the worst state-dependent plasmon shift.

    A uniform grid locates the basin; golden-section refines the minimum
    to 1e-4 in flux. Grid points where labeling is ambiguous are skipped,
    and the search fails if no point survives.
    """
    lo, hi = flux_range
    if resolution < 3:
        raise ValueError("resolution must be at least 3")
    grid = np.linspace(lo, hi, resolution)
    costs = np.array([_shift_cost(params, f) for f in grid])
    if not np.any(np.isfinite(costs)):
        raise SearchError(
            f"state labeling ambiguous at every grid point in [{lo}, {hi}]"
        )
    best = int(np.argmin(costs))
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, resolution - 1)]

    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = _shift_cost(params, c), _shift_cost(params, d)
    while b - a > 1e-4:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = _shift_cost(params, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = _shift_cost(params, d)
    return float(0.5 * (a + b))
