"""Quasienergy spectra, resonance extraction, and their dynamical meaning."""

import numpy as np
import pytest

from fluxgate import ParametricPulse, propagate_state
from fluxgate.evolve import dressed_frame
from fluxgate.floquet import (
    extract_transition,
    fold,
    monodromy,
    quasienergies,
)

BSWAP = ((1, 0, 1), (2, 0, 2))

# Extraction results at flux_s = 0.35 with dt = 0.002, frozen from this
# code. The amp -> strength map is linear to a few percent and the
# resonance drifts up quadratically with amplitude.
FROZEN = {
    0.03: (10.786324, 6.0955e-3, (10.736, 10.836), 15),
    0.045: (10.786559, 9.1550e-3, (10.736, 10.836), 15),
}


def test_monodromy_unitary(params500):
    m = monodromy(params500, 0.35, 0.045, 10.79, dt=0.002)
    assert m.defect < 1e-10
    eigs = np.linalg.eigvals(m.matrix)
    assert np.max(np.abs(np.abs(eigs) - 1.0)) < 1e-10


def test_monodromy_guards(params500):
    with pytest.raises(ValueError):
        monodromy(params500, 0.35, 0.045, -1.0)
    with pytest.raises(ValueError):
        monodromy(params500, 0.35, -0.01, 10.79)
    with pytest.raises(ValueError):
        monodromy(params500, 0.35, 0.045, 10.79, dt=0.01)


def test_fold_window():
    f = 10.79
    rng = np.random.default_rng(7)
    eps = rng.uniform(-100.0, 100.0, size=200)
    folded = fold(eps, f)
    assert np.all(folded >= -f / 2)
    assert np.all(folded < f / 2)
    shifted = fold(eps + 3 * f, f)
    assert np.max(np.abs(shifted - folded)) < 1e-9


def test_time_origin_invariance(params500):
    period = 1.0 / 10.79
    a = quasienergies(monodromy(params500, 0.35, 0.045, 10.79, dt=0.002))
    b = quasienergies(
        monodromy(params500, 0.35, 0.045, 10.79, dt=0.002, t_origin=0.31 * period)
    )
    assert np.max(np.abs(np.sort(a.quasienergies) - np.sort(b.quasienergies))) < 1e-9


def test_zero_amplitude_reduces_to_dressed(params500):
    f_p = 10.79
    spec = quasienergies(monodromy(params500, 0.35, 0.0, f_p, dt=0.002))
    frame = dressed_frame(params500, 0.35)
    worst = 0.0
    for eps, lab in zip(spec.quasienergies, spec.labels):
        expected = frame.energies[frame.index_of(lab)]
        worst = max(worst, abs(fold(eps - expected, f_p)))
    assert worst < 1e-9


def test_labels_are_a_permutation(params500):
    spec = quasienergies(monodromy(params500, 0.35, 0.045, 10.79, dt=0.002))
    frame = dressed_frame(params500, 0.35)
    assert sorted(spec.labels) == sorted(frame.labels)


@pytest.mark.parametrize("amp", sorted(FROZEN))
def test_extraction_frozen_values(params500, amp):
    omega_ref, strength_ref, window, res = FROZEN[amp]
    tr = extract_transition(params500, 0.35, amp, BSWAP, window, res, dt=0.002)
    assert tr.found
    assert tr.omega_res == pytest.approx(omega_ref, abs=5e-5)
    assert tr.strength == pytest.approx(strength_ref, rel=1e-2)


def test_strength_linear_in_amplitude():
    a = FROZEN[0.03][1]
    b = FROZEN[0.045][1]
    assert b / a == pytest.approx(1.5, rel=0.03)


def test_small_amplitude_resonance_matches_dressed_splitting(params500):
    frame = dressed_frame(params500, 0.35)
    splitting = frame.energy_of((2, 0, 2)) - frame.energy_of((1, 0, 1))
    tr = extract_transition(
        params500, 0.35, 0.01, BSWAP, (10.766, 10.806), 9, dt=0.002
    )
    assert tr.found
    assert abs(tr.omega_res - splitting) < 1e-3


def test_rabi_period_matches_strength(params500):
    omega, strength = FROZEN[0.03][:2]
    t_total = 1.25 / strength
    pulse = ParametricPulse(
        flux_static=0.35, drive_amp=0.03, drive_freq=omega,
        ramp_time=0.0, gate_time=t_total,
    )
    grid = np.linspace(0.0, t_total, 1601)
    res = propagate_state(
        params500, pulse, psi0=(1, 0, 1), record=((2, 0, 2),),
        dt=0.001, t_grid=grid,
    )
    pop = res.populations[(2, 0, 2)]
    assert pop.max() > 0.99
    k = int(np.argmax(pop))
    coef = np.polyfit(grid[k - 1 : k + 2], pop[k - 1 : k + 2], 2)
    period = 2.0 * (-coef[1] / (2.0 * coef[0]))
    assert strength * period == pytest.approx(1.0, abs=0.02)


def test_not_found_reports_scan(params500):
    tr = extract_transition(
        params500, 0.35, 0.03, BSWAP, (10.90, 10.96), 5, dt=0.002
    )
    assert not tr.found
    assert np.isnan(tr.omega_res) and np.isnan(tr.strength)
    assert tr.scan_freqs.shape == (5,)
    assert tr.gaps.shape == (5,)
    assert np.all(np.isfinite(tr.gaps))


def test_extraction_deterministic(params500):
    kw = dict(resolution=5, dt=0.002)
    a = extract_transition(params500, 0.35, 0.03, BSWAP, (10.77, 10.80), **kw)
    b = extract_transition(params500, 0.35, 0.03, BSWAP, (10.77, 10.80), **kw)
    assert a.omega_res == b.omega_res
    assert a.strength == b.strength
    assert np.array_equal(a.gaps, b.gaps)


def test_window_guards(params500):
    with pytest.raises(ValueError):
        extract_transition(params500, 0.35, 0.03, BSWAP, (10.8, 10.7))
    with pytest.raises(ValueError):
        extract_transition(params500, 0.35, 0.03, BSWAP, (10.7, 10.8), resolution=3)
