import math

import numpy as np
import pytest

from emmbound import NoBifurcationInWindow, NotConverged
from emmbound.oracle import (SpectralConfig, _pieces, critical_alpha, discretize, pair_is_complex,
                             real_form, reference_energies, scaling_check)
from emmbound.reference import ALPHA_CRITICAL, REFERENCE_ENERGIES

FIXED = SpectralConfig(basis_dim=96, auto_tune=False)


def test_matrix_is_complex_symmetric_and_real_form_is_similar():
    h = discretize(-3.0, 1.0, SpectralConfig(basis_dim=40))
    assert np.allclose(h, h.T)
    r = real_form(h)
    assert r.dtype == float
    # r = P^-1 h P with P = diag(i^n), and the transformed matrix has no imaginary part
    P = np.diag(1j ** np.arange(40))
    full = np.linalg.inv(P) @ h @ P
    assert np.allclose(full.imag, 0, atol=1e-12)
    assert np.allclose(full.real, r, atol=1e-12)


def test_spectrum_closed_under_conjugation():
    w = np.linalg.eigvals(real_form(discretize(-3.0, 1.0, FIXED)))
    for e in w:
        assert np.min(np.abs(w - np.conj(e))) < 1e-8 * max(1.0, abs(e))


def test_harmonic_oscillator_sanity():
    kin, _, x = _pieces(1.0, 60, 1.0)
    w = np.sort(np.linalg.eigvalsh(kin + x @ x))[:10]
    assert np.allclose(w, 2 * np.arange(10) + 1, atol=1e-10)


@pytest.mark.parametrize("length", [1.0, 1.3])
def test_cubic_matrix_element(length):
    _, x3, _ = _pieces(1.0, 10, length)
    assert x3[0, 1] == pytest.approx(3 * length ** 3 / (2 * math.sqrt(2)), rel=1e-14)
    assert x3[0, 0] == 0 and x3[0, 2] == 0


@pytest.mark.parametrize("alpha", [-3.0, -2.0, -2.61, -2.614])
def test_reference_energies_match_published_values(alpha):
    refs = REFERENCE_ENERGIES[alpha]
    got = reference_energies(alpha, 2)
    for e in refs:
        assert min(abs(g.e - e) for g in got) < 1e-5
    assert all(g.converged for g in got)


def test_conjugate_pair_ordering():
    a, b = reference_energies(-3.0, 2)
    assert a.e.imag > 0 and b.e == pytest.approx(np.conj(a.e), abs=1e-12)
    assert (a.state_index, b.state_index) == (0, 1)
    assert a.to_json()["im"] == a.e.imag


def test_lowest_eigenvalue_independent_of_basis_scale():
    vals = []
    for s in np.linspace(0.7, 1.4, 8):
        w = np.linalg.eigvals(real_form(discretize(-3.0, 1.0, SpectralConfig(96, s))))
        vals.append(w[np.argmin(np.abs(w))])
    vals = np.array([complex(v.real, abs(v.imag)) for v in vals])
    assert np.ptp(vals.real) < 1e-8 and np.ptp(vals.imag) < 1e-8


@pytest.mark.parametrize("alpha,eps", [(-3.0, 2.0), (-1.0, 0.5), (0.0, 32.0)])
@pytest.mark.parametrize("cfg", [None, SpectralConfig(96, scale_with_epsilon=False, auto_tune=False)])
def test_scaling_law(alpha, eps, cfg):
    assert scaling_check(alpha, eps, cfg) < 1e-6


def test_scaling_special_case():
    e1 = reference_energies(0.0, 1)[0].e
    e32 = reference_energies(0.0, 1, epsilon=32.0)[0].e
    assert e1.real == pytest.approx(1.1562671, abs=1e-6) and e1.imag == 0
    assert e32 == pytest.approx(8 * e1, rel=1e-10)


def test_critical_alpha_bracket():
    lo, hi = critical_alpha((-2.62, -2.60))
    assert hi - lo <= 1e-5
    assert lo <= ALPHA_CRITICAL <= hi


def test_pair_reality_across_transition():
    assert pair_is_complex(-2.614) and pair_is_complex(-3.0)
    assert not pair_is_complex(-2.610) and not pair_is_complex(-2.0)


def test_no_bifurcation_in_window():
    with pytest.raises(NoBifurcationInWindow):
        critical_alpha((-2.0, -1.0))


def test_failure_modes():
    with pytest.raises(NotConverged):
        reference_energies(-3.0, 2, SpectralConfig(basis_dim=8))
    with pytest.raises(ValueError):
        SpectralConfig(basis_dim=4)
    with pytest.raises(ValueError):
        reference_energies(-3.0, 0)
