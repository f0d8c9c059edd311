from math import comb

import numpy as np
import pytest
import sympy as sp
from flint import ctx
from hypothesis import given, settings
from hypothesis import strategies as st

from emmbound import EnergyPoint, InvalidEnergy, ModelParams, NoUsableRoot
from emmbound.appendix import (INDEPENDENT, _constraint_matrix, appendix_feasible,
                               appendix_map_for_energy, appendix_residuals, build_appendix_map,
                               recursion_coefficients, turning_points)
from emmbound.positivity import Verdict, emm_feasible
from emmbound.scanner import PointChecker
from physics import physical_moments

xi, tau, a, er, p = sp.symbols("xi tau alpha E_R p")
V = 3 * tau ** 2 + a


def symbolic_recursion():
    """Moment coefficients of Lam S'''' - Lam' S''' + 4 E_R (Lam S'' - Lam' S') - 4 Lam^3 S = 0,
    the fourth-order equation for S(xi + tau) multiplied through by Lam^2, where
    Lam = -xi (xi^2 + 3 tau xi + 3 tau^2 + alpha). Integration by parts turns
    int xi^(p+j) S^(k) into (-1)^k (p+j)(p+j-1)...(p+j-k+1) mu_{p+j-k}."""
    lam = -xi * (xi ** 2 + 3 * tau * xi + V)
    dlam = sp.diff(lam, xi)
    terms = [(lam, 4), (-dlam, 3), (4 * er * lam, 2), (-4 * er * dlam, 1), (-4 * lam ** 3, 0)]
    out = {}
    for f, k in terms:
        for (j,), c in sp.Poly(sp.expand(f), xi).terms():
            ff = sp.Integer(1)
            for i in range(k):
                ff *= p + j - i
            out[j - k] = sp.expand(out.get(j - k, 0) + (-1) ** k * ff * c)
    return out


SYM = symbolic_recursion()


@pytest.mark.parametrize("pv", [-2, -1, 0, 1, 4, 11])
def test_recursion_matches_symbolic_derivation(pv):
    vals = {a: sp.Rational(-3), er: sp.Rational(6, 5), tau: sp.Rational(7, 4), p: pv}
    ours = recursion_coefficients(pv, -3.0, 1.2, 1.75)
    for k in range(-3, 10):
        want = float(SYM.get(k, sp.Integer(0)).subs(vals))
        got = float(ours[k])
        assert got == pytest.approx(want, rel=1e-14, abs=1e-12), k


def test_mu_p_plus_two_coefficient_vanishes():
    assert SYM.get(2, 0) == 0
    assert recursion_coefficients(5, -2.0, 1.0, 1.3)[2] == 0


def test_mu8_relation_from_negative_index_equations():
    """mu_8 row: eliminate the negative-index moments between the p = -2 and p = -1 equations."""
    mu = sp.symbols("mu0:10")

    def nonneg(pv):
        return sum(SYM[k].subs(p, pv) * mu[pv + k] for k in SYM if pv + k >= 0)

    combined = sp.expand(nonneg(-1) - V / (6 * tau) * nonneg(-2))
    # every negative-index moment cancels in the combination
    def coeff(k, pv):
        return sp.sympify(SYM.get(k, 0)).subs(p, pv)

    for m in range(-5, 0):
        assert sp.simplify(coeff(m + 1, -1) - V / (6 * tau) * coeff(m + 2, -2)) == 0
    mu8 = sp.solve(combined, mu[8])[0]
    mu8 = mu8.subs(mu[3], -3 * tau * mu[2] - V * mu[1])
    vals = {a: -3.0, er: 1.2, tau: 1.75}
    with ctx.workprec(128):
        C = _constraint_matrix(-3.0, 1.2, 1.75)
        for j, s in enumerate(INDEPENDENT):
            want = float(sp.diff(mu8, mu[s]).subs(vals))
            assert float(C[8, j]) == pytest.approx(want, rel=1e-13, abs=1e-13)
            assert float(C[3, j]) == pytest.approx(
                float(sp.diff(-3 * tau * mu[2] - V * mu[1], mu[s]).subs(vals)), abs=1e-15)


def test_turning_points_example():
    tp = turning_points(-3.0, 0.76)
    assert tp.n_real == 3
    assert tp.beta == pytest.approx(2.0, rel=1e-15)
    for t in tp.real:
        assert t ** 3 - 3 * t == pytest.approx(0.76, abs=1e-14)
    assert tp.selected == max(tp.real, key=lambda t: abs(3 * t * t - 3))
    assert turning_points(-3.0, 2.5).n_real == 1
    assert turning_points(1.0, 0.3).n_real == 1


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(-5, 5), e_i=st.floats(-5, 5))
def test_turning_points_properties(alpha, e_i):
    tp = turning_points(alpha, e_i)
    disc = -(4 * alpha ** 3 + 27 * e_i ** 2)
    if abs(disc) > 1e-6:
        assert tp.n_real == (3 if disc > 0 else 1)
    scale = max(1.0, abs(e_i), abs(alpha) ** 1.5)
    for t in tp.real:
        assert abs(t ** 3 + alpha * t - e_i) <= 1e-14 * scale * max(1.0, abs(t)) ** 3
    if alpha < -0.01 and abs(e_i) < tp.beta * (1 - 1e-3):
        assert tp.n_real == 3


@pytest.mark.parametrize("root", [0, 1, 2])
def test_map_reproduces_shifted_physical_moments(root):
    """Every real turning point gives a map that reproduces the moments of |psi|^2 about it."""
    e, u = physical_moments(-3.0, 1.2258 + 0.76j, 30)
    t = turning_points(-3.0, e.imag).real[root]
    mu = np.array([sum(comb(q, k) * (-t) ** (q - k) * u[k] for k in range(q + 1)) for q in range(25)])
    mu = mu / mu[0:14:2].sum()
    mp = build_appendix_map(-3.0, e.real, t, 24)
    got = mp.moments(mu[2:14:2])
    # the middle root has small |3 tau^2 + alpha| and amplifies input round-off the most
    tol = 1e-10 if t == turning_points(-3.0, e.imag).selected else 1e-8
    assert np.all(np.abs(got[:21] - mu[:21]) <= tol * np.abs(mu[:21]))
    assert emm_feasible(mp).status == Verdict.FEASIBLE


def test_residuals_in_extended_precision():
    mp = build_appendix_map(-3.0, 1.2258, 1.847, 28)
    rng = np.random.default_rng(4)
    for _ in range(10):
        res = appendix_residuals(mp, rng.dirichlet(np.ones(7))[1:])
        assert res["recursion"] < 1e-20
        assert res["negative_index"] < 1e-10
        assert res["ei_constraint"] < 1e-20
    assert mp.pipeline == "appendix" and mp.dim == 6 and mp.tau == 1.847
    assert mp.energy.e_i == pytest.approx(1.847 ** 3 - 3 * 1.847)


def test_alpha_zero_reduction():
    """With alpha = 0 the only real turning point is the cube root of E_I."""
    tp = turning_points(0.0, 0.5)
    assert tp.real == [pytest.approx(0.5 ** (1 / 3), rel=1e-15)]
    c = recursion_coefficients(3, 0.0, 1.0, tp.selected)
    assert float(c[3]) == pytest.approx(4 * (3 * tp.selected ** 2) ** 3)
    with pytest.raises(NoUsableRoot):
        appendix_map_for_energy(ModelParams(0.0), EnergyPoint(1.156, 0.0), 24)
    assert PointChecker(ModelParams(0.0), 24, pipeline="appendix")((1.156, 0.0)) == Verdict.MAP_SINGULAR


def test_invalid_inputs():
    with pytest.raises(NoUsableRoot):
        build_appendix_map(-3.0, 1.0, 1e-9, 24)
    with pytest.raises(ValueError):
        build_appendix_map(-3.0, 1.0, 1.8, 10)
    with pytest.raises(ValueError):
        build_appendix_map(-3.0, 1.0, 1.8, 24, epsilon=2.0)
    with pytest.raises(InvalidEnergy):
        appendix_feasible(-3.0, 24, -0.1, [1.8])


def test_tau_scan_verdicts():
    out = appendix_feasible(-3.0, 28, 1.2258, [1.847, 2.0])
    assert out[0].status == "Feasible"
    assert out[0].e_i == pytest.approx(1.847 ** 3 - 3 * 1.847)
    assert out[1].status == "Infeasible"
