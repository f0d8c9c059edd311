import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from emmbound.errors import LPError
from emmbound.lp import MaxMarginLP, lp_max_margin, simplex_constraints
from emmbound.positivity import LinearCut

NO_CUT_MARGIN = 1 / (5 + np.sqrt(5))


def scipy_margin(rows):
    """Reference max-margin value from scipy's HiGHS solver."""
    A = np.array([a / np.linalg.norm(a) for a, _ in rows])
    b = np.array([b / np.linalg.norm(a) for a, b in rows])
    d = A.shape[1]
    # variables (x, t): maximize t s.t. -A x + t <= -b
    res = linprog(np.r_[np.zeros(d), -1.0], A_ub=np.hstack([-A, np.ones((len(b), 1))]), b_ub=-b,
                  bounds=[(None, None)] * (d + 1), method="highs")
    assert res.status == 0
    return -res.fun


def test_no_cuts_gives_inscribed_ball():
    t, x = lp_max_margin([])
    assert t == pytest.approx(NO_CUT_MARGIN, abs=1e-12)
    assert np.allclose(x, NO_CUT_MARGIN)


def test_opposing_cuts_are_infeasible():
    a = np.array([1.0, 0, 0, 0, 0])
    t, _ = lp_max_margin([LinearCut(a, 0.6), LinearCut(-a, -0.4)])
    assert t == pytest.approx(-0.1, abs=1e-12)


def test_single_halfspace_shrinks_margin():
    t0, _ = lp_max_margin([])
    t1, x = lp_max_margin([LinearCut(np.ones(5), 0.9)])
    assert t1 < t0
    assert x.sum() >= 0.9 + t1 - 1e-12


def test_too_few_rows():
    lp = MaxMarginLP(3)
    lp.add([1, 0, 0], 0)
    with pytest.raises(LPError):
        lp.solve()


def test_non_finite_row():
    with pytest.raises(LPError):
        MaxMarginLP(2).add([np.nan, 1.0], 0.0)


def test_zero_row_contradiction():
    lp = MaxMarginLP(5)
    for a, b in simplex_constraints(5):
        lp.add(a, b)
    lp.add(np.zeros(5), 0.25)
    t, _ = lp.solve()
    assert t == pytest.approx(-0.25)


def test_degenerate_duplicate_rows():
    cuts = [LinearCut(np.array([1.0, -1, 0, 0, 0]), 0.0)] * 6
    cuts += [LinearCut(np.array([-1.0, 1, 0, 0, 0]), 0.0)] * 6
    t, x = lp_max_margin(cuts)
    assert t == pytest.approx(0.0, abs=1e-12)
    assert x[0] == pytest.approx(x[1], abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n_cuts=st.integers(0, 30), dim=st.integers(1, 6))
def test_matches_scipy(seed, n_cuts, dim):
    rng = np.random.default_rng(seed)
    rows = simplex_constraints(dim)
    for _ in range(n_cuts):
        a = rng.normal(size=dim)
        rows.append((a, float(a @ rng.dirichlet(np.ones(dim + 1))[:dim] + rng.normal(scale=0.2))))
    lp = MaxMarginLP(dim)
    for a, b in rows:
        lp.add(a, b)
    t, x = lp.solve()
    assert t == pytest.approx(scipy_margin(rows), abs=1e-9)
    A = np.array(lp.rows)
    assert np.min(A @ x - np.array(lp.rhs)) >= t - 1e-12


def test_warm_start_matches_cold_solve():
    rng = np.random.default_rng(7)
    warm = MaxMarginLP(5)
    for a, b in simplex_constraints(5):
        warm.add(a, b)
    for k in range(40):
        a = rng.normal(size=5)
        warm.add(a, float(a @ rng.dirichlet(np.ones(6))[:5]) - 0.05)
        tw, xw = warm.solve()
        cold = MaxMarginLP(5)
        for row, rhs in zip(warm.rows, warm.rhs):
            cold.add(row, rhs)
        tc, _ = cold.solve()
        assert tw == pytest.approx(tc, abs=1e-10)


def random_polytope(rng):
    """Simplex cut by a few half-spaces through random interior points."""
    k = int(rng.integers(2, 9))
    cuts = []
    for _ in range(k):
        a = rng.normal(size=5)
        p = rng.dirichlet(np.ones(6))[:5]
        cuts.append(LinearCut(a, float(a @ p) + rng.normal(scale=0.15)))
    return cuts


def monte_carlo_nonempty(cuts, rng, n=1_000_000):
    pts = rng.dirichlet(np.ones(6), size=n)[:, :5]
    ok = np.ones(n, dtype=bool)
    for c in cuts:
        ok &= pts @ c.a >= c.b
    return bool(ok.any())


def lp_monte_carlo_agreement(seed=2024):
    rng = np.random.default_rng(seed)
    want = {True: 10, False: 10}
    agree, total = 0, 0
    while any(want.values()):
        cuts = random_polytope(rng)
        t, _ = lp_max_margin(cuts)
        if -1e-9 <= t <= 0.04:
            continue  # too thin for sampling to settle membership
        feasible = t > 0
        if want[feasible] == 0:
            continue
        want[feasible] -= 1
        total += 1
        agree += monte_carlo_nonempty(cuts, rng) == feasible
    return agree, total


def test_lp_agrees_with_monte_carlo():
    agree, total = lp_monte_carlo_agreement()
    assert agree == total == 20
