"""Cross-check route built on moments about a turning point.

Translating x = xi + tau, with tau a real root of tau^3 + alpha tau = E_I,
turns the complex-energy problem into a real fourth-order equation whose
Hamburger moments mu_p = int xi^p S(xi + tau) d xi obey a nine-term
recursion. Two extra linear relations fix the moments at p = -2 and p = -1
(combined so the negative-index moments drop out) and translate the E_I
constraint, leaving seven independent moments mu_0, mu_1, mu_2, mu_4..mu_7.
The rest of the machinery (normalization, positivity) is shared with the
main route. Only epsilon = 1 is supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from flint import arb, arb_mat, ctx

from .errors import NoUsableRoot
from .model import EnergyPoint, ModelParams
from .positivity import FeasibilityConfig, FeasibilityResult, emm_feasible
from .recursion import (DEFAULT_COND_CAP, DEFAULT_PREC, AffineMomentMap, arb_to_numpy,
                        normalize_columns)

TAU_MIN = 1e-6
N_SEEDS = 9
INDEPENDENT = (0, 1, 2, 4, 5, 6, 7)
EVEN_ROWS = (0, 2, 4, 6, 8, 10, 12)


@dataclass
class TurningPointSet:
    roots: list[complex]
    real: list[float]
    beta: float
    selected: float | None

    @property
    def n_real(self) -> int:
        return len(self.real)


def turning_points(alpha: float, e_i: float) -> TurningPointSet:
    """Roots of tau^3 + alpha tau = E_I; selects the real root maximizing |3 tau^2 + alpha|."""
    roots = np.roots([1.0, 0.0, alpha, -e_i])
    # one Newton polish per root
    roots = [complex(r - (r ** 3 + alpha * r - e_i) / (3 * r ** 2 + alpha))
             if abs(3 * r ** 2 + alpha) > 1e-300 else complex(r) for r in roots]
    beta = 2 * abs(alpha) ** 1.5 / (3 * math.sqrt(3))
    disc = -(4 * alpha ** 3 + 27 * e_i ** 2)
    n_real = 3 if (alpha < 0 and disc > 0) else 1
    ordered = sorted(roots, key=lambda r: abs(r.imag))
    real = sorted(r.real for r in ordered[:n_real])
    usable = [t for t in real if abs(t) > TAU_MIN]
    selected = max(usable, key=lambda t: abs(3 * t * t + alpha)) if usable else None
    return TurningPointSet(sorted(roots, key=lambda r: (r.real, r.imag)), real, beta, selected)


def recursion_coefficients(p: int, alpha, e_r, tau) -> dict[int, arb]:
    """Coefficients of mu_{p+k}, k = -3..9, in the translated moment recursion."""
    a, er, t = arb(alpha), arb(e_r), arb(tau)
    P = arb(p)
    v = 3 * t * t + a
    return {
        -3: -v * P * (4 - 4 * P - P * P + P ** 3),
        -2: -3 * t * P * (-4 - P + 4 * P * P + P ** 3),
        -1: -P * (P + 2) * (6 + 12 * t * t * er + 4 * a * er + 7 * P + P * P),
        0: -12 * t * er * (4 + 5 * P + P * P),
        1: -4 * er * (12 + 8 * P + P * P),
        2: arb(0),
        3: 4 * v ** 3,
        4: 36 * t * v * v,
        5: 12 * (36 * t ** 4 + 15 * a * t * t + a * a),
        6: 36 * (9 * t ** 3 + 2 * t * a),
        7: 144 * t * t + 12 * a,
        8: 36 * t,
        9: arb(4),
    }


def _constraint_matrix(alpha, e_r, tau) -> arb_mat:
    """Seeds mu_0..mu_8 as linear combinations of the seven independent moments."""
    a, er, t = arb(alpha), arb(e_r), arb(tau)
    v = 3 * t * t + a
    C = arb_mat(N_SEEDS, len(INDEPENDENT))
    for j, s in enumerate(INDEPENDENT):
        C[s, j] = arb(1)
    # translated E_I constraint: mu_3 = -3 tau mu_2 - V mu_1
    mu3 = {1: -v, 2: -3 * t}
    for s, c in mu3.items():
        C[3, INDEPENDENT.index(s)] = c
    # combined p = -2 / p = -1 relation solved for mu_8
    rel = {
        7: 34 * t - 2 * a / (3 * t),
        6: 6 * a + 126 * t * t,
        5: 252 * t ** 3 + 42 * a * t - 2 * a * a / t,
        4: 90 * t * t * v,
        3: -2 * (a - 6 * t * t) * v * v / t,
        2: -2 * v ** 3,
        1: -2 * v ** 4 / (3 * t),
        0: -20 * er,
    }
    row = [arb(0)] * len(INDEPENDENT)
    for s, c in rel.items():
        for j in range(len(INDEPENDENT)):
            row[j] += c * C[s, j]
    for j in range(len(INDEPENDENT)):
        C[8, j] = -row[j] / 4
    return C


def build_appendix_map(alpha: float, e_r: float, tau: float, p_max: int,
                       prec: int = DEFAULT_PREC, cond_cap: float = DEFAULT_COND_CAP,
                       epsilon: float = 1.0) -> AffineMomentMap:
    if epsilon != 1.0:
        raise ValueError("the translated route is implemented for epsilon = 1 only")
    if p_max < EVEN_ROWS[-1]:
        raise ValueError(f"p_max must be at least {EVEN_ROWS[-1]}")
    if abs(tau) <= TAU_MIN:
        raise NoUsableRoot(f"|tau| = {abs(tau):.3e} is too close to zero")
    e_i = tau ** 3 + alpha * tau
    energy = EnergyPoint(e_r, e_i)
    with ctx.workprec(prec):
        rows = [[arb(int(i == j)) for j in range(N_SEEDS)] for i in range(N_SEEDS)]
        for p in range(0, p_max - N_SEEDS + 1):
            c = recursion_coefficients(p, alpha, e_r, tau)
            lead = c.pop(9)
            acc = [arb(0)] * N_SEEDS
            for k, ck in c.items():
                if p + k < 0:
                    continue  # coefficient vanishes there
                for l in range(N_SEEDS):
                    acc[l] += ck * rows[p + k][l]
            rows.append([-x / lead for x in acc])
        omega = arb_mat(rows[: p_max + 1]) * _constraint_matrix(alpha, e_r, tau)
    table, cond = normalize_columns(omega, EVEN_ROWS, prec, cond_cap)
    return AffineMomentMap(arb_to_numpy(table), table, p_max, ModelParams(alpha), energy, cond,
                           prec, pipeline="appendix", tau=float(tau), even_rows=EVEN_ROWS)


def appendix_map_for_energy(params: ModelParams, energy: EnergyPoint, p_max: int,
                            prec: int = DEFAULT_PREC) -> AffineMomentMap:
    tp = turning_points(params.alpha, energy.e_i)
    if tp.selected is None:
        raise NoUsableRoot(f"no real turning point with |tau| > {TAU_MIN}")
    return build_appendix_map(params.alpha, energy.e_r, tp.selected, p_max, prec,
                              epsilon=params.epsilon)


def _rel(total: arb, size: arb) -> float:
    # upper bound, since the midpoint of a ball straddling zero may be exactly 0
    return float((abs(total) + total.rad()) / size)


def appendix_residuals(mp: AffineMomentMap, nu) -> dict[str, float]:
    """Relative residuals of the recursion (p >= 0), the combined p = -2/-1 relation
    and the translated E_I constraint, evaluated on moments generated at nu."""
    alpha, e_r, tau = mp.params.alpha, mp.energy.e_r, mp.tau
    mu = mp.moments_ext(nu)

    def nonneg_part(p):
        c = recursion_coefficients(p, alpha, e_r, tau)
        terms = [ck * mu[p + k] for k, ck in c.items() if 0 <= p + k <= mp.p_max]
        return sum(terms, arb(0)), sum((abs(x) for x in terms), arb(0))

    out = {}
    with ctx.workprec(mp.prec):
        worst = 0.0
        for p in range(0, mp.p_max - N_SEEDS + 1):
            tot, size = nonneg_part(p)
            if float(size) > 0:
                worst = max(worst, _rel(tot, size))
        out["recursion"] = worst
        # the p = -2 relation defines Sigma; p = -1 must equal V / (6 tau) times it
        sigma, s1 = nonneg_part(-2)
        rhs, s2 = nonneg_part(-1)
        t = arb(tau)
        v = 3 * t * t + arb(alpha)
        out["negative_index"] = _rel(rhs - v / (6 * t) * sigma, s2 + abs(v / (6 * t)) * s1)
        e_terms = [mu[3], 3 * t * mu[2], v * mu[1]]
        out["ei_constraint"] = _rel(sum(e_terms, arb(0)), sum((abs(x) for x in e_terms), arb(0)))
    return out


@dataclass
class TauVerdict:
    e_r: float
    tau: float
    e_i: float
    result: FeasibilityResult | None
    status: str


def appendix_feasible(alpha: float, p_max: int, e_r: float, tau_scan,
                      cfg: FeasibilityConfig | None = None,
                      prec: int = DEFAULT_PREC) -> list[TauVerdict]:
    """Feasibility over turning points; each tau maps to E_I = tau^3 + alpha tau."""
    EnergyPoint(e_r, 0.0)  # validates e_r > 0
    out = []
    for tau in tau_scan:
        tau = float(tau)
        e_i = tau ** 3 + alpha * tau
        mp = build_appendix_map(alpha, e_r, tau, p_max, prec)
        res = emm_feasible(mp, cfg)
        out.append(TauVerdict(e_r, tau, e_i, res, res.status.value))
    return out
