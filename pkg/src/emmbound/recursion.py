"""Moment recursion, E_I constraint and the normalized affine missing-moment map.

All tables are built with python-flint ball arithmetic at a configurable
working precision and rounded to doubles only for the feasibility engine.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from flint import arb, arb_mat, ctx

from .errors import SingularNormalization
from .model import EnergyPoint, ModelParams

DEFAULT_PREC = 192
MAX_PREC = 4096
DEFAULT_COND_CAP = 1e12
RESIDUAL_TOL = 1e-20

# Seeds of the u-recursion and the independent columns left after u_3 is eliminated.
N_SEEDS = 7
INDEPENDENT = (0, 1, 2, 4, 5, 6)


def arb_to_numpy(m: arb_mat) -> np.ndarray:
    """Midpoints of a ball matrix as a float array."""
    return np.array([[float(m[i, j]) for j in range(m.ncols())] for i in range(m.nrows())])


def recursion_coefficients(p: int, params: ModelParams, energy: EnergyPoint) -> dict[int, arb]:
    """Coefficients c_k of the relation sum_k c_k u_{p+k} = 0 at index p.

    Offsets k run over {-3, -1, 1, 2, 3, 4, 5, 7}; evaluated in the current
    arb context precision.
    """
    a = arb(params.alpha)
    eps = arb(params.epsilon)
    er, ei = arb(energy.e_r), arb(energy.e_i)
    one = arb(1)
    pa = arb(p)
    return {
        -3: eps * eps * (pa - 3 * pa * pa / 2 + pa ** 3 / 2),
        -1: 2 * pa * eps * er,
        1: -2 * ei * ei / (p + 1),
        2: 2 * a * ei * (one / (p + 1) + one / (p + 2)),
        3: -2 * a * a / (p + 2),
        4: 2 * ei * (one / (p + 1) + one / (p + 4)),
        5: -2 * a * (one / (p + 2) + one / (p + 4)),
        7: -2 * one / (p + 4),
    }


@dataclass
class RawTransferTable:
    """Rows p = 0..p_max expressing u_p in the seeds u_0..u_6."""

    m_tilde: arb_mat
    p_max: int
    prec: int

    def to_numpy(self) -> np.ndarray:
        return arb_to_numpy(self.m_tilde)


def build_raw_transfer(params: ModelParams, energy: EnergyPoint, p_max: int,
                       prec: int = DEFAULT_PREC) -> RawTransferTable:
    if p_max < 10:
        raise ValueError(f"p_max must be at least 10, got {p_max}")
    with ctx.workprec(prec):
        rows = [[arb(int(i == j)) for j in range(N_SEEDS)] for i in range(N_SEEDS)]
        for p in range(0, p_max - 6):
            c = recursion_coefficients(p, params, energy)
            lead = c.pop(7)
            acc = [arb(0)] * N_SEEDS
            for k, ck in c.items():
                if p + k < 0:
                    continue  # coefficient vanishes there
                src = rows[p + k]
                for l in range(N_SEEDS):
                    acc[l] += ck * src[l]
            rows.append([-x / lead for x in acc])
        table = arb_mat(rows[: p_max + 1])
    return RawTransferTable(table, p_max, prec)


def ei_constrained_transfer(raw: RawTransferTable, params: ModelParams,
                            energy: EnergyPoint) -> arb_mat:
    """Seven-column table after substituting u_3 = E_I u_0 - alpha u_1."""
    m = raw.m_tilde
    with ctx.workprec(raw.prec):
        a, ei = arb(params.alpha), arb(energy.e_i)
        out = arb_mat(m.nrows(), N_SEEDS)
        for p in range(m.nrows()):
            out[p, 0] = m[p, 0] + ei * m[p, 3]
            out[p, 1] = m[p, 1] - a * m[p, 3]
            for l in (2, 4, 5, 6):
                out[p, l] = m[p, l]
    return out


def apply_ei_constraint(raw: RawTransferTable, params: ModelParams,
                        energy: EnergyPoint) -> arb_mat:
    """Column-compressed table Omega over the six independent seeds."""
    m = ei_constrained_transfer(raw, params, energy)
    out = arb_mat(m.nrows(), len(INDEPENDENT))
    for p in range(m.nrows()):
        for j, l in enumerate(INDEPENDENT):
            out[p, j] = m[p, l]
    return out


@dataclass
class AffineMomentMap:
    """u_p = gamma[p, 0] + sum_l gamma[p, l] * nu_l for the normalized even moments nu."""

    gamma: np.ndarray
    gamma_ext: arb_mat
    p_max: int
    params: ModelParams
    energy: EnergyPoint
    condition: float
    prec: int
    pipeline: str = "main"
    tau: float | None = None
    even_rows: tuple = field(default=(0, 2, 4, 6, 8, 10))

    @property
    def dim(self) -> int:
        return self.gamma.shape[1] - 1

    @property
    def hankel_order(self) -> int:
        return self.p_max // 2 + 1

    def moments(self, nu) -> np.ndarray:
        nu = np.asarray(nu, dtype=float)
        return self.gamma[:, 0] + self.gamma[:, 1:] @ nu

    def moments_ext(self, nu) -> list:
        """Moments in ball arithmetic; nu entries may be floats or arb."""
        with ctx.workprec(self.prec):
            v = arb_mat(self.dim + 1, 1, [arb(1)] + [arb(x) for x in nu])
            u = self.gamma_ext * v
            return [u[p, 0] for p in range(self.p_max + 1)]

    def to_json(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "alpha": self.params.alpha,
            "epsilon": self.params.epsilon,
            "e_r": self.energy.e_r,
            "e_i": self.energy.e_i,
            "p_max": self.p_max,
            "tau": self.tau,
            "condition": self.condition,
            "prec": self.prec,
            "gamma": self.gamma.tolist(),
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)


def _row_equilibrated_condition(a: arb_mat, a_inv: arb_mat) -> float:
    """Infinity-norm condition number of the row-equilibrated matrix."""
    n = a.nrows()
    scale = []
    for i in range(n):
        s = max(abs(float(a[i, j])) for j in range(n))
        scale.append(s if s > 0 else 1.0)
    norm_a = max(sum(abs(float(a[i, j])) for j in range(n)) / scale[i] for i in range(n))
    norm_inv = max(sum(abs(float(a_inv[i, j])) * scale[j] for j in range(n)) for i in range(n))
    return norm_a * norm_inv


def normalize_columns(omega: arb_mat, even_rows, prec: int,
                      cond_cap: float = DEFAULT_COND_CAP) -> tuple[arb_mat, float]:
    """Re-express omega in the even moments of `even_rows`, then eliminate the first.

    Returns the affine table (constant column first) and the condition estimate.
    """
    k = omega.ncols()
    if len(even_rows) != k:
        raise ValueError("need one normalization row per independent column")
    with ctx.workprec(prec):
        a = arb_mat([[omega[r, j] for j in range(k)] for r in even_rows])
        try:
            a_inv = a.inv()
        except ZeroDivisionError:
            raise SingularNormalization("normalization matrix is singular") from None
        cond = _row_equilibrated_condition(a, a_inv)
        if not math.isfinite(cond) or cond > cond_cap:
            raise SingularNormalization(
                f"normalization condition {cond:.3e} exceeds cap {cond_cap:.1e}", cond)
        g = omega * a_inv
        out = arb_mat(g.nrows(), k)
        for p in range(g.nrows()):
            out[p, 0] = g[p, 0]
            for l in range(1, k):
                out[p, l] = g[p, l] - g[p, 0]
        # Normalization rows are known exactly: u_0 = 1 - sum(nu), u_{2m} = nu_m.
        for m, r in enumerate(even_rows):
            for l in range(k):
                out[r, l] = arb(0)
            if m == 0:
                out[r, 0] = arb(1)
                for l in range(1, k):
                    out[r, l] = arb(-1)
            else:
                out[r, m] = arb(1)
    return out, cond


def normalize_transfer(omega: arb_mat, params: ModelParams, energy: EnergyPoint,
                       prec: int = DEFAULT_PREC,
                       cond_cap: float = DEFAULT_COND_CAP) -> AffineMomentMap:
    even = tuple(range(0, 2 * len(INDEPENDENT), 2))
    table, cond = normalize_columns(omega, even, prec, cond_cap)
    return AffineMomentMap(arb_to_numpy(table), table, omega.nrows() - 1, params, energy,
                           cond, prec, even_rows=even)


def recursion_residual(mp: AffineMomentMap, nu) -> float:
    """Largest relative residual of the u-recursion on the moments generated at nu."""
    u = mp.moments_ext(nu)
    worst = 0.0
    with ctx.workprec(mp.prec):
        for p in range(0, mp.p_max - 6):
            c = recursion_coefficients(p, mp.params, mp.energy)
            terms = [ck * u[p + k] for k, ck in c.items() if p + k >= 0]
            total = sum(terms, arb(0))
            size = sum((abs(t) for t in terms), arb(0))
            if float(size) == 0.0:
                continue
            worst = max(worst, float((abs(total) + total.rad()) / size))
    return worst


def _accuracy_ok(table: arb_mat, min_bits: int) -> bool:
    """Every ball radius is below 2^-min_bits times the largest entry of its row."""
    for i in range(table.nrows()):
        row = [table[i, j] for j in range(table.ncols())]
        scale = max(abs(float(x)) for x in row)
        worst = max(float(x.rad()) for x in row)
        if worst > scale * 2.0 ** (-min_bits):
            return False
    return True


def build_moment_map(params: ModelParams, energy: EnergyPoint, p_max: int,
                     prec: int = DEFAULT_PREC, cond_cap: float = DEFAULT_COND_CAP,
                     min_bits: int = 80, strict: bool = False) -> AffineMomentMap:
    """Full main pipeline with automatic precision escalation.

    Precision doubles until every table entry carries `min_bits` accurate bits.
    With `strict`, the recursion residual at the simplex centroid must also
    fall below RESIDUAL_TOL.
    """
    while True:
        raw = build_raw_transfer(params, energy, p_max, prec)
        omega = apply_ei_constraint(raw, params, energy)
        mp = normalize_transfer(omega, params, energy, prec, cond_cap)
        ok = _accuracy_ok(mp.gamma_ext, min_bits)
        if ok and strict:
            centroid = [1.0 / (mp.dim + 1)] * mp.dim
            ok = recursion_residual(mp, centroid) < RESIDUAL_TOL
        if ok:
            return mp
        if prec >= MAX_PREC:
            raise SingularNormalization(f"precision escalation exhausted at {prec} bits")
        prec *= 2


def closed_form_u8_u10(params: ModelParams, energy: EnergyPoint, nu_seed) -> tuple[float, float]:
    """u_8 and u_10 written out in the independent seeds (u0, u1, u2, u4, u5, u6)."""
    a, eps = params.alpha, params.epsilon
    er, ei = energy.e_r, energy.e_i
    u0, u1, u2, u4, u5, u6 = (float(x) for x in nu_seed)
    u8 = ((25 * a * ei ** 2 / 6 + 5 * eps * er) * u0
          - 25 * a ** 2 * ei / 6 * u1
          - 5 * ei ** 2 / 2 * u2
          - 5 * a ** 2 / 3 * u4
          + 7 * ei / 2 * u5
          - 8 * a / 3 * u6)
    u10 = ((-31 * a ** 2 * ei ** 2 / 2 + 21 * eps ** 2 / 2 - 12 * a * eps * er) * u0
           + (31 * a ** 3 * ei / 2 - 11 * ei ** 3) * u1
           + (45 * a * ei ** 2 / 2 + 21 * eps * er) * u2
           + (4 * a ** 3 + 12 * ei ** 2) * u4
           - 27 * a * ei / 2 * u5
           + 5 * a ** 2 * u6)
    return u8, u10


def det_ei(params: ModelParams, energy: EnergyPoint) -> float:
    """Determinant of the odd-moment block of the normalization system."""
    a, ei = params.alpha, energy.e_i
    return 2 * a ** 3 * ei ** 2 + 77 / 2 * ei ** 4
