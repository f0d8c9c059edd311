"""Hankel positivity feasibility for one candidate energy.

The question is whether some normalized missing-moment vector nu in the
simplex makes the Hankel matrix H(nu) = [u_{i+j}] positive semidefinite.
The set of such nu is convex, so a cutting-plane loop decides it: the
max-margin LP proposes a point, and a negative eigenvector v of H gives the
separating half-space v^T H(nu) v >= 0, which is affine in nu.

At high moment order the feasible set is a sliver many orders of magnitude
thinner than the simplex and H is badly scaled. The loop therefore works in
a moving frame nu = c + R z with a congruence H -> T^T H T, both refreshed
from the current point whenever progress stalls. The frame pieces, the cuts
and the final PSD certificate are all computed in ball arithmetic from the
extended-precision map; only the small eigenproblems and the LP run in
double precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from flint import arb, arb_mat, arb_poly, ctx

from .errors import EigFailure, LPError
from .lp import MaxMarginLP, lp_max_margin, simplex_constraints
from .recursion import AffineMomentMap, arb_to_numpy

__all__ = [
    "HankelMatrix", "LinearCut", "Verdict", "FeasibilityConfig", "FeasibilityResult",
    "assemble_hankel", "min_eig_and_cut", "lp_max_margin", "emm_feasible", "certify_psd",
]

DIAG_DELTA = 1e-30


class Verdict(str, Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    UNDECIDED = "Undecided"
    MAP_SINGULAR = "MapSingular"

    @property
    def keeps(self) -> bool:
        """Whether a scan treats this verdict as possibly containing an eigenvalue."""
        return self in (Verdict.FEASIBLE, Verdict.UNDECIDED)


@dataclass
class HankelMatrix:
    h: np.ndarray

    @property
    def order(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class LinearCut:
    """Half-space a . nu >= b."""

    a: np.ndarray
    b: float

    @staticmethod
    def normalized(a, b) -> "LinearCut":
        a = np.asarray(a, dtype=float)
        n = np.linalg.norm(a)
        if n > 0:
            return LinearCut(a / n, float(b) / n)
        return LinearCut(a, float(b))

    def slack(self, nu) -> float:
        return float(self.a @ np.asarray(nu, dtype=float) - self.b)


@dataclass
class FeasibilityConfig:
    tol_psd: float = 1e-10
    tol_margin: float = 1e-12
    max_iter: int = 500
    recondition_ratio: float = 1e-3
    max_stages: int = 40
    trace: bool = False


@dataclass
class FeasibilityResult:
    status: Verdict
    iterations: int
    min_eig: float
    witness: np.ndarray | None = None
    certificate: list[LinearCut] = field(default_factory=list)
    frame_center: np.ndarray | None = None
    frame_basis: np.ndarray | None = None
    stages: int = 0
    trace: list[dict] = field(default_factory=list)

    def write_trace(self, path) -> None:
        with open(path, "w") as fh:
            for rec in self.trace:
                fh.write(json.dumps(rec) + "\n")

    def certificate_margin(self) -> float:
        """Re-solve the LP defined by the certificate in its own frame."""
        lp = MaxMarginLP(len(self.frame_center))
        for cut in self.certificate:
            lp.add(cut.a, cut.b)
        return lp.solve()[0]


def _hankel_from(values, n: int) -> np.ndarray:
    idx = np.add.outer(np.arange(n), np.arange(n))
    return np.asarray(values, dtype=float)[idx]


def _hankel_arb(values, n: int) -> arb_mat:
    return arb_mat(n, n, [values[i + j] for i in range(n) for j in range(n)])


def assemble_hankel(mp: AffineMomentMap, nu) -> HankelMatrix:
    u = mp.moments(nu)
    return HankelMatrix(_hankel_from(u, mp.hankel_order))


def _eigh(h: np.ndarray):
    try:
        return np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigFailure(str(exc)) from None


def _cut_from_vector(mp: AffineMomentMap, v) -> tuple[list, arb]:
    """Coefficients (a, b) in ball arithmetic of v^T H(nu) v >= 0 written as a . nu >= b."""
    with ctx.workprec(mp.prec):
        q = arb_poly([arb(float(x)) for x in v]) ** 2
        deg = q.degree()
        qv = arb_mat(1, mp.p_max + 1, [q[p] if p <= deg else arb(0) for p in range(mp.p_max + 1)])
        r = qv * mp.gamma_ext
        return [r[0, l] for l in range(1, mp.dim + 1)], -r[0, 0]


def _scaling(diag: np.ndarray) -> np.ndarray:
    return 1.0 / np.sqrt(np.abs(diag) + DIAG_DELTA)


def min_eig_and_cut(h: HankelMatrix, mp: AffineMomentMap, tol_psd: float = 1e-10):
    """Smallest eigenvalue of the diagonally scaled H and a separating cut when it is negative."""
    d = _scaling(np.diag(h.h))
    scaled = d[:, None] * h.h * d[None, :]
    lam, vec = _eigh(scaled)
    s = max(1.0, np.trace(scaled) / h.order)
    if lam[0] >= -tol_psd * s:
        return float(lam[0]), None
    a, b = _cut_from_vector(mp, d * vec[:, 0])
    return float(lam[0]), LinearCut.normalized([float(x) for x in a], float(b))


def certify_psd(mp: AffineMomentMap, nu, tol_psd: float = 1e-10) -> tuple[bool, float]:
    """Ball-arithmetic LDL^T test of D H D + tol_psd * s * I at nu.

    Returns (certified, lambda_min of D H D computed from the rounded matrix).
    """
    u = mp.moments_ext(nu)
    n = mp.hankel_order
    with ctx.workprec(mp.prec):
        diag = [u[2 * i] for i in range(n)]
        d = [1 / (abs(x) + arb(DIAG_DELTA)).sqrt() for x in diag]
        A = [[u[i + j] * d[i] * d[j] for j in range(n)] for i in range(n)]
        dense = np.array([[float(x) for x in row] for row in A])
        s = max(1.0, float(np.trace(dense)) / n)
        shift = arb(tol_psd * s)
        for i in range(n):
            A[i][i] += shift
        ok = True
        for k in range(n):
            piv = A[k][k]
            if not piv > 0:
                ok = False
                break
            for i in range(k + 1, n):
                f = A[i][k] / piv
                for j in range(k + 1, i + 1):
                    A[i][j] -= f * A[j][k]
    lam = float(_eigh(dense)[0][0])
    return ok, lam


class _Frame:
    """Affine frame nu = c + R z with Hankel congruence T and float pieces K."""

    def __init__(self, mp: AffineMomentMap, center: list, R: np.ndarray, T: np.ndarray):
        self.mp, self.center, self.R, self.T = mp, center, R, T
        self.center_f = np.array([float(x) for x in center])
        n, d = mp.hankel_order, mp.dim
        with ctx.workprec(mp.prec):
            self.R_ext = arb_mat(R.tolist())
            Ta = arb_mat(T.tolist())
            TaT = Ta.transpose()
            u = mp.moments_ext(center)
            pieces = [arb_to_numpy(TaT * _hankel_arb(u, n) * Ta)]
            lin = arb_mat([[mp.gamma_ext[p, l] for l in range(1, d + 1)]
                           for p in range(mp.p_max + 1)])
            UR = lin * self.R_ext
            for j in range(d):
                col = [UR[p, j] for p in range(mp.p_max + 1)]
                pieces.append(arb_to_numpy(TaT * _hankel_arb(col, n) * Ta))
        self.K = np.array(pieces)

    def point(self, z) -> list:
        with ctx.workprec(self.mp.prec):
            zr = arb_mat(len(z), 1, [arb(float(x)) for x in z])
            step = self.R_ext * zr
            return [self.center[l] + step[l, 0] for l in range(len(self.center))]

    def matrix(self, z) -> np.ndarray:
        return self.K[0] + np.tensordot(z, self.K[1:], 1)

    def local(self, a_ext, b_ext) -> tuple[np.ndarray, float]:
        """Express a . nu >= b as a' . z >= b' in this frame."""
        with ctx.workprec(self.mp.prec):
            d = len(a_ext)
            av = arb_mat(1, d, a_ext)
            ah = av * self.R_ext
            shift = sum((a_ext[l] * self.center[l] for l in range(d)), arb(0))
            return np.array([float(ah[0, j]) for j in range(d)]), float(b_ext - shift)


def _initial_frame(mp: AffineMomentMap) -> _Frame:
    d, n = mp.dim, mp.hankel_order
    with ctx.workprec(mp.prec):
        center = [arb(1) / (d + 1)] * d
    weight = np.abs(mp.gamma[0:2 * n:2]).sum(axis=1)
    T = np.diag(1.0 / np.sqrt(weight + DIAG_DELTA))
    return _Frame(mp, center, np.eye(d), T)


def _recondition(mp: AffineMomentMap, frame: _Frame, nu: list) -> _Frame:
    """New frame centred at nu that whitens H(nu) and the sensitivity of H to z."""
    n, d = mp.hankel_order, mp.dim
    with ctx.workprec(mp.prec):
        Ta = arb_mat(frame.T.tolist())
        Kc = arb_to_numpy(Ta.transpose() * _hankel_arb(mp.moments_ext(nu), n) * Ta)
    lam, Q = _eigh(Kc)
    floor = np.abs(lam).max() * 1e-13
    T = frame.T @ Q @ np.diag(1.0 / np.sqrt(np.maximum(np.abs(lam), floor)))
    probe = _Frame(mp, nu, np.eye(d), T)
    gram = np.einsum("aij,bij->ab", probe.K[1:], probe.K[1:])
    ew, ev = _eigh(gram)
    ew = np.maximum(ew, ew.max() * 1e-12)
    R = ev @ np.diag(1.0 / np.sqrt(ew))
    return _Frame(mp, nu, R, T)


def emm_feasible(mp: AffineMomentMap, cfg: FeasibilityConfig | None = None) -> FeasibilityResult:
    cfg = cfg or FeasibilityConfig()
    d, n = mp.dim, mp.hankel_order
    cuts_ext: list[tuple[list, arb]] = []
    with ctx.workprec(mp.prec):
        # simplex facets nu_l >= 0 and -sum(nu) >= -1, carried like cuts
        for a, b in simplex_constraints(d):
            cuts_ext.append(([arb(float(x)) for x in a], arb(b)))

    def new_lp(fr: _Frame) -> MaxMarginLP:
        lp = MaxMarginLP(d)
        for a, b in cuts_ext:
            lp.add(*fr.local(a, b))
        return lp

    frame = _initial_frame(mp)
    lp = new_lp(frame)
    stage_margin = None
    stages = 0
    trace: list[dict] = []
    lam_rel = float("nan")
    for it in range(1, cfg.max_iter + 1):
        try:
            margin, z = lp.solve()
        except LPError:
            # numerically degenerate frame: rebuild from the current centre
            if stages >= cfg.max_stages:
                break
            stages += 1
            frame = _initial_frame(mp) if stages == 1 else _recondition(mp, frame, frame.center)
            lp = new_lp(frame)
            stage_margin = None
            continue
        if stage_margin is None:
            stage_margin = margin
        if margin < -cfg.tol_margin:
            if cfg.trace:
                trace.append({"iter": it, "stage": stages, "margin": margin})
            cert = [LinearCut(row.copy(), rhs) for row, rhs in zip(lp.rows, lp.rhs)]
            return FeasibilityResult(Verdict.INFEASIBLE, it, lam_rel, None, cert,
                                     frame.center_f, frame.R, stages, trace)
        nu = frame.point(z)
        Kz = frame.matrix(z)
        lam, V = _eigh(Kz)
        scale = max(1.0, np.trace(Kz) / n)
        lam_rel = float(lam[0] / scale)
        if cfg.trace:
            trace.append({"iter": it, "stage": stages, "margin": margin, "lambda_min": lam_rel})
        if lam_rel >= -cfg.tol_psd:
            ok, lam_cert = certify_psd(mp, nu, cfg.tol_psd)
            if ok:
                witness = np.array([float(x) for x in nu])
                return FeasibilityResult(Verdict.FEASIBLE, it, lam_cert, witness, [],
                                         frame.center_f, frame.R, stages, trace)
        a_ext, b_ext = _cut_from_vector(mp, frame.T @ V[:, 0])
        with ctx.workprec(mp.prec):
            slack = float(sum((a_ext[l] * nu[l] for l in range(d)), arb(0)) - b_ext)
        cuts_ext.append((a_ext, b_ext))
        stalled = margin < cfg.recondition_ratio * stage_margin
        if slack >= 0 or stalled:
            if stages >= cfg.max_stages:
                break
            stages += 1
            frame = _recondition(mp, frame, nu)
            lp = new_lp(frame)
            stage_margin = None
        else:
            lp.add(*frame.local(a_ext, b_ext))
    return FeasibilityResult(Verdict.UNDECIDED, it, lam_rel, None, [],
                             frame.center_f, frame.R, stages, trace)
