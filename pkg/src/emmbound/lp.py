"""Max-margin linear program over a polytope, solved by a dense revised simplex.

The primal problem is

    maximize t  subject to  a_k . x - b_k >= t  for every row k,

with rows of unit norm, so t is the signed radius of the largest ball that
fits inside {x : a_k . x >= b_k}. The simplex method runs on its dual

    minimize -b . y  subject to  A^T y = 0,  sum(y) = 1,  y >= 0,

whose constraint matrix has only d + 1 rows. Appending a row to the primal
appends a column to the dual, so the previous optimal basis stays feasible
and warm-starts the next solve.
"""

from __future__ import annotations

import numpy as np

from .errors import LPError

PIVOT_TOL = 1e-11
REDUCED_COST_TOL = 1e-12


def _simplex(E: np.ndarray, f: np.ndarray, c: np.ndarray, basis: list[int],
             max_pivots: int) -> list[int]:
    """Minimize c.y over E y = f, y >= 0 from a feasible starting basis.

    Dantzig pricing, switching to Bland's rule after a run of degenerate pivots.
    """
    bland = False
    degenerate_run = 0
    for _ in range(max_pivots):
        B = E[:, basis]
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise LPError("basis matrix became singular") from None
        xB = Binv @ f
        pi = c[basis] @ Binv
        r = c - pi @ E
        r[basis] = 0.0
        cand = np.flatnonzero(r < -REDUCED_COST_TOL)
        if cand.size == 0:
            return basis
        q = int(cand[0]) if bland else int(cand[np.argmin(r[cand])])
        d = Binv @ E[:, q]
        pos = np.flatnonzero(d > PIVOT_TOL)
        if pos.size == 0:
            raise LPError("dual problem is unbounded")
        ratios = np.maximum(xB[pos], 0.0) / d[pos]
        theta = ratios.min()
        ties = pos[ratios <= theta + PIVOT_TOL]
        leave = int(min(ties, key=lambda i: basis[i]))
        if theta <= PIVOT_TOL:
            degenerate_run += 1
            bland = bland or degenerate_run > 10
        else:
            degenerate_run = 0
            bland = False
        basis[leave] = q
    raise LPError("pivot limit reached")


class MaxMarginLP:
    """Incremental max-margin LP in `dim` variables."""

    def __init__(self, dim: int):
        self.dim = dim
        self.rows: list[np.ndarray] = []
        self.rhs: list[float] = []
        self._basis: list[int] | None = None

    def add(self, a, b) -> None:
        """Append the constraint a.x >= b (rescaled to unit normal)."""
        a = np.asarray(a, dtype=float)
        norm = np.linalg.norm(a)
        if not np.isfinite(norm) or not np.isfinite(b):
            raise LPError("non-finite constraint")
        if norm == 0.0:
            # 0 >= b: either vacuous or an immediate contradiction of size -b
            a, norm = np.zeros(self.dim), 1.0
        self.rows.append(a / norm)
        self.rhs.append(float(b) / norm)

    def __len__(self):
        return len(self.rows)

    def _dual(self):
        A = np.array(self.rows)
        E = np.vstack([A.T, np.ones(len(self.rows))])
        f = np.zeros(self.dim + 1)
        f[-1] = 1.0
        return A, E, f, -np.array(self.rhs)

    def _phase_one(self, E, f, max_pivots):
        m, n = E.shape
        E1 = np.hstack([E, np.eye(m)])
        c1 = np.r_[np.zeros(n), np.ones(m)]
        basis = _simplex(E1, f, c1, list(range(n, n + m)), max_pivots)
        xB = np.linalg.solve(E1[:, basis], f)
        if c1[basis] @ xB > 1e-9:
            raise LPError("no dual-feasible point: the constraint normals do not surround the origin")
        # drive remaining artificials out of the basis
        for pos, j in enumerate(basis):
            if j < n:
                continue
            Binv = np.linalg.inv(E1[:, basis])
            row = Binv[pos] @ E
            for k in np.argsort(-np.abs(row)):
                if k not in basis and abs(row[k]) > 1e-9:
                    basis[pos] = int(k)
                    break
            else:
                raise LPError("redundant dual constraint")
        return basis

    def solve(self, max_pivots: int = 5000) -> tuple[float, np.ndarray]:
        """Return (margin, center) of the current polytope."""
        if len(self.rows) < self.dim + 1:
            raise LPError("need at least dim + 1 constraints for a bounded problem")
        A, E, f, c = self._dual()
        basis = self._basis
        if basis is None or len(basis) != self.dim + 1:
            basis = self._phase_one(E, f, max_pivots)
        basis = _simplex(E, f, c, list(basis), max_pivots)
        self._basis = basis
        # active primal rows: a_k . x - t = b_k
        M = np.hstack([A[basis], -np.ones((len(basis), 1))])
        w = np.linalg.solve(M, np.array(self.rhs)[basis])
        x, t = w[:-1], w[-1]
        # guard against round-off in the active set
        t = min(t, float(np.min(A @ x - np.array(self.rhs))))
        return t, x


def simplex_constraints(dim: int) -> list[tuple[np.ndarray, float]]:
    """Rows describing {x >= 0, sum(x) <= 1}."""
    rows = [(np.eye(dim)[i], 0.0) for i in range(dim)]
    rows.append((-np.ones(dim), -1.0))
    return rows


def lp_max_margin(cuts, dim: int = 5) -> tuple[float, np.ndarray]:
    """Max-margin point of the standard simplex intersected with the cuts.

    `cuts` are objects with attributes `a` and `b` meaning a.x >= b.
    """
    lp = MaxMarginLP(dim)
    for a, b in simplex_constraints(dim):
        lp.add(a, b)
    for cut in cuts:
        lp.add(cut.a, cut.b)
    return lp.solve()
