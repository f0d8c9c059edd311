"""Independent reference eigenvalues from a harmonic-oscillator basis.

The Hamiltonian -eps d^2/dx^2 + i(x^3 + alpha x) is expanded in oscillator
eigenfunctions of length scale L. Its matrix is complex symmetric, and the
diagonal similarity H'_{mn} = i^{n-m} H_{mn} makes it real, so eigenvalues
come out exactly real or as exact conjugate pairs. Roots of det(H - E) are
polished by Newton's method with deflation and accepted when they are stable
under doubling of the basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from .errors import NoBifurcationInWindow, NotConverged

STABILITY_TOL = 1e-6
COMPLEX_TOL = 1e-7


@dataclass(frozen=True)
class SpectralConfig:
    basis_dim: int = 64
    basis_scale: float = 1.0
    newton_tol: float = 1e-10
    max_newton: int = 50
    auto_tune: bool = True
    scale_with_epsilon: bool = True

    def __post_init__(self):
        if self.basis_dim < 8:
            raise ValueError("basis_dim must be at least 8")
        if not self.basis_scale > 0:
            raise ValueError("basis_scale must be positive")


@dataclass
class ReferenceEnergy:
    e: complex
    state_index: int
    converged: bool
    basis_dim_used: int
    alpha: float = 0.0

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "state_index": self.state_index, "re": self.e.real,
                "im": self.e.imag, "converged": self.converged,
                "basis_dim_used": self.basis_dim_used}


def _pieces(epsilon: float, n: int, length: float):
    m = n + 4  # x^3 couples states three apart; build larger, then truncate
    a = np.diag(np.sqrt(np.arange(1, m)), 1)
    x = length * (a + a.T) / math.sqrt(2)
    d = (a - a.T) / (length * math.sqrt(2))
    kinetic = -epsilon * (d @ d)
    x3 = x @ x @ x
    return kinetic[:n, :n], x3[:n, :n], x[:n, :n]


def discretize(alpha: float, epsilon: float = 1.0, cfg: SpectralConfig | None = None) -> np.ndarray:
    """Complex symmetric matrix of the Hamiltonian in the oscillator basis."""
    cfg = cfg or SpectralConfig()
    length = cfg.basis_scale * (epsilon ** 0.2 if cfg.scale_with_epsilon else 1.0)
    kin, x3, x = _pieces(epsilon, cfg.basis_dim, length)
    return kin + 1j * (x3 + alpha * x)


def real_form(h: np.ndarray) -> np.ndarray:
    """Real matrix similar to the complex symmetric Hamiltonian matrix."""
    n = h.shape[0]
    idx = np.arange(n)
    phase = 1j ** ((idx[None, :] - idx[:, None]) % 4)
    out = phase * h
    return out.real.copy()


def _eigs(alpha, epsilon, cfg):
    return np.linalg.eigvals(real_form(discretize(alpha, epsilon, cfg)))


def _newton(a: np.ndarray, e0: complex, known: list[complex], cfg: SpectralConfig) -> tuple[complex, bool]:
    """Newton on det(a - E) with the known roots divided out."""
    real = abs(np.imag(e0)) == 0.0
    e = float(np.real(e0)) if real else complex(e0)
    eye = np.eye(a.shape[0])
    for _ in range(cfg.max_newton):
        try:
            lu = sla.lu_factor(a - e * eye, check_finite=False)
        except (ValueError, np.linalg.LinAlgError):
            return e, True  # exactly singular: E is an eigenvalue
        inv_trace = np.trace(sla.lu_solve(lu, eye, check_finite=False))
        g = -inv_trace - sum(1.0 / (e - k) for k in known if k != e)
        if g == 0:
            break
        step = 1.0 / g
        if real:
            step = float(np.real(step))
        e = e - step
        if abs(step) <= cfg.newton_tol * max(1.0, abs(e)):
            return e, True
    return e, False


def tune_scale(alpha: float, epsilon: float = 1.0, cfg: SpectralConfig | None = None,
               grid=(0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.25, 1.4)) -> float:
    """Basis scale where the lowest eigenvalue is least sensitive to the scale."""
    cfg = cfg or SpectralConfig()
    lows = []
    for s in grid:
        w = _eigs(alpha, epsilon, replace(cfg, basis_scale=s))
        lows.append(w[np.argmin(np.abs(w))])
    best, best_val = cfg.basis_scale, math.inf
    for k in range(1, len(grid) - 1):
        val = abs(lows[k + 1] - lows[k - 1])
        if val < best_val:
            best, best_val = grid[k], val
    return best


def _polish(alpha, epsilon, cfg, seeds):
    a = real_form(discretize(alpha, epsilon, cfg))
    found, ok = [], []
    for s in seeds:
        e, conv = _newton(a, s, found, cfg)
        found.append(e)
        ok.append(conv)
    return found, ok


def reference_energies(alpha: float, n_states: int = 2, cfg: SpectralConfig | None = None,
                       epsilon: float = 1.0, raise_on_failure: bool = True) -> list[ReferenceEnergy]:
    """Lowest n_states eigenvalues ordered by real part (conjugate partners listed after)."""
    if n_states < 1:
        raise ValueError("n_states must be positive")
    cfg = cfg or SpectralConfig()
    if cfg.auto_tune:
        cfg = replace(cfg, basis_scale=tune_scale(alpha, epsilon, cfg), auto_tune=False)
    big = replace(cfg, basis_dim=2 * cfg.basis_dim)
    w_small, w_big = _eigs(alpha, epsilon, cfg), _eigs(alpha, epsilon, big)
    # keep eigenvalues reproduced by the doubled basis, upper half-plane representatives
    stable = [e for e in w_small
              if np.imag(e) >= 0 and np.min(np.abs(w_big - e)) < 1e-4 * max(1.0, abs(e))]
    stable.sort(key=lambda e: (np.real(e), np.imag(e)))
    seeds = []
    for e in stable:
        seeds.append(e)
        if np.imag(e) != 0:
            seeds.append(np.conj(e))
        if len(seeds) >= n_states:
            break
    seeds = seeds[:n_states]
    if len(seeds) < n_states:
        raise NotConverged(f"only {len(seeds)} stable eigenvalues found")
    e_small, _ = _polish(alpha, epsilon, cfg, seeds)
    e_big, conv = _polish(alpha, epsilon, big, e_small)
    out = []
    for k, (es, eb, c) in enumerate(zip(e_small, e_big, conv)):
        converged = bool(c and abs(eb - es) < STABILITY_TOL)
        out.append(ReferenceEnergy(complex(eb), k, converged, big.basis_dim, alpha))
        if raise_on_failure and not converged:
            raise NotConverged(f"state {k} at alpha={alpha}: {es} vs {eb}")
    return out


def scaling_check(alpha: float, epsilon: float, cfg: SpectralConfig | None = None,
                  state: int = 0) -> float:
    """|E(alpha, eps) - eps^(3/5) E(alpha eps^(-2/5), 1)| for one tracked state."""
    n = state + 1
    lhs = reference_energies(alpha, n, cfg, epsilon)[state].e
    rhs = reference_energies(alpha * epsilon ** -0.4, n, cfg, 1.0)[state].e
    return float(abs(lhs - epsilon ** 0.6 * rhs))


def pair_is_complex(alpha: float, cfg: SpectralConfig | None = None) -> bool:
    """Whether the two lowest eigenvalues form a complex-conjugate pair."""
    cfg = cfg or SpectralConfig(auto_tune=False)
    w = _eigs(alpha, 1.0, cfg)
    low = sorted(w, key=lambda e: (np.real(e), abs(np.imag(e))))[:2]
    return max(abs(np.imag(e)) for e in low) > COMPLEX_TOL


def critical_alpha(window: tuple[float, float], cfg: SpectralConfig | None = None,
                   tol: float = 1e-5) -> tuple[float, float]:
    """Bisection bracket for the coupling where the lowest pair turns complex."""
    cfg = cfg or SpectralConfig(auto_tune=False)
    lo, hi = sorted(window)
    f_lo, f_hi = pair_is_complex(lo, cfg), pair_is_complex(hi, cfg)
    if f_lo == f_hi:
        raise NoBifurcationInWindow(f"pair is {'complex' if f_lo else 'real'} at both ends")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pair_is_complex(mid, cfg) == f_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi
