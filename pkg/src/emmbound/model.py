"""Hamiltonian parameters and candidate energies."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidEnergy


@dataclass(frozen=True)
class ModelParams:
    """Instance of H = -eps d^2/dx^2 + i(x^3 + alpha x)."""

    alpha: float
    epsilon: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class EnergyPoint:
    """Candidate complex energy E = e_r + i e_i."""

    e_r: float
    e_i: float

    def __post_init__(self):
        if not (math.isfinite(self.e_r) and math.isfinite(self.e_i)):
            raise InvalidEnergy(f"energy must be finite, got ({self.e_r}, {self.e_i})")
        if self.e_r <= 0:
            raise InvalidEnergy(f"E_R must be positive, got {self.e_r}")

    def conjugate(self) -> "EnergyPoint":
        return EnergyPoint(self.e_r, -self.e_i)

    def __complex__(self):
        return complex(self.e_r, self.e_i)
