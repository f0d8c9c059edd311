"""Rigorous moment-method bounds on the complex eigenvalues of H = p^2 + i x^3 + i alpha x."""

__version__ = "0.1.0"

from .errors import (EigFailure, EmmError, InvalidEnergy, LPError, NoBifurcationInWindow,
                     NotConverged, NoUsableRoot, RefinementStalled, SingularNormalization)
from .model import EnergyPoint, ModelParams
from .positivity import FeasibilityConfig, FeasibilityResult, LinearCut, Verdict, emm_feasible
from .recursion import AffineMomentMap, build_moment_map

__all__ = [
    "EnergyPoint", "ModelParams", "AffineMomentMap", "build_moment_map", "FeasibilityConfig",
    "FeasibilityResult", "LinearCut", "Verdict", "emm_feasible", "EmmError", "InvalidEnergy",
    "SingularNormalization", "EigFailure", "LPError", "NoUsableRoot", "NotConverged",
    "NoBifurcationInWindow", "RefinementStalled", "__version__",
]
