"""Exception hierarchy shared by every module."""


class EmmError(Exception):
    """Base class for bounding-engine failures."""


class InvalidEnergy(EmmError, ValueError):
    """Candidate energy violates E_R > 0."""


class SingularNormalization(EmmError):
    """The even-moment normalization system cannot be inverted reliably."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class EigFailure(EmmError):
    """Symmetric eigensolver did not converge."""


class LPError(EmmError):
    """The max-margin linear program could not be solved."""


class NoUsableRoot(EmmError):
    """No real turning point is far enough from the origin."""


class NotConverged(EmmError):
    """A reference eigenvalue failed its stability check."""


class NoBifurcationInWindow(EmmError):
    """The alpha window does not bracket a real/complex transition."""


class RefinementStalled(EmmError):
    """Undecided verdicts prevented certification of a rectangle edge."""
