"""Exception types shared across the package."""


class TaperodError(Exception):
    """Base class for all library errors."""


class NotSkewSymmetric(TaperodError):
    """Matrix handed to vee() is not skew-symmetric within tolerance."""


class OutOfDomain(TaperodError):
    """Arc length outside [0, length]."""


class OffsetInsideBackbone(TaperodError):
    """Tendon offset does not clear the backbone surface."""


class SingularStiffness(TaperodError):
    """A stiffness diagonal entry is zero or negative."""


class ZeroTangent(TaperodError):
    """Tendon path tangent vanished; the force model is undefined."""


class SingularSystem(TaperodError):
    """The 6x6 actuated system is numerically singular."""


class NoConvergence(TaperodError):
    """Shooting iteration failed to meet the residual tolerance.

    Carries the best candidate solution found, if any.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NotConverged(TaperodError):
    """Operation requires a converged solution."""


class NonUnimodal(TaperodError):
    """Coarse cost scan found multiple separated minima.

    Carries the scanned (alpha, cost) samples.
    """

    def __init__(self, message, alphas=None, costs=None):
        super().__init__(message)
        self.alphas = alphas
        self.costs = costs


class DegenerateGeometry(TaperodError):
    """Point sets too degenerate for rigid registration."""


class EmptyDataset(TaperodError):
    """Dataset operation left no usable samples."""


class IoFailure(TaperodError):
    """File could not be read, parsed or written."""
