"""Exception taxonomy shared by all mtrd modules."""


class MtrdError(Exception):
    """Base class for all library-specific errors."""


class NotPositiveDefinite(MtrdError):
    """A matrix required to be positive definite is not."""


class IndexOutOfRange(MtrdError):
    """A source label falls outside {1..L} or violates disjointness."""


class SingularObservation(MtrdError):
    """The observed block of a joint covariance is not invertible."""


class DimensionMismatch(MtrdError):
    """Operands disagree on the number of sources."""


class NotACover(MtrdError):
    """An encoder family fails to cover {1..L} or contains invalid sets."""


class InvalidDistortion(MtrdError):
    """A distortion argument is non-positive."""


class OutOfTrustedRange(MtrdError):
    """Distortion exceeds the radius where the small-d formulas are trusted."""


class DidNotConverge(MtrdError):
    """An iterative routine failed to reach its tolerance.

    Carries the last iterate and residual so sweeps can distinguish
    solver failure from genuine values.
    """

    def __init__(self, message, *, iterate=None, residual=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class GridTooCoarse(MtrdError):
    """A distortion grid is unsuitable for coefficient extrapolation."""


class SeriesDiverges(MtrdError):
    """The matrix series does not converge (spectral radius >= 1)."""


class SpecMismatch(MtrdError):
    """Stored test-channel parameters disagree with recomputation."""


class StructureViolation(MtrdError):
    """A conditional covariance entry that must vanish does not."""


class TargetUnreachable(MtrdError):
    """A requested distortion exceeds what the construction can reach."""


class UnsupportedTopology(MtrdError):
    """No exact rate computation is available for this cover."""
