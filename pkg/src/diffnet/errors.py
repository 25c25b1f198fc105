"""Exception hierarchy shared across the library."""


class DiffnetError(Exception):
    """Base class for all diffnet errors."""


class DisconnectedGraph(DiffnetError):
    """The communication graph is not a single connected component."""


class IndexOutOfRange(DiffnetError):
    """A node index falls outside 1..N."""


class NonPositiveSignalPower(DiffnetError):
    """SNR conversion requested for a model with no output power."""


class InvalidParameters(DiffnetError):
    """A parameter violates its documented range."""


class DimensionMismatch(DiffnetError):
    """Vector or matrix shapes are inconsistent."""


class NonPositiveBandwidth(DiffnetError):
    """Kernel bandwidth must be strictly positive."""


class EmptyBuffer(DiffnetError):
    """A kernel density was requested over an empty estimate buffer."""


class DegenerateDenominator(DiffnetError):
    """Kernel normalisation fully underflowed; the prior term carries no signal."""


class DeltaOutOfRange(DiffnetError):
    """The mean-square theory requires the pseudo-Huber steepness below 1/sqrt(2)."""


class NoConvergence(DiffnetError):
    """Iterative eigenvalue estimation hit its iteration cap."""


class UnstableSystem(DiffnetError):
    """The mean transition matrix has spectral radius >= 1."""


class SingularSolve(DiffnetError):
    """The steady-state linear solve failed to reach its residual tolerance."""


class InsufficientPilot(DiffnetError):
    """The pilot trace is too short to estimate buffer statistics."""


class ConfigError(DiffnetError):
    """An experiment configuration failed validation."""


class PartialFailure(DiffnetError):
    """One or more Monte-Carlo realizations raised; carries the failed indices."""

    def __init__(self, failures):
        self.failures = list(failures)
        indices = ", ".join(str(i) for i, _ in self.failures)
        super().__init__(f"realizations failed: [{indices}]")
