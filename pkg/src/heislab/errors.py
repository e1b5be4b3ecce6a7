"""Exception hierarchy shared by all heislab modules."""


class HeislabError(Exception):
    """Base class for every error raised by heislab."""


class InvalidLocalityError(HeislabError, ValueError):
    pass


class InvalidPauliError(HeislabError, ValueError):
    pass


class NotSimultaneouslyDiagonalError(HeislabError, ValueError):
    """Raised when a Pauli string is not a member of the commuting set S_b."""


class ShapeError(HeislabError, ValueError):
    pass


class UnsupportedModelError(HeislabError, ValueError):
    pass


class ContractViolation(HeislabError, ValueError):
    """An operator or argument violates a documented precondition."""


class ResourceGuardError(HeislabError, MemoryError):
    """A dense simulation would exceed the configured dimension guard."""


class TruncationError(ResourceGuardError):
    """Fock-space leakage exceeded the configured threshold."""


class UndefinedPhaseError(HeislabError, ValueError):
    pass


class EstimationFailure(HeislabError, RuntimeError):
    """A phase/frequency ladder lost consistency.

    ``stages`` carries the per-stage log accumulated before the failure and
    ``tag`` optionally identifies the (E_b, l, mode) task that failed.
    """

    def __init__(self, message, stages=None, tag=None):
        super().__init__(message)
        self.stages = list(stages or [])
        self.tag = tag


class ConfigError(HeislabError, ValueError):
    pass
