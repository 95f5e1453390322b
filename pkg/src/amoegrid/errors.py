"""Exception types shared across the package."""


class AmoegridError(Exception):
    """Base class for all package errors."""


class InvalidStructureError(AmoegridError):
    """Raised when a node set is not a valid amoebot structure."""


class DomainError(AmoegridError):
    """Raised when an operation is applied outside its domain."""


class ContractViolation(AmoegridError):
    """Raised when an internal invariant the algorithm relies on fails."""


class SimulationFault(AmoegridError):
    """Raised when a protocol hands the simulator an inconsistent update."""


class RoundBudgetExceeded(AmoegridError):
    """Raised when a protocol does not terminate within its round budget."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
