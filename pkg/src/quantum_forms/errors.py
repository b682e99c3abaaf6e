"""Exception hierarchy shared by all modules."""


class QuantumFormsError(Exception):
    """Base class for every error raised by the package."""


class NonFinite(QuantumFormsError, ValueError):
    pass


class AllMasked(QuantumFormsError):
    """Every grid point of the density lies below the node threshold."""


class NodeContamination(QuantumFormsError):
    pass


class StabilityViolation(QuantumFormsError, ValueError):
    pass


class NoConvergence(QuantumFormsError):
    pass


class InsufficientSnapshots(QuantumFormsError, ValueError):
    pass


class Overflow(QuantumFormsError, OverflowError):
    pass


class DriftUnsupported(QuantumFormsError, NotImplementedError):
    """Raised for a nonzero drift coefficient in the dual diffusion pair."""


class MomentOverflow(QuantumFormsError):
    """The density carries non-negligible mass at the edge of the periodic box."""


class NodeTrap(QuantumFormsError):
    pass


class DegenerateInterval(QuantumFormsError):
    pass


class ConfigError(QuantumFormsError, ValueError):
    """Invalid scenario configuration; ``path`` names the offending field."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
