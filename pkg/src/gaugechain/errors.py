"""Exception hierarchy shared by every module."""


class GaugeChainError(Exception):
    """Base class for all package errors."""


class CapacityError(GaugeChainError):
    """Requested Hilbert-space dimension exceeds the configured cap."""

    def __init__(self, dim, max_dim, suggestion=None):
        self.dim = dim
        self.max_dim = max_dim
        self.suggestion = suggestion
        msg = f"dimension {dim} exceeds capacity {max_dim}"
        if suggestion is not None:
            msg += f" (largest feasible n: {suggestion})"
        super().__init__(msg)


class DomainError(GaugeChainError, ValueError):
    """Argument outside the domain of an operation (bad support, short chain)."""


class SingularityError(GaugeChainError, ValueError):
    """Logarithm or inverse requested of an operator with non-positive spectrum."""


class HermiticityError(GaugeChainError, ValueError):
    pass


class GaugeViolationError(GaugeChainError, ValueError):
    """An interaction term is not invariant under the gauge action."""


class DecompositionError(GaugeChainError, RuntimeError):
    pass


class ModelError(GaugeChainError, ValueError):
    """Inputs that the theory guarantees to commute do not."""


class HypothesisError(GaugeChainError, ValueError):
    """An operation needs a central chemical potential and did not get one."""


class NonCommutingError(GaugeChainError, ValueError):
    pass


class ConfigError(GaugeChainError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
