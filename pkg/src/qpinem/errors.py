"""Exception types shared across the package."""


class QPinemError(Exception):
    pass


class DomainError(QPinemError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class CapacityError(QPinemError, ValueError):
    """Index or truncation beyond a precomputed table."""


class UndefinedError(QPinemError, ValueError):
    """Quantity undefined for the given input (e.g. a ratio with zero denominator)."""


class ValidationError(QPinemError, ValueError):
    """Invalid user configuration."""


class NumericalError(QPinemError, RuntimeError):
    """A numerical procedure failed to reach its accuracy contract."""


class IntegrationError(NumericalError):
    pass


class StiffnessError(IntegrationError):
    pass
