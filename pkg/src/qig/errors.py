"""Exception types raised by the library."""


class ValidationError(ValueError):
    """Input does not satisfy the structural invariants of its type."""


class DomainError(ValueError):
    """Input is structurally valid but the quantity is undefined (or infinite) there."""


class IntegrationError(RuntimeError):
    """A time integration left the admissible state space."""


class DivergentQFIError(ArithmeticError):
    """A Fisher-information term has a vanishing denominator with a finite numerator."""
