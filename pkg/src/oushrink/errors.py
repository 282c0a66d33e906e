"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a mathematical function."""


class ModelError(ValueError):
    """A model definition violates its invariants (e.g. a covariance is not SPD)."""


class PreconditionError(ValueError):
    """An operation was called outside its documented preconditions."""
