class FSPairError(Exception):
    """Base class for every error raised by the summation_pairs package."""


class DomainError(FSPairError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class SchemaError(FSPairError, ValueError):
    """A pair file does not match the expected schema."""

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class AntipodalityError(SchemaError):
    """a(-lambda) != conj(a(lambda)) or mu not real on a pair flagged antipodal."""


class QuadratureError(FSPairError):
    """Requested tolerance was not reached; carries the best estimate found."""

    def __init__(self, message, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(message)


class FitError(FSPairError):
    """Least-squares fit of Q failed (ill-conditioned or residual too large)."""
