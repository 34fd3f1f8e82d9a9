"""Error taxonomy: caller mistakes, bad mathematical inputs, failed numerics."""


class UsageError(ValueError):
    """Malformed call: wrong degree, mismatched dimensions, unknown option."""


class DomainError(ValueError):
    """Input outside the mathematical domain (non-SPD metric, torsion, ...)."""


class NumericError(RuntimeError):
    """A numerical procedure failed to meet its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message if residual is None else f"{message} (residual={residual:.3e})")
        self.residual = residual
