"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class NlkgError(Exception):
    exit_code = 1
    kind = "error"

    def payload(self):
        return {"error": self.kind, "message": str(self), "exit_code": self.exit_code}


class InvalidInputError(NlkgError, ValueError):
    exit_code = 2
    kind = "invalid_input"


class InvalidTransformError(InvalidInputError):
    kind = "invalid_transform"


class NotInZError(InvalidInputError):
    """Matrix input with nonzero trace."""

    kind = "not_traceless"


class NotRankOneError(InvalidInputError):
    kind = "not_rank_one"


class InsufficientSamplesError(InvalidInputError):
    kind = "insufficient_samples"


class UnsupportedClassError(NlkgError):
    exit_code = 3
    kind = "unsupported_class"


class PreconditionError(UnsupportedClassError):
    """A reducer was called on a system outside its family."""

    kind = "wrong_family"


class NumericalFailureError(NlkgError, ArithmeticError):
    exit_code = 4
    kind = "numerical_failure"


class BlowUpError(NumericalFailureError):
    kind = "blow_up"

    def __init__(self, message, at=None, partial=None):
        super().__init__(message)
        self.at = at
        self.partial = partial

    def payload(self):
        out = super().payload()
        out["at"] = self.at
        return out


class InconsistentExtractionError(NumericalFailureError):
    kind = "inconsistent_extraction"


class DegenerateTangencyError(NumericalFailureError):
    kind = "degenerate_tangency"


class CertificationError(NumericalFailureError):
    kind = "certification_failed"


class SupportViolationError(NumericalFailureError):
    kind = "support_violation"
