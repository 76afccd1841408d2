"""Exception hierarchy shared by all padicdyn modules."""


class PadicDynError(Exception):
    """Base class for all certified-arithmetic failures."""


class InsufficientPrecision(PadicDynError):
    """A result is indistinguishable from zero, or would drop below the
    minimum certified precision.  The caller must raise the working
    precision and recompute."""


class Undecidable(PadicDynError):
    """A strict comparison or membership test cannot be decided from the
    stored digits / truncation order."""


class UnboundedTail(PadicDynError):
    """An operation cannot propagate a finite tail bound."""


class DomainError(PadicDynError):
    """Evaluation outside a reference ball, a pole, or a similar domain
    violation."""


class HenselError(PadicDynError):
    """No certified root is reachable from the supplied seed."""


class CertificateError(PadicDynError):
    """A named exponent inequality required by a construction failed.

    Instances carry the offending comparison so reports can name it."""

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        self.detail = detail
        super().__init__(f"{name}: {detail}" if detail else name)
