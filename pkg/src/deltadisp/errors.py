"""Exception types. Every error carries a short machine-readable ``code``."""


class DeltaDispError(Exception):
    code = "ERROR"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def __str__(self) -> str:
        return f"[{self.code}] {super().__str__()}"


class ConfigError(DeltaDispError, ValueError):
    """Invalid interaction configuration or unparsable config file."""

    code = "CONFIG-PARSE"


class DomainError(DeltaDispError, ValueError):
    """Input outside the domain of an operation (wrong sign, wrong regime, ...)."""


class SingularPointError(DeltaDispError, ArithmeticError):
    code = "SINGULAR-POINT"


class ResolutionError(DeltaDispError, RuntimeError):
    """Requested accuracy cannot be met with the available discretization."""


class ConvergenceError(DeltaDispError, RuntimeError):
    code = "NO-CONVERGENCE"
