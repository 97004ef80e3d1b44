"""Exception types shared across the package."""


class UnknownVariableError(NameError):
    """A variable name is not part of the distribution."""


class ArgumentError(ValueError):
    """Arguments are inconsistent (overlapping sets, missing cells, ...)."""


class ZeroMassError(ValueError):
    """Conditioning on an event of probability zero."""


class ValidationError(ValueError):
    """A channel/scheme pair failed structural validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{v.code}: {v.message}" for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")


class CapacityError(RuntimeError):
    """A tensor or codebook would exceed the configured size cap."""

    def __init__(self, message, size=None):
        super().__init__(message)
        self.size = size


class TemplateError(ValueError):
    """A channel does not match the structure a specialized region requires."""


class EmptyResult(RuntimeError):
    """No feasible scheme was found within the search budget."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
