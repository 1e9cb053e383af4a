"""Exception types shared across the package."""


class EntroscopeError(Exception):
    pass


class InvalidParameterError(EntroscopeError, ValueError):
    """Parameter outside its family's admissible range, or a bad argument."""


class DerivativeUndefinedError(EntroscopeError, ValueError):
    """Tent-map derivative requested at the turning point, or past a zero hit."""


class EscapingPointError(EntroscopeError, ValueError):
    """Initial point outside the invariant interval."""


class CriticalHitError(EntroscopeError, ValueError):
    """Derivative along the orbit vanishes (orbit hit the turning point)."""


class InsufficientPrecisionError(EntroscopeError, RuntimeError):
    """Symbolic data ambiguous too early for the requested computation.

    Carries the partial entropy bracket (lo, hi) when one is available.
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class NotApplicableError(EntroscopeError, ValueError):
    """A check's hypothesis fails for the given input (reported, not hidden)."""
