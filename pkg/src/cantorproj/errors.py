"""Exception types shared across the package."""


class GuardError(RuntimeError):
    """A configured resource guard (depth, family size, horizon) was exceeded."""


class DepthGuardError(GuardError):
    pass


class FamilyGuardError(GuardError):
    pass


class ExtractionInvariantError(AssertionError):
    """An extracted grid square does not fit inside its covering ball."""


class ParameterWarning(UserWarning):
    """Parameters are admissible but make an estimate degenerate."""
