"""Exception types raised across the package."""


class CausalOedError(Exception):
    pass


class CycleError(CausalOedError, ValueError):
    pass


class SelfLoopError(CausalOedError, ValueError):
    pass


class LimitError(CausalOedError, ValueError):
    """Raised when an exhaustive routine is asked to go past its size cap."""


class ExhaustedError(CausalOedError):
    """No eligible intervention candidate remains."""


class DimensionError(CausalOedError, ValueError):
    pass


class UndefinedError(CausalOedError, ValueError):
    pass


class UnknownFixtureError(CausalOedError, KeyError):
    pass


class ParseError(CausalOedError, ValueError):
    pass


class ValidationError(CausalOedError, ValueError):
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
