"""Exception types shared across the package."""


class InvalidInput(ValueError):
    """Malformed arguments: out-of-range vertices, mismatched degree sums, etc."""


class BudgetExhausted(RuntimeError):
    """A randomized or search procedure ran out of its attempt/node budget."""

    def __init__(self, message, attempts, acceptance_rate=None):
        super().__init__(message)
        self.attempts = attempts
        self.acceptance_rate = acceptance_rate


class CompletionInfeasible(RuntimeError):
    """No degree admits a regular completion of some slice."""

    def __init__(self, message, slice_index, lineage=None):
        super().__init__(message)
        self.slice_index = slice_index
        self.lineage = lineage


class ParametersTooSmall(ValueError):
    pass


class DegenerateInstance(ValueError):
    pass


class InvalidRange(ValueError):
    pass
