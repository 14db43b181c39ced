class NumericalFailure(RuntimeError):
    """A solver could not produce a certified answer."""


class NegativeCycleError(NumericalFailure):
    """A negative cycle exists where the computation forbids one."""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


class BracketError(NumericalFailure):
    """The critical-value bisection could not bracket the threshold."""
