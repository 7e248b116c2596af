"""Exception types raised by the solver and its building blocks."""


class ManifoldSamplingError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(ManifoldSamplingError, ValueError):
    """An argument broke an operation's documented preconditions."""


class EvaluationFault(ManifoldSamplingError):
    """The black-box map returned non-finite values."""

    def __init__(self, x, value=None):
        self.x = x
        self.value = value
        super().__init__(f"non-finite evaluation at x={list(x)!r}: {value!r}")


class BudgetExhausted(ManifoldSamplingError):
    """A fresh evaluation was requested after the evaluation budget ran out."""


class ModelBuildFault(ManifoldSamplingError):
    """Could not assemble an affinely independent interpolation set."""


class PairSearchExhausted(ManifoldSamplingError):
    """A (z, j) search ran out of iterations without a certificate."""


class RhoUndefined(ManifoldSamplingError):
    """The predicted decrease in the ratio test was not positive."""
