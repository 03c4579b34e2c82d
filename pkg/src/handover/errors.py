"""Exception types shared across the package.

Validation problems (bad inputs, degenerate configurations) derive from
:class:`ValidationError`; numerical failures from :class:`ComputationError`.
The CLI maps the two families onto distinct exit codes.
"""


class HandoverError(Exception):
    """Base class for all package errors."""


class ValidationError(HandoverError, ValueError):
    """Input violates a documented precondition."""


class InvalidParameterError(ValidationError):
    pass


class UnsupportedFormError(ValidationError):
    pass


class DegenerateInputError(ValidationError):
    pass


class ScenarioError(ValidationError):
    """Scenario file problem, optionally located by key path and line/column."""

    def __init__(self, message, key=None, line=None, column=None):
        self.key = key
        self.line = line
        self.column = column
        where = []
        if key:
            where.append(key)
        if line is not None:
            where.append(f"line {line}" + (f", column {column}" if column is not None else ""))
        super().__init__(f"{message} ({'; '.join(where)})" if where else message)


class ComputationError(HandoverError, ArithmeticError):
    pass


class ConvergenceError(ComputationError):
    """Iteration cap reached; ``last`` carries the final iterate."""

    def __init__(self, message, last=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class InsufficientDataError(ComputationError):
    pass
