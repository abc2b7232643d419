"""Exceptions raised by rpca. Each carries the exit code the CLI reports."""


class RpcaError(Exception):
    exit_code = 1


class InputOutputError(RpcaError):
    exit_code = 2


class FormatError(RpcaError):
    """A matrix file could not be parsed."""

    exit_code = 3

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractViolation(RpcaError, ValueError):
    """A parameter, shape or precondition check failed."""

    exit_code = 4


class NumericalBreakdown(RpcaError, ArithmeticError):
    """A non-finite value appeared during an algorithm step."""

    exit_code = 5

    def __init__(self, step, detail="non-finite values"):
        self.step = step
        super().__init__(f"numerical breakdown in step '{step}': {detail}")
