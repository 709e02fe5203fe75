"""Exception hierarchy. Each class maps onto one CLI exit code."""


class MotionFidError(Exception):
    exit_code = 2
    kind = "error"


class ParseError(MotionFidError, ValueError):
    """Input bytes do not follow the expected file grammar."""

    exit_code = 1
    kind = "parse"


class ValidationError(MotionFidError, ValueError):
    """Well-formed input that violates a contract (shape, range, index)."""

    exit_code = 2
    kind = "validation"


class DegenerateError(MotionFidError, ArithmeticError):
    """Numerically undefined result: zero scale, coincident points, zero variance."""

    exit_code = 3
    kind = "degenerate"
