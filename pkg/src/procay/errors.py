"""Exception hierarchy.

Errors split into two families so the CLI can map them onto exit codes:
``DataError`` for malformed inputs (exit 2) and ``NumericalError`` for
failures of the numerics on otherwise well-formed data (exit 3).
"""


class ProcayError(Exception):
    """Base class for every error raised by this package."""


class DataError(ProcayError, ValueError):
    pass


class NumericalError(ProcayError, ArithmeticError):
    pass


class ParseError(DataError):
    """Correspondence document could not be parsed.

    ``line`` and ``field`` locate the problem when known.
    """

    def __init__(self, message, *, line=None, field=None):
        parts = [message]
        if field is not None:
            parts.append(f"field={field!r}")
        if line is not None:
            parts.append(f"line={line}")
        super().__init__("; ".join(parts))
        self.line = line
        self.field = field


class DimensionMismatch(DataError):
    pass


class InvalidScene(DataError):
    pass


class EmptyInput(DataError):
    pass


class InconsistentPoint(DataError):
    pass


class DegenerateRotation(NumericalError):
    """Rotation by pi: ``R + I`` is singular and no Cayley vector exists."""


class ZeroVector(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class SingularNormal(NumericalError):
    pass


class Infeasible(NumericalError):
    """Residual function is undefined at the requested point."""


class NonPositiveDepth(Infeasible):
    def __init__(self, index, depth):
        super().__init__(f"point {index} has non-positive depth {depth:.6g}")
        self.index = index
        self.depth = depth


class BothRunsInfeasible(NumericalError):
    pass


class CheiralityViolation(NumericalError):
    pass
