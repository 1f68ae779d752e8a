"""Exception hierarchy shared by every bdris module.

Errors are split in three families so the command line can map them onto
exit codes: `UsageError` (bad input, exit 2), `DataError` (malformed or
inconsistent files, exit 3) and `NumericalError` (exit 4).
"""


class BdrisError(Exception):
    """Base class for all package errors."""

    #: pipeline stage set by `thevenin.simulate` when it re-raises
    stage = None


class UsageError(BdrisError, ValueError):
    pass


class DataError(BdrisError, ValueError):
    pass


class NumericalError(BdrisError, ArithmeticError):
    pass


class SingularConversion(NumericalError):
    pass


class SingularSystem(NumericalError):
    def __init__(self, message, cond=float("inf")):
        super().__init__(message)
        self.cond = cond


class MismatchedReference(UsageError):
    pass


class NonCascadable(NumericalError):
    pass


class NonPassive(UsageError):
    pass


class DegenerateCircuit(NumericalError):
    pass


class InfiniteRatio(NumericalError):
    pass


class Unachievable(UsageError):
    def __init__(self, message, min_db, max_db):
        super().__init__(message)
        self.min_db = min_db
        self.max_db = max_db


class OutOfBand(UsageError):
    pass


class PhaseUndefined(NumericalError):
    pass


class DegenerateLoad(NumericalError):
    pass


class InvalidLayout(UsageError):
    pass


class WrongSide(UsageError):
    pass


class SchemaError(DataError):
    pass


class ReciprocityError(DataError):
    pass


class GridMismatch(DataError):
    pass


class ZeroPattern(NumericalError):
    pass


class NoBeam(NumericalError):
    pass


class TooLarge(UsageError):
    pass
