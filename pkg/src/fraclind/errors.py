"""Exception hierarchy shared by all modules.

Every error raised by the library derives from :class:`FraclindError`, so the
command-line front end can map library failures to exit codes in one place.
"""


class FraclindError(Exception):
    """Base class for all library errors."""


class InputError(FraclindError):
    """Malformed or inconsistent input (exit code 2 on the command line)."""


class CheckFailure(FraclindError):
    """A numerical verification did not pass (exit code 1)."""


class DimensionMismatch(InputError):
    pass


class RealityViolation(InputError):
    pass


class NotResonant(InputError):
    pass


class NonPrimitive(InputError):
    pass


class DomainViolation(InputError):
    pass


class DegenerateGrid(InputError):
    pass


class CapExceeded(InputError):
    pass


class OutOfRange(InputError):
    pass


class ParseError(InputError):
    pass


class ValidationError(InputError):
    pass


class DiophantineViolation(InputError):
    pass


class NoStationaryPoint(CheckFailure):
    pass


class DegenerateAverage(CheckFailure):
    pass


class OrderExceeded(CheckFailure):
    pass


class SingularHessian(CheckFailure):
    pass


class AssumptionAViolated(CheckFailure):
    pass


class CompatibilityViolation(CheckFailure):
    pass


class ZeroBranch(CheckFailure):
    pass


class BoundViolated(CheckFailure):
    pass


class SingularDenominator(CheckFailure):
    pass


class CancellationViolated(CheckFailure):
    pass


class NotIsolated(CheckFailure):
    pass


class NonMonotone(CheckFailure):
    pass
