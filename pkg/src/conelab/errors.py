"""Exception hierarchy shared across the package."""


class ConeLabError(Exception):
    """Base class for all errors raised by this package."""


class DuplicatePosition(ConeLabError):
    """Two marked points share the same position vector."""


class ZeroVelocity(ConeLabError):
    """A marked point carries the zero velocity vector."""


class BudgetExceeded(ConeLabError):
    """An exact enumeration would exceed its configured size cap."""


class QuadratureFailure(ConeLabError):
    """Numerical integration did not reach the requested tolerance."""


class DivergentMoment(ConeLabError):
    """The requested moment of the velocity law is infinite."""


class TruncationTooLoose(ConeLabError):
    """Reported series truncation bound exceeds the requested tolerance."""


class OverlappingBoxes(ConeLabError):
    """Phase boxes passed to a factorial-moment estimator overlap."""


class FunctionSyntaxError(ConeLabError):
    """Test-function text does not conform to the grammar.

    ``offset`` is the byte offset into the original input at which
    parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownSymbol(ConeLabError):
    """Test-function text uses an identifier outside the grammar."""

    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown symbol {name!r} (at offset {offset})")
        self.name = name
        self.offset = offset
