"""Exception hierarchy shared across the package."""


class RectifyError(Exception):
    """Base class for every error raised by rdct."""


class NoRealPreimage(RectifyError):
    pass


class DegenerateLine(RectifyError):
    """Vanishing line (nearly) passes through the distortion center."""


class SingularCamera(RectifyError):
    pass


class IdenticallyZero(RectifyError):
    """A polynomial that should carry information vanishes identically."""


class IdenticallyZeroDeterminant(IdenticallyZero):
    pass


class DegenerateSelection(RectifyError):
    """A meet-of-joins row collapsed to the zero vector."""


class DegenerateConfiguration(RectifyError):
    """Input points lie in a configuration with a family of solutions."""


class NoFeasibleRoot(RectifyError):
    pass


class NoValidModel(RectifyError):
    pass


class RankDeficient(RectifyError):
    pass


class RetryExhausted(RectifyError):
    pass


class UnrectifiablePoint(RectifyError):
    pass


class DegenerateU(RectifyError):
    pass


class NoModelFound(RectifyError):
    pass


class SchemaError(RectifyError):
    pass
