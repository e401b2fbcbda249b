class LoopCalcError(ValueError):
    """Base class for every input or precondition error raised by loopcalc."""


class DimMismatch(LoopCalcError):
    pass


class EndpointMismatch(LoopCalcError):
    """Raised when a composition joins paths whose ends do not meet."""


class ZeroDirection(LoopCalcError):
    pass


class DependentDirections(LoopCalcError):
    pass


class IndexOutOfRange(LoopCalcError):
    pass


class ShapeMismatch(LoopCalcError):
    pass


class RadiusExceeded(LoopCalcError):
    """Raised when a probe leaves the neighbourhood a section is defined on."""


class DimTooSmall(LoopCalcError):
    pass


class AlgebraInvariantError(LoopCalcError):
    pass


class ParseError(LoopCalcError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
