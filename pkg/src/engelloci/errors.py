"""Exception hierarchy shared by every module.

All domain failures derive from :class:`EngelError` so the CLI can map them
to exit code 1 with a JSON payload.
"""


class EngelError(Exception):
    """Base class for domain errors."""

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class NotSolvedForm(EngelError):
    pass


class DegenerateComplement(EngelError):
    pass


class FrameDependent(EngelError):
    """Frame vectors fail to be independent somewhere on the chart box."""


class DegreeCapExceeded(EngelError):
    pass


class NotEngelPoint(EngelError):
    pass


class WellDefinednessViolated(EngelError):
    pass


class NotOnZeroSet(EngelError):
    pass


class NotTransverse(EngelError):
    pass


class PathTouchesC(EngelError):
    pass


class WrongLinkCount(EngelError):
    def __init__(self, message, found=None):
        super().__init__(message)
        self.found = found


class CycleMeetsC(EngelError):
    pass


class CycleMeetsDenominator(EngelError):
    pass


class NonTransverseIntersection(EngelError):
    pass


class BadCycle(EngelError):
    pass


class PresentationMismatch(EngelError):
    pass


class DegreeMismatch(EngelError):
    pass


class BadPresentation(EngelError):
    pass


class UnknownEntry(EngelError):
    pass


class BadModulus(EngelError):
    pass


class DegenerateMetric(EngelError):
    pass


class ModelSyntaxError(EngelError):
    def __init__(self, message, line, col):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col

    def to_dict(self):
        d = super().to_dict()
        d.update(line=self.line, col=self.col)
        return d


class ModelSemanticError(EngelError):
    def __init__(self, message, line=None, col=None):
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.col = col
