"""Exception hierarchy shared by every fifdim module."""


class FifError(Exception):
    """Base class for all fifdim errors."""

    code = 1
    kind = "FifError"


class MalformedInput(FifError, ValueError):
    code = 2
    kind = "MalformedInput"


class ContractivityViolation(FifError):
    code = 3
    kind = "ContractivityViolation"


class ResourceLimit(FifError):
    code = 4
    kind = "ResourceLimit"

    def __init__(self, message, achieved_width=None, history=None):
        super().__init__(message)
        self.achieved_width = achieved_width
        self.history = history


class NoConvergence(FifError):
    code = 5
    kind = "NoConvergence"


class Inconclusive(FifError):
    """Raised only on request (strict mode) when no certified verdict exists."""

    code = 6
    kind = "Inconclusive"


class ConditionNotMet(FifError):
    """An operation needs a hypothesis (A4, A6, ...) that validation did not confirm."""

    code = 7
    kind = "ConditionNotMet"


class DomainError(FifError, ValueError):
    code = 8
    kind = "DomainError"


class InsufficientResolution(FifError):
    code = 9
    kind = "InsufficientResolution"


class DegenerateFit(FifError):
    code = 10
    kind = "DegenerateFit"
