"""Exception hierarchy shared across anchorlab."""


class AnchorlabError(Exception):
    """Base class for all anchorlab errors."""


class ValidationError(AnchorlabError, ValueError):
    """An input violates a documented invariant or precondition."""


class InvalidGame(ValidationError):
    pass


class InvalidProbTable(ValidationError):
    pass


class SearchSpaceTooLarge(ValidationError):
    pass


class InvalidAlpha(ValidationError):
    pass


class NonSquare(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class NonTracePreserving(ValidationError):
    pass


class NotAPOVM(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class BadRegisterIndex(ValidationError):
    pass


class HypothesisViolated(ValidationError):
    pass


class NotXorGame(ValidationError):
    pass


class RangeError(ValidationError):
    pass


class COutOfWindow(RangeError):
    pass


class AlphaEtaMismatch(ValidationError):
    pass


class NoWinningSamples(ValidationError):
    pass


class InvalidStrategy(ValidationError):
    pass


class EmptyPairSet(ValidationError):
    pass


class EvenN(ValidationError):
    pass


class SolverDiverged(AnchorlabError, RuntimeError):
    """The SDP solver could not reach the requested duality gap."""
