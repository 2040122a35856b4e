"""Exception types raised across the package."""


class OneCircuitError(Exception):
    """Base class for all library errors."""


class TailDegreeExceeded(OneCircuitError):
    pass


class NegativeSupport(OneCircuitError):
    pass


class AtomNotFound(OneCircuitError):
    pass


class EmptyMeasure(OneCircuitError):
    pass


class NonPositiveEntry(OneCircuitError):
    pass


class DivergentProduct(OneCircuitError):
    pass


class ParameterOutOfRange(OneCircuitError):
    pass


class NotFound(OneCircuitError):
    pass


class InvalidVertex(OneCircuitError):
    pass


class TruncationExhausted(OneCircuitError):
    pass


class EmptyPreimage(OneCircuitError):
    pass


class ThetaOutOfRange(OneCircuitError):
    pass


class SeedViolatesI10(OneCircuitError):
    """A seed measure charges [0, 1]."""


class MonotonicityViolated(OneCircuitError):
    pass


class GsViolated(OneCircuitError):
    pass


class EmptyBlock(OneCircuitError):
    pass


class EulerPredicateFailed(OneCircuitError):
    pass


class ConditionViolated(OneCircuitError):
    """An extendibility condition failed; ``defect`` carries the measured gap."""

    def __init__(self, message: str, defect=None):
        super().__init__(message)
        self.defect = defect


class ConditionIBViolated(ConditionViolated):
    pass


class ConditionICViolated(ConditionViolated):
    pass


class ConditionIDViolated(ConditionViolated):
    pass
