"""Exception hierarchy shared by every steerkit module."""


class SteerkitError(Exception):
    """Base class for all library errors."""


class NotHermitian(SteerkitError):
    pass


class NotPSD(SteerkitError):
    pass


class ZeroOperator(SteerkitError):
    pass


class DimensionMismatch(SteerkitError):
    pass


class NotAState(SteerkitError):
    pass


class RankDeficientSchmidt(SteerkitError):
    pass


class NoSignalingViolation(SteerkitError):
    pass


class InvalidDistribution(SteerkitError):
    pass


class InvalidMeasurement(SteerkitError):
    pass


class FilterAnnihilates(SteerkitError):
    """The filter succeeds with (numerically) zero probability."""


class NotEquivalent(SteerkitError):
    pass


class SolverFailure(SteerkitError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class TooManyStrategies(SteerkitError):
    pass


class InfeasibleWitness(SteerkitError):
    pass


class ParseError(SteerkitError):
    pass


class SchemaError(SteerkitError):
    pass
