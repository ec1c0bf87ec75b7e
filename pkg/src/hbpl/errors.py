"""Exception types raised across the package."""


class HBPLError(Exception):
    """Base class for all errors raised by hbpl."""


class InvalidDimension(HBPLError, ValueError):
    pass


class InvalidConstants(HBPLError, ValueError):
    pass


class IntegrationBudgetExceeded(HBPLError, RuntimeError):
    pass


class NumericalBlowup(HBPLError, FloatingPointError):
    def __init__(self, message, last_time):
        super().__init__(f"{message} (last valid time {last_time:.6g})")
        self.last_time = last_time


class InfeasibleDamping(HBPLError, ValueError):
    pass


class VacuousEpsilon(HBPLError, ValueError):
    pass


class NoFeasibleDelta(HBPLError, ValueError):
    pass


class EmptyEstimate(HBPLError, ValueError):
    pass


class MissingOracle(HBPLError, ValueError):
    pass


class NoImplication(HBPLError, ValueError):
    pass


class ProxBudgetExceeded(HBPLError, RuntimeError):
    pass


class MissingConstant(HBPLError, ValueError):
    pass


class MissingVelocities(HBPLError, ValueError):
    pass


class InsufficientData(HBPLError, ValueError):
    pass


class ConfigError(HBPLError, ValueError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
