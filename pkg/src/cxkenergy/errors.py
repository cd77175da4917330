"""Exception and warning types shared across the package."""


class CxKEnergyError(Exception):
    """Base class for all package errors."""


class NonPositiveMetric(CxKEnergyError, ValueError):
    pass


class LostPositivity(CxKEnergyError, ValueError):
    """A metric-intent form failed positive-definiteness.

    ``index`` holds the first offending grid index when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class LostConvexity(CxKEnergyError, ValueError):
    pass


class DimensionMismatch(CxKEnergyError, ValueError):
    pass


class VanishingComplexifiedVolume(CxKEnergyError, ValueError):
    pass


class NonPositiveChi(CxKEnergyError, ValueError):
    pass


class PhaseOutOfRange(CxKEnergyError, ValueError):
    pass


class DegeneratePhase(CxKEnergyError, ValueError):
    pass


class NotDHYMSolution(CxKEnergyError, ValueError):
    pass


class VolumeMismatch(CxKEnergyError, ValueError):
    pass


class EpsilonTooSmall(CxKEnergyError, ValueError):
    pass


class ConfigError(CxKEnergyError, ValueError):
    """Bad run configuration; ``location`` names the offending key or flag."""

    def __init__(self, message, location=None):
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class LostCalibration(UserWarning):
    """A potential left the almost calibrated set."""
