"""Exception hierarchy.

Every error raised by the simulator derives from :class:`ImddError` and
carries an ``exit_code`` used by the command line front end.
"""


class ImddError(Exception):
    exit_code = 1
    #: pipeline stage the error surfaced in, filled in by the runner
    stage = None


class ConfigError(ImddError, ValueError):
    exit_code = 2


class InfeasiblePlanError(ImddError, ValueError):
    exit_code = 3


class OutOfRangeError(ImddError, ValueError):
    exit_code = 3


class ConvergenceError(ImddError, RuntimeError):
    exit_code = 4


class InfeasiblePowerError(ImddError, ValueError):
    exit_code = 4


class SyncError(ImddError, RuntimeError):
    exit_code = 5


class IllConditionedError(ImddError, RuntimeError):
    exit_code = 6


class DivergenceError(ImddError, RuntimeError):
    exit_code = 6


class AmbiguousCrossingError(ImddError, ValueError):
    exit_code = 7

    def __init__(self, message, crossings=()):
        super().__init__(message)
        self.crossings = list(crossings)
