"""Exception taxonomy shared by all simulator modules.

Every error class carries a distinct CLI exit code so that scripted callers
can tell failure modes apart without parsing messages.
"""


class SimulationError(Exception):
    """Base class for all simulator-specific failures."""

    exit_code = 1

    def detail(self):
        """Machine-readable payload for the CLI error report."""
        return {}


class ConfigError(SimulationError):
    """Invalid configuration or scenario description."""

    exit_code = 2

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)

    def detail(self):
        return {"violations": self.violations}


class ArgumentError(SimulationError, ValueError):
    """An operation was called with out-of-domain arguments."""

    exit_code = 3


class DegenerateGeometryError(SimulationError):
    """Coincident points, collinear anchors, or similar rank deficiency."""

    exit_code = 4


class InsufficientAnchorsError(SimulationError):
    """Fewer than three usable emitters for a position fix."""

    exit_code = 5

    def __init__(self, message, usable=0):
        super().__init__(message)
        self.usable = usable

    def detail(self):
        return {"usable_anchors": self.usable}


class InfeasibleRatioError(SimulationError):
    """Dual-mode power ratio outside the invertible interval."""

    exit_code = 6

    def __init__(self, message, ratio=None):
        super().__init__(message)
        self.ratio = ratio

    def detail(self):
        return {"ratio": None if self.ratio is None else float(self.ratio)}


class InconsistentRangesError(SimulationError):
    """Measured ranges admit no feasible intersection point."""

    exit_code = 7


class AmbiguousSolutionError(SimulationError):
    """Both trilateration roots are feasible; refusing to guess."""

    exit_code = 8

    def __init__(self, message, roots=()):
        super().__init__(message)
        self.roots = [tuple(float(x) for x in r) for r in roots]

    def detail(self):
        return {"roots": self.roots}


class IllConditionedError(SimulationError):
    """Linear system too close to singular for a trustworthy solve."""

    exit_code = 9

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number

    def detail(self):
        cn = self.condition_number
        return {"condition_number": None if cn is None else float(cn)}


class NoiseDominatedError(SimulationError):
    """SNR below the threshold where a distance is recoverable."""

    exit_code = 10


class BehindEmitterError(SimulationError, ValueError):
    """Receiver placed behind the beam origin (|irradiance angle| >= 90 deg)."""

    exit_code = 11


class QuadratureAccuracyError(SimulationError):
    """Numerical integration failed its convergence check."""

    exit_code = 12

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def detail(self):
        return dict(self.diagnostics)
