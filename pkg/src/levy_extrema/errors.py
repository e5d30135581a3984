"""Exception hierarchy shared by all modules.

Every numerical failure the pipeline can report has its own class so the CLI
can map it to an exit code and print the class name.
"""


class LevyExtremaError(Exception):
    """Base class for all domain errors."""


class ModelError(LevyExtremaError, ValueError):
    """Invalid model, jump-measure or killing-time parameters."""


class DenominatorVanishes(LevyExtremaError):
    """q - psi (or 1 - q exp(psi)) is numerically zero on the real line."""


class VanishingSample(LevyExtremaError):
    """A sampled function has a zero on the grid, so its phase is undefined."""


class BranchJumpTooLarge(LevyExtremaError):
    """Consecutive phase increment exceeds pi/2: the grid is under-resolved."""


class BranchUnwrapFailure(BranchJumpTooLarge):
    """No continuous branch of ln g could be tracked along the grid."""


class NonzeroIndex(LevyExtremaError):
    """The symbol g winds around the origin."""


class NonAnalytic(LevyExtremaError):
    """Evaluation requested outside the strip of analyticity."""


class TailDivergence(LevyExtremaError):
    """The declared tail model makes a singular integral divergent."""


class RealAxisSingularity(LevyExtremaError):
    """A zero or pole of a rational function lies (numerically) on the real line."""


class IndexMismatch(LevyExtremaError):
    """Zero/pole counts per half-plane do not give a zero-index split."""


class ContourThroughRoot(LevyExtremaError):
    """An argument-principle contour passes through (or too near) a root."""


class SpuriousRealPole(LevyExtremaError):
    """A Pade approximant has a pole on the real line."""


class ApproximationTooCoarse(LevyExtremaError):
    """Rational approximation error exceeds the configured bound."""


class GridTooCoarse(LevyExtremaError):
    """Frequency spacing cannot resolve the requested abscissae."""


class UnsimulableModel(LevyExtremaError):
    """The Monte Carlo oracle cannot simulate this model."""


class ConfigError(LevyExtremaError, ValueError):
    """Malformed run configuration; the message carries the field path."""
