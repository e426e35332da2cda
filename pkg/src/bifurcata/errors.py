"""Exception types raised by the numerical layers."""


class BifurcataError(Exception):
    """Base class for all numerical failures in this package."""


class DomainError(BifurcataError, ValueError):
    """An argument lies outside the domain of the function (e.g. |v| >= beta0)."""


class ToleranceNotMet(BifurcataError):
    """Adaptive refinement or an iterative solve ran out of budget."""


class BracketError(BifurcataError):
    """A root bracket does not show the required sign change."""


class NoSignChange(BracketError):
    """Raised by the bisection oracle when f(lo) and f(hi) share a sign."""


class MonotonicityViolation(BifurcataError):
    """lambda failed to increase along a traced primary branch."""


class NoRootFound(BifurcataError):
    """A scan that must contain a root did not find one."""


class CorrectorDiverged(BifurcataError):
    """The continuation corrector failed even after step halving."""


class DiscretizationFailure(BifurcataError):
    """The discrete eigenproblem could not be assembled or solved."""


class IndexUncertain(BifurcataError):
    """An eigenvalue sits inside the zero band, so the Morse index is not certified."""


class RankMismatch(BifurcataError):
    """An eigenfunction's zero count disagrees with its position in the spectrum."""


class EnergyDrift(BifurcataError):
    """The fixed-step oracle integrator lost the conserved energy."""


class ConfigError(ValueError):
    """A configuration file or flag is malformed or out of range."""
