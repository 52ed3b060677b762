"""Exception types shared across the package."""


class NllabError(Exception):
    """Base class for every error raised by nllab."""


class DomainError(NllabError, ValueError):
    """Parameters outside the range where an object is defined."""


class SingularPoint(NllabError, ValueError):
    """A weight or kernel was evaluated exactly at its singularity."""


class QuadratureFailure(NllabError, RuntimeError):
    """Subdivision budget exhausted before the tolerance was met.

    The best available estimate is kept on ``result`` so callers can
    degrade to an UNRESOLVED verdict instead of losing the number.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class MissingDecayHint(NllabError, ValueError):
    """Integrand has unbounded support and no decay information."""


class NonIntegrableTail(NllabError, ArithmeticError):
    """Power-law tail |x|^-q with q <= d: the integral diverges."""

    def __init__(self, message, q=None, d=None):
        super().__init__(message)
        self.q = q
        self.d = d


class AliasingError(NllabError, RuntimeError):
    """Too much spectral mass near the Nyquist band of a periodic grid."""


class DegenerateFit(NllabError, ValueError):
    """Decay data too noisy or too short for a log-log slope."""


class ConfigError(NllabError, ValueError):
    """Invalid command-line configuration."""

    def __init__(self, message, key=None, line=None):
        where = ""
        if key is not None:
            where += f" [key: {key}]"
        if line is not None:
            where += f" [line {line}]"
        super().__init__(message + where)
        self.key = key
        self.line = line


class IoError(NllabError, OSError):
    """A report could not be written."""
