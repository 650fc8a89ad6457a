"""Exception hierarchy shared by every stage of the pipeline."""


class CsiGaitError(Exception):
    """Base class for all package errors."""


class InvalidInput(CsiGaitError, ValueError):
    """Arguments violate an operation's preconditions."""


class ParseError(CsiGaitError):
    """A trial or model file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(CsiGaitError):
    """A file parsed but its content breaks a structural invariant."""


class DataQualityError(CsiGaitError):
    """Captured data is too incomplete to be trusted."""


class DegenerateInput(CsiGaitError, ValueError):
    """Input carries no usable variance."""


class RankDeficient(CsiGaitError, ValueError):
    """Data rank is too low for the requested number of sources."""


class PeakResolutionError(CsiGaitError):
    """Fewer resolvable spectral peaks than requested sources."""


class IoError(CsiGaitError, OSError):
    """An output file or directory could not be written."""


class ConfigError(CsiGaitError):
    """Experiment configuration is missing or malformed."""
