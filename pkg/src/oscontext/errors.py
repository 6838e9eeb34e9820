"""Exception hierarchy shared across the package."""


class OscError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(OscError, ValueError):
    """A configuration value violates its constraints."""


class DataFormatError(OscError, ValueError):
    """A file or buffer does not follow its declared binary/text format."""


class DatasetLayoutError(OscError):
    """A dataset directory is missing required components."""


class EvaluationError(OscError):
    """The evaluation protocol cannot be carried out on the given inputs."""
