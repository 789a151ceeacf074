"""Exception hierarchy shared by every layer of the package."""


class GRFError(Exception):
    """Base class for all errors raised by grf."""


class DataError(GRFError):
    """Malformed or invalid tabular input."""


class SchemaError(GRFError):
    """A model and a dataset disagree about feature layout or classes."""


class ConfigError(GRFError):
    """Invalid training configuration."""


class ModelFormatError(GRFError):
    """A model file cannot be parsed or violates a structural invariant."""
