"""Exception types shared across the package."""


class SwdualityError(Exception):
    """Base class."""


class ValidationError(SwdualityError, ValueError):
    """Malformed input: bad matrix, inadmissible point, P and Q overlapping..."""


class ResourceError(SwdualityError):
    """A configured bound (period, growth cap, truncation) was exceeded."""


class TruncationEscape(ResourceError):
    """An operator image left the truncated basis where that is not allowed."""


class CertificationError(SwdualityError):
    """A sampled certificate for a model constant failed."""


class ConfigError(SwdualityError):
    """Experiment config failed schema validation."""


class _Undefined:
    """Sentinel returned by a bracket outside its domain."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __bool__(self):
        return False

    def __repr__(self):
        return "UNDEFINED"


UNDEFINED = _Undefined()
