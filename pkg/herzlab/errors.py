import contextlib
from typing import Optional


class HerzLabError(Exception):
    pass


class ConfigurationError(HerzLabError, ValueError):
    pass


class DomainError(HerzLabError, ValueError):
    pass


class AdmissibilityError(HerzLabError):
    def __init__(self, message: str, radius: Optional[float] = None):
        super().__init__(message)
        self.radius = radius


class QuadratureError(HerzLabError):
    """Adaptive integration gave up; `best` holds the estimate reached so far."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class TruncationError(QuadratureError):
    def __init__(self, message: str, best=None, required_k_max: Optional[int] = None):
        super().__init__(message, best)
        self.required_k_max = required_k_max


class DivergenceError(HerzLabError):
    pass


@contextlib.contextmanager
def config_field(name: str):
    """Re-raise errors from reading a descriptor as ConfigurationError prefixed by `name`."""
    try:
        yield
    except ConfigurationError as e:
        raise ConfigurationError(f"{name}: {e}") from e
    except HerzLabError:
        raise
    except KeyError as e:
        raise ConfigurationError(f"{name}: missing key {e}") from e
    except (IndexError, OverflowError, TypeError, ValueError) as e:
        raise ConfigurationError(f"{name}: {e}") from e
