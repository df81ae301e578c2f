import math
from functools import wraps
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError

SUPPORTED_DIMENSIONS = (1, 2, 3)


def check_dimension(n: int) -> int:
    if n not in SUPPORTED_DIMENSIONS:
        raise ConfigurationError(f"dimension must be one of {SUPPORTED_DIMENSIONS}, got {n=}")
    return n


def sphere_measure(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} (two points when n == 1)."""
    check_dimension(n)
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int, radius: float = 1.0) -> float:
    return sphere_measure(n) / n * radius**n


def dyadic_radius(k: float) -> float:
    return math.ldexp(1.0, int(k)) if float(k).is_integer() else 2.0**k


def annulus_volume(n: int, k: int) -> float:
    """|A_k| where A_k = {2^{k-1} < |x| <= 2^k}."""
    return ball_volume(n, dyadic_radius(k)) - ball_volume(n, dyadic_radius(k - 1))


def annulus_index(r: float) -> int:
    """The k with r in A_k, i.e. 2^{k-1} < r <= 2^k."""
    if not r > 0:
        raise ConfigurationError(f"annulus index needs a positive radius, got {r=}")
    m, e = math.frexp(r)
    # r = m 2^e with m in [1/2, 1); r == 2^{e-1} exactly sits in A_{e-1}
    return e - 1 if m == 0.5 else e


def support_window(lo: float, hi: float) -> Tuple[float, float]:
    """Dyadic indices of the annuli meeting the radial shell (lo, hi].

    Unbounded ends come back as -inf / +inf.
    """
    if not hi > lo:
        raise ConfigurationError(f"empty radial support ({lo}, {hi}]")
    k_lo = -math.inf if lo <= 0 else annulus_index(lo) + (1 if _is_dyadic(lo) else 0)
    k_hi = math.inf if math.isinf(hi) else annulus_index(hi)
    return k_lo, k_hi


def _is_dyadic(r: float) -> bool:
    return math.frexp(r)[0] == 0.5


def clip_window(
    window: Tuple[float, float], dyadic_window: Tuple[int, int]
) -> Optional[Tuple[int, int]]:
    lo = int(max(window[0], dyadic_window[0]))
    hi = int(min(window[1], dyadic_window[1]))
    if lo > hi:
        return None
    return lo, hi


def as_radius(x) -> float:
    """|x| for a scalar radius or a point given as a sequence of coordinates."""
    if np.ndim(x) == 0:
        return abs(float(x))
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def merge_points(*groups: Iterable[float], lo: float = 0.0, hi: float = math.inf) -> Tuple[float, ...]:
    pts = sorted({float(p) for g in groups for p in g if lo < p < hi})
    return tuple(pts)


def canonical_float(x):
    """JSON-safe float: inf/nan become strings so reports stay valid JSON."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def running_max(values: Sequence[float]) -> np.ndarray:
    return np.maximum.accumulate(np.asarray(values, dtype=float))


def make_maybe_no_args_decorator(decorator):
    """
    a decorator decorator, allowing the decorator to be used as:
    @decorator(with, arguments, and=kwargs)
    or
    @decorator
    """

    @wraps(decorator)
    def new_dec(*args, **kwargs):
        if len(args) == 1 and len(kwargs) == 0 and callable(args[0]):
            # actual decorated function
            return decorator(args[0])
        else:
            # decorator arguments
            return lambda realf: decorator(realf, *args, **kwargs)

    return new_dec
