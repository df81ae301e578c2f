import logging
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn, gammainc

from .errors import ConfigurationError, config_field
from .util import as_radius, check_dimension, dyadic_radius, support_window

logger = logging.getLogger(__name__)

E = math.e


class RadialFunction(ABC):
    """A function on R^n known through its radial profile and an exact support shell."""

    n: int

    @abstractmethod
    def profile(self, r: np.ndarray) -> np.ndarray:
        pass

    @property
    @abstractmethod
    def support(self) -> Tuple[float, float]:
        """(lo, hi) with the function vanishing outside lo < |x| <= hi."""

    def breakpoints(self) -> Tuple[float, ...]:
        return ()

    def singular(self) -> Tuple[float, ...]:
        return ()

    def is_zero(self) -> bool:
        lo, hi = self.support
        return not hi > lo

    def support_window(self) -> Optional[Tuple[float, float]]:
        if self.is_zero():
            return None
        return support_window(*self.support)

    def restrict(self, lo: float, hi: float) -> "RadialFunction":
        return Restricted(self, lo, hi)

    def restrict_annulus(self, k: int) -> "RadialFunction":
        return self.restrict(dyadic_radius(k - 1), dyadic_radius(k))

    def multiply(self, factor: Callable, breakpoints: Sequence[float] = ()) -> "RadialFunction":
        return Multiplied(self, factor, tuple(breakpoints))

    def __call__(self, x) -> float:
        return float(self.profile(np.asarray([as_radius(x)]))[0])


@dataclass(frozen=True)
class Restricted(RadialFunction):
    base: RadialFunction
    lo: float
    hi: float

    @property
    def n(self):
        return self.base.n

    @property
    def support(self):
        blo, bhi = self.base.support
        lo, hi = max(blo, self.lo), min(bhi, self.hi)
        return (lo, hi) if hi > lo else (0.0, 0.0)

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r > self.lo) & (r <= self.hi)
        out = np.zeros(r.shape)
        if inside.any():
            out[inside] = self.base.profile(r[inside])
        return out

    def breakpoints(self):
        return tuple(self.base.breakpoints()) + tuple(
            b for b in (self.lo, self.hi) if 0 < b < math.inf
        )

    def singular(self):
        return self.base.singular()


@dataclass(frozen=True)
class Multiplied(RadialFunction):
    """Pointwise product of a radial function with a radial factor profile."""

    base: RadialFunction
    factor: Callable
    factor_breakpoints: Tuple[float, ...] = ()

    @property
    def n(self):
        return self.base.n

    @property
    def support(self):
        return self.base.support

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return self.base.profile(r) * self.factor(r)

    def breakpoints(self):
        return tuple(self.base.breakpoints()) + self.factor_breakpoints

    def singular(self):
        return self.base.singular()

    def restrict(self, lo, hi):
        return Multiplied(self.base.restrict(lo, hi), self.factor, self.factor_breakpoints)


KINDS = ("indicator", "power", "gaussian", "power_log")
NUMERIC_FIELDS = ("coeff", "lo", "hi", "s", "t", "scale")


@dataclass(frozen=True)
class Term:
    """coeff times one primitive, supported on the shell lo < |x| <= hi.

    indicator: 1; power: |x|^s; gaussian: exp(-(|x|/scale)^2);
    power_log: |x|^s (ln(e + scale/|x|))^t.
    """

    kind: str
    coeff: float = 1.0
    lo: float = 0.0
    hi: float = math.inf
    s: float = 0.0
    t: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown primitive {self.kind!r}; expected one of {KINDS}")
        if not 0 <= self.lo < self.hi:
            raise ConfigurationError(f"primitive needs 0 <= lo < hi, got ({self.lo}, {self.hi}]")
        if not self.scale > 0:
            raise ConfigurationError(f"primitive scale must be positive, got {self.scale}")

    def profile(self, r: np.ndarray) -> np.ndarray:
        inside = (r > self.lo) & (r <= self.hi)
        out = np.zeros(r.shape)
        if not inside.any():
            return out
        x = r[inside]
        if self.kind == "indicator":
            v = np.ones_like(x)
        elif self.kind == "power":
            v = x**self.s
        elif self.kind == "gaussian":
            v = np.exp(-((x / self.scale) ** 2))
        else:
            v = x**self.s * np.log(E + self.scale / x) ** self.t
        out[inside] = self.coeff * v
        return out

    def dilate(self, s: float) -> "Term":
        """The term of x -> term(s x)."""
        lo, hi = self.lo / s, self.hi / s
        if self.kind == "indicator":
            return replace(self, lo=lo, hi=hi)
        if self.kind == "power":
            return replace(self, lo=lo, hi=hi, coeff=self.coeff * s**self.s)
        if self.kind == "gaussian":
            return replace(self, lo=lo, hi=hi, scale=self.scale / s)
        return replace(self, lo=lo, hi=hi, coeff=self.coeff * s**self.s, scale=self.scale / s)

    def restrict(self, lo: float, hi: float) -> Optional["Term"]:
        lo, hi = max(self.lo, lo), min(self.hi, hi)
        return replace(self, lo=lo, hi=hi) if hi > lo else None

    def singular(self) -> bool:
        return self.lo == 0 and self.kind in ("power", "power_log") and self.s < 0

    def moment(self, m: float, a: float, b: float) -> Optional[float]:
        """Closed form of the integral of rho^m term(rho) over (a, b], None if unavailable."""
        a, b = max(a, self.lo), min(b, self.hi)
        if not b > a:
            return 0.0
        if self.kind == "power_log":
            return None
        if self.kind == "gaussian":
            if m <= -1:
                return None
            nu = (m + 1) / 2
            c = self.scale
            lower = gammainc(nu, (a / c) ** 2)
            upper = 1.0 if math.isinf(b) else gammainc(nu, (b / c) ** 2)
            return self.coeff * 0.5 * c ** (m + 1) * gamma_fn(nu) * (upper - lower)
        e = m + (self.s if self.kind == "power" else 0.0)
        if e == -1:
            if a == 0 or math.isinf(b):
                return None
            return self.coeff * math.log(b / a)
        if math.isinf(b):
            if e >= -1:
                return None
            return self.coeff * -(a ** (e + 1)) / (e + 1)
        if a == 0 and e < -1:
            return None
        return self.coeff * (b ** (e + 1) - a ** (e + 1)) / (e + 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(self.hi):
            d["hi"] = "inf"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Term":
        with config_field(f"primitive {d}"):
            d = dict(d)
            for key in NUMERIC_FIELDS:
                if key in d:
                    d[key] = float(d[key])
            return cls(**d)


@dataclass(frozen=True)
class TestFunction(RadialFunction):
    """Finite combination of radial primitives with exactly known support."""

    __test__ = False

    terms: Tuple[Term, ...] = ()
    n: int = 1

    def __post_init__(self):
        check_dimension(self.n)
        object.__setattr__(self, "terms", tuple(t for t in self.terms if t.coeff != 0))
        for term in self.terms:
            if term.lo == 0 and term.kind in ("power", "power_log") and not term.s > -self.n:
                raise ConfigurationError(
                    f"{term.kind} term |x|^{term.s} touching the origin is not locally "
                    f"integrable in dimension {self.n}; need s > -{self.n}"
                )

    @classmethod
    def zero(cls, n: int = 1) -> "TestFunction":
        return cls((), n)

    @classmethod
    def indicator(cls, lo: float, hi: float, n: int = 1, coeff: float = 1.0) -> "TestFunction":
        return cls((Term("indicator", coeff, lo, hi),), n)

    @classmethod
    def ball(cls, radius: float, n: int = 1, coeff: float = 1.0) -> "TestFunction":
        return cls.indicator(0.0, radius, n, coeff)

    @classmethod
    def ball_indicator(cls, k: int, n: int = 1, coeff: float = 1.0) -> "TestFunction":
        return cls.ball(dyadic_radius(k), n, coeff)

    @classmethod
    def annulus_indicator(cls, j: int, n: int = 1, coeff: float = 1.0) -> "TestFunction":
        return cls.indicator(dyadic_radius(j - 1), dyadic_radius(j), n, coeff)

    @classmethod
    def radial_power(
        cls, s: float, lo: float = 0.0, hi: float = math.inf, n: int = 1, coeff: float = 1.0
    ) -> "TestFunction":
        return cls((Term("power", coeff, lo, hi, s=s),), n)

    @classmethod
    def gaussian(
        cls, scale: float = 1.0, n: int = 1, coeff: float = 1.0, lo: float = 0.0, hi: float = math.inf
    ) -> "TestFunction":
        return cls((Term("gaussian", coeff, lo, hi, scale=scale),), n)

    @classmethod
    def radial_power_log(
        cls,
        s: float,
        t: float,
        lo: float = 0.0,
        hi: float = math.inf,
        n: int = 1,
        coeff: float = 1.0,
    ) -> "TestFunction":
        return cls((Term("power_log", coeff, lo, hi, s=s, t=t),), n)

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        for term in self.terms:
            out = out + term.profile(r)
        return out

    @property
    def support(self):
        if not self.terms:
            return (0.0, 0.0)
        return min(t.lo for t in self.terms), max(t.hi for t in self.terms)

    def breakpoints(self):
        pts = {b for t in self.terms for b in (t.lo, t.hi) if 0 < b < math.inf}
        return tuple(sorted(pts))

    def singular(self):
        return (0.0,) if any(t.singular() for t in self.terms) else ()

    def is_zero(self):
        return not self.terms

    def restrict(self, lo, hi):
        terms = (t.restrict(lo, hi) for t in self.terms)
        return TestFunction(tuple(t for t in terms if t is not None), self.n)

    def dilate(self, s: float) -> "TestFunction":
        """x -> f(s x)."""
        if not s > 0:
            raise ConfigurationError(f"dilation factor must be positive, got {s}")
        return TestFunction(tuple(t.dilate(s) for t in self.terms), self.n)

    def scaled(self, c: float) -> "TestFunction":
        return TestFunction(tuple(replace(t, coeff=c * t.coeff) for t in self.terms), self.n)

    def __mul__(self, c: float) -> "TestFunction":
        return self.scaled(c)

    __rmul__ = __mul__

    def __add__(self, other: "TestFunction") -> "TestFunction":
        if self.n != other.n:
            raise ConfigurationError(f"dimension mismatch: {self.n} vs {other.n}")
        return TestFunction(self.terms + other.terms, self.n)

    def moment(self, m: float, a: float = 0.0, b: float = math.inf) -> Optional[float]:
        """Integral of rho^m f(rho) over (a, b], None when some term has no closed form."""
        total = 0.0
        for term in self.terms:
            v = term.moment(m, a, b)
            if v is None:
                return None
            total += v
        return total

    def to_dict(self) -> dict:
        return {"n": self.n, "terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, d: dict) -> "TestFunction":
        with config_field("test function"):
            terms = d["terms"]
            n = int(d.get("n", 1))
            return cls(tuple(Term.from_dict(t) for t in terms), n)
