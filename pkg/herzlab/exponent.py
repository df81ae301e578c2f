import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar, Dict, Optional, Sequence, Tuple, Type

import numpy as np

from .errors import AdmissibilityError, ConfigurationError, DomainError, config_field
from .util import as_radius, check_dimension

logger = logging.getLogger(__name__)

E = math.e

# samples per piece when a composite form has no monotone structure to exploit
COMPOSITE_SAMPLES = 4096
MINIMALITY_TOL = 1e-12


def _log_decay(r):
    """1 / ln(e + r), the decay profile of the forms that settle at infinity."""
    return 1.0 / np.log(E + r)


def _log_origin(r):
    """1 / ln(e + 1/r), extended by 0 at the origin."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(r > 0, 1.0 / np.log(E + 1.0 / np.where(r > 0, r, 1.0)), 0.0)


class Form(ABC):
    """Closed-form radial profile of an exponent field."""

    name: ClassVar[str]
    registry: ClassVar[Dict[str, Type["Form"]]] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if getattr(cls, "name", None):
            Form.registry[cls.name] = cls

    @abstractmethod
    def radial(self, r: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def range_on(self, lo: float, hi: float) -> Tuple[float, float]:
        """(inf, sup) of the profile over lo <= r <= hi; hi may be +inf."""

    @abstractmethod
    def origin(self) -> float:
        pass

    @abstractmethod
    def limit(self) -> Optional[float]:
        """Value approached as r -> inf, None if the form has no radial limit."""

    def breakpoints(self) -> Tuple[float, ...]:
        return ()

    def is_constant(self) -> bool:
        return False

    @abstractmethod
    def to_dict(self) -> dict:
        pass

    @staticmethod
    def from_dict(d: dict) -> "Form":
        d = dict(d)
        d.pop("n", None)
        try:
            kind = d.pop("form")
        except KeyError:
            raise ConfigurationError(f"exponent descriptor without 'form': {d}")
        if kind not in Form.registry:
            raise ConfigurationError(
                f"unknown exponent form {kind!r}; expected one of {sorted(Form.registry)}"
            )
        with config_field(f"form {kind!r}"):
            return Form.registry[kind].from_params(d)

    @classmethod
    def from_params(cls, d: dict) -> "Form":
        return cls(**{k: float(v) for k, v in d.items()})

    def value_at(self, r: float) -> float:
        if math.isinf(r):
            lim = self.limit()
            if lim is None:
                raise DomainError(f"form {self.name!r} has no radial limit")
            return lim
        return float(self.radial(np.asarray([r], dtype=float))[0])

    def _monotone_range(self, lo: float, hi: float) -> Tuple[float, float]:
        a, b = self.value_at(lo), self.value_at(hi)
        return min(a, b), max(a, b)


@dataclass(frozen=True)
class Constant(Form):
    c: float
    name: ClassVar[str] = "constant"

    def radial(self, r):
        return np.full(np.shape(r), self.c, dtype=float)

    def range_on(self, lo, hi):
        return self.c, self.c

    def origin(self):
        return self.c

    def limit(self):
        return self.c

    def is_constant(self):
        return True

    def to_dict(self):
        return {"form": self.name, "c": self.c}


@dataclass(frozen=True)
class RadialLog(Form):
    """c_inf + a / ln(e + |x|)."""

    c_inf: float
    a: float
    name: ClassVar[str] = "radial_log"

    def radial(self, r):
        return self.c_inf + self.a * _log_decay(np.asarray(r, dtype=float))

    def range_on(self, lo, hi):
        return self._monotone_range(lo, hi)

    def origin(self):
        return self.c_inf + self.a

    def limit(self):
        return self.c_inf

    def is_constant(self):
        return self.a == 0

    def to_dict(self):
        return {"form": self.name, "c_inf": self.c_inf, "a": self.a}


@dataclass(frozen=True)
class RadialOriginLog(Form):
    """c0 + a / ln(e + 1/|x|) inside the unit ball, frozen at its |x| = 1 value outside."""

    c0: float
    a: float
    name: ClassVar[str] = "radial_origin_log"

    def radial(self, r):
        r = np.minimum(np.asarray(r, dtype=float), 1.0)
        return self.c0 + self.a * _log_origin(r)

    def range_on(self, lo, hi):
        return self._monotone_range(min(lo, 1.0), min(hi, 1.0))

    def origin(self):
        return self.c0

    def limit(self):
        return self.c0 + self.a / math.log(E + 1.0)

    def breakpoints(self):
        return (1.0,)

    def is_constant(self):
        return self.a == 0

    def to_dict(self):
        return {"form": self.name, "c0": self.c0, "a": self.a}


@dataclass(frozen=True)
class RadialAffine(Form):
    """c + b |x|; unbounded unless b == 0, so mostly useful as a piece."""

    c: float
    b: float
    name: ClassVar[str] = "radial_affine"

    def radial(self, r):
        return self.c + self.b * np.asarray(r, dtype=float)

    def range_on(self, lo, hi):
        if math.isinf(hi) and self.b != 0:
            a = self.c + self.b * lo
            return (a, math.inf) if self.b > 0 else (-math.inf, a)
        return self._monotone_range(lo, hi)

    def origin(self):
        return self.c

    def limit(self):
        return self.c if self.b == 0 else None

    def is_constant(self):
        return self.b == 0

    def to_dict(self):
        return {"form": self.name, "c": self.c, "b": self.b}


@dataclass(frozen=True)
class PiecewiseRadial(Form):
    """Sub-form i lives on [breakpoints[i-1], breakpoints[i]) (first piece starts at 0)."""

    breakpoints_: Tuple[float, ...]
    pieces: Tuple[Form, ...]
    name: ClassVar[str] = "piecewise_radial"

    def __post_init__(self):
        bps = self.breakpoints_
        if len(self.pieces) != len(bps) + 1:
            raise ConfigurationError(
                f"piecewise_radial needs len(pieces) == len(breakpoints) + 1, "
                f"got {len(self.pieces)} pieces for {len(bps)} breakpoints"
            )
        if any(b <= 0 for b in bps) or any(b1 >= b2 for b1, b2 in zip(bps, bps[1:])):
            raise ConfigurationError(
                f"piecewise_radial breakpoints must be positive and strictly increasing "
                f"(no overlaps), got {list(bps)}"
            )

    @classmethod
    def from_params(cls, d):
        unknown = set(d) - {"breakpoints", "pieces"}
        if unknown:
            raise ConfigurationError(f"bad parameters for form 'piecewise_radial': {unknown}")
        return cls(
            tuple(float(b) for b in d["breakpoints"]),
            tuple(Form.from_dict(p) for p in d["pieces"]),
        )

    def _edges(self):
        return (0.0,) + self.breakpoints_ + (math.inf,)

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(np.asarray(self.breakpoints_), r, side="right")
        out = np.empty(r.shape, dtype=float)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if mask.any():
                out[mask] = piece.radial(r[mask])
        return out

    def range_on(self, lo, hi):
        edges = self._edges()
        lows, highs = [], []
        for i, piece in enumerate(self.pieces):
            a, b = max(lo, edges[i]), min(hi, edges[i + 1])
            if a < b or (a == b == lo):
                l, h = piece.range_on(a, b)
                lows.append(l)
                highs.append(h)
        return min(lows), max(highs)

    def origin(self):
        return self.pieces[0].origin()

    def limit(self):
        return self.pieces[-1].limit()

    def breakpoints(self):
        inner = [b for p in self.pieces for b in p.breakpoints()]
        return tuple(sorted(set(self.breakpoints_) | set(inner)))

    def is_constant(self):
        return False

    def to_dict(self):
        return {
            "form": self.name,
            "breakpoints": list(self.breakpoints_),
            "pieces": [p.to_dict() for p in self.pieces],
        }


@dataclass(frozen=True)
class Conjugate(Form):
    base: Form
    name: ClassVar[str] = "conjugate"

    @staticmethod
    def _h(q):
        return q / (q - 1.0) if not math.isinf(q) else 1.0

    @classmethod
    def from_params(cls, d):
        return cls(Form.from_dict(d["base"]))

    def radial(self, r):
        q = self.base.radial(r)
        return q / (q - 1.0)

    def range_on(self, lo, hi):
        l, h = self.base.range_on(lo, hi)
        return self._h(h), self._h(l)

    def origin(self):
        return self._h(self.base.origin())

    def limit(self):
        lim = self.base.limit()
        return None if lim is None else self._h(lim)

    def breakpoints(self):
        return self.base.breakpoints()

    def to_dict(self):
        return {"form": self.name, "base": self.base.to_dict()}


def _sampled_range(fn, lo: float, hi: float, breakpoints: Sequence[float]) -> Tuple[float, float]:
    """Range of a composite profile from endpoints, breakpoints and a log-spaced sweep."""
    top = hi if not math.isinf(hi) else 1e12
    bottom = max(lo, 1e-12)
    pts = [np.geomspace(bottom, max(top, bottom * (1 + 1e-12)), COMPOSITE_SAMPLES)]
    pts.append(np.asarray([lo, bottom, top] + [b for b in breakpoints if lo <= b <= hi]))
    r = np.unique(np.concatenate(pts))
    v = fn(r)
    return float(np.min(v)), float(np.max(v))


@dataclass(frozen=True)
class Sobolev(Form):
    """1/q2 = 1/q1 - beta/n."""

    q1: Form
    beta: Form
    n: int
    name: ClassVar[str] = "sobolev"

    @classmethod
    def from_params(cls, d):
        return cls(Form.from_dict(d["q1"]), Form.from_dict(d["beta"]), int(d["dim"]))

    @staticmethod
    def _combine(q1, beta, n):
        return 1.0 / (1.0 / q1 - beta / n)

    def radial(self, r):
        return self._combine(self.q1.radial(r), self.beta.radial(r), self.n)

    def range_on(self, lo, hi):
        if self.q1.is_constant() or self.beta.is_constant():
            # monotone in the varying argument, so the extremes sit at the argument's extremes
            ql, qh = self.q1.range_on(lo, hi)
            bl, bh = self.beta.range_on(lo, hi)
            candidates = [self._combine(q, b, self.n) for q in (ql, qh) for b in (bl, bh)]
            return min(candidates), max(candidates)
        return _sampled_range(self.radial, lo, hi, self.breakpoints())

    def origin(self):
        return self._combine(self.q1.origin(), self.beta.origin(), self.n)

    def limit(self):
        a, b = self.q1.limit(), self.beta.limit()
        if a is None or b is None:
            return None
        return self._combine(a, b, self.n)

    def breakpoints(self):
        return tuple(sorted(set(self.q1.breakpoints()) | set(self.beta.breakpoints())))

    def to_dict(self):
        return {
            "form": self.name,
            "q1": self.q1.to_dict(),
            "beta": self.beta.to_dict(),
            "dim": self.n,
        }


@dataclass(frozen=True)
class GammaWeight(Form):
    """gamma(x) = c_inf beta(x) (1 - beta(x)/n)."""

    beta: Form
    c_inf: float
    n: int
    name: ClassVar[str] = "gamma_weight"

    @classmethod
    def from_params(cls, d):
        return cls(Form.from_dict(d["beta"]), float(d["c_inf"]), int(d["dim"]))

    def _g(self, b):
        return self.c_inf * b * (1.0 - b / self.n)

    def radial(self, r):
        return self._g(self.beta.radial(r))

    def range_on(self, lo, hi):
        bl, bh = self.beta.range_on(lo, hi)
        vals = [self._g(bl), self._g(bh)]
        if bl <= self.n / 2 <= bh:
            vals.append(self._g(self.n / 2))
        return min(vals), max(vals)

    def origin(self):
        return self._g(self.beta.origin())

    def limit(self):
        lim = self.beta.limit()
        return None if lim is None else self._g(lim)

    def breakpoints(self):
        return self.beta.breakpoints()

    def to_dict(self):
        return {
            "form": self.name,
            "beta": self.beta.to_dict(),
            "c_inf": self.c_inf,
            "dim": self.n,
        }


@dataclass(frozen=True)
class ExponentField:
    form: Form
    n: int = 1

    def __post_init__(self):
        check_dimension(self.n)

    @cached_property
    def bounds(self) -> Tuple[float, float]:
        return self.form.range_on(0.0, math.inf)

    @property
    def ess_inf(self) -> float:
        return self.bounds[0]

    @property
    def ess_sup(self) -> float:
        return self.bounds[1]

    @property
    def value_at_origin(self) -> float:
        return self.form.origin()

    @property
    def limit_at_infinity(self) -> Optional[float]:
        return self.form.limit()

    @property
    def is_constant(self) -> bool:
        return self.form.is_constant()

    def breakpoints(self) -> Tuple[float, ...]:
        return self.form.breakpoints()

    def radial(self, r) -> np.ndarray:
        return self.form.radial(np.asarray(r, dtype=float))

    def value(self, x) -> float:
        return value(self, x)

    def to_dict(self) -> dict:
        return {**self.form.to_dict(), "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "ExponentField":
        with config_field("exponent"):
            n = int(d.get("n", 1))
        return cls(Form.from_dict(d), n)

    @classmethod
    def constant(cls, c: float, n: int = 1) -> "ExponentField":
        return cls(Constant(float(c)), n)

    @classmethod
    def radial_log(cls, c_inf: float, a: float, n: int = 1) -> "ExponentField":
        return cls(RadialLog(float(c_inf), float(a)), n)

    @classmethod
    def radial_origin_log(cls, c0: float, a: float, n: int = 1) -> "ExponentField":
        return cls(RadialOriginLog(float(c0), float(a)), n)

    @classmethod
    def piecewise_radial(
        cls, breakpoints: Sequence[float], pieces: Sequence["ExponentField"], n: int = 1
    ) -> "ExponentField":
        return cls(
            PiecewiseRadial(tuple(float(b) for b in breakpoints), tuple(p.form for p in pieces)),
            n,
        )


@dataclass(frozen=True)
class LogHolderEstimate:
    constant: float
    worst_pair: Tuple[float, ...]
    grid_size: int

    def to_dict(self):
        return {
            "constant": self.constant,
            "worst_pair": list(self.worst_pair),
            "grid_size": self.grid_size,
        }


@dataclass(frozen=True)
class Condition:
    name: str
    holds: bool
    witness: float

    def to_dict(self):
        return {"name": self.name, "holds": self.holds, "witness": self.witness}


@dataclass(frozen=True)
class AdmissibilityReport:
    conditions: Tuple[Condition, ...]

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.conditions)

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"holds": self.holds, "conditions": [c.to_dict() for c in self.conditions]}


@dataclass(frozen=True)
class MinimalityReport:
    holds: bool
    limit: Optional[float]
    min_excess: float
    witness: Optional[float]
    ess_sup: float

    def to_dict(self):
        return {
            "holds": self.holds,
            "limit": self.limit,
            "min_excess": self.min_excess,
            "witness": self.witness,
            "ess_sup": self.ess_sup,
        }


def probe_grid(r_min: float = 1e-8, r_max: float = 1e6, per_decade: int = 512) -> np.ndarray:
    if not 0 < r_min < r_max or per_decade < 1:
        raise ConfigurationError(f"bad probe grid {r_min=} {r_max=} {per_decade=}")
    decades = math.log10(r_max / r_min)
    return np.geomspace(r_min, r_max, int(round(decades * per_decade)) + 1)


def refine_grid(grid: np.ndarray) -> np.ndarray:
    """Superset of `grid` with the geometric midpoint of every gap added."""
    grid = np.asarray(grid, dtype=float)
    return np.union1d(grid, np.sqrt(grid[:-1] * grid[1:]))


def _grid(grid) -> np.ndarray:
    if grid is None:
        return probe_grid()
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ConfigurationError("probe grid is empty")
    return grid


def value(field: ExponentField, x) -> float:
    return float(field.radial(as_radius(x)))


def conjugate(field: ExponentField) -> ExponentField:
    if not field.ess_inf > 1:
        raise DomainError(f"conjugate exponent needs ess inf > 1, got {field.ess_inf}")
    if field.is_constant:
        q = field.value_at_origin
        return ExponentField.constant(q / (q - 1.0), field.n)
    if isinstance(field.form, Conjugate):
        return ExponentField(field.form.base, field.n)
    return ExponentField(Conjugate(field.form), field.n)


def sobolev_exponent(q1: ExponentField, beta: ExponentField, grid=None) -> ExponentField:
    if q1.n != beta.n:
        raise ConfigurationError(f"dimension mismatch: q1.n={q1.n} beta.n={beta.n}")
    n = q1.n
    if beta.is_constant and beta.value_at_origin == 0:
        return q1
    r = _grid(grid)
    recip = 1.0 / q1.radial(r) - beta.radial(r) / n
    extremes = [
        1.0 / q1.value_at_origin - beta.value_at_origin / n,
        1.0 / q1.ess_sup - beta.ess_sup / n,
    ]
    if q1.limit_at_infinity is not None and beta.limit_at_infinity is not None:
        extremes.append(1.0 / q1.limit_at_infinity - beta.limit_at_infinity / n)
    if recip.min() <= 0:
        i = int(np.argmin(recip))
        raise AdmissibilityError(
            f"sobolev exponent undefined: q1(x) beta(x) >= n at |x|={r[i]:.6g}", radius=float(r[i])
        )
    if min(extremes) <= 0 and (q1.is_constant or beta.is_constant):
        raise AdmissibilityError("sobolev exponent undefined: sup q1(x) beta(x) >= n")
    if q1.is_constant and beta.is_constant:
        return ExponentField.constant(
            Sobolev._combine(q1.value_at_origin, beta.value_at_origin, n), n
        )
    return ExponentField(Sobolev(q1.form, beta.form, n), n)


def gamma_weight_exponent(beta: ExponentField, c_inf: float) -> ExponentField:
    n = beta.n
    if c_inf < 0:
        raise DomainError(f"c_inf must be nonnegative, got {c_inf}")
    if beta.ess_inf < 0 or beta.ess_sup >= n:
        raise DomainError(f"gamma weight needs 0 <= beta(x) < n, got range {beta.bounds}")
    if c_inf == 0:
        gamma = ExponentField.constant(0.0, n)
    elif beta.is_constant:
        b = beta.value_at_origin
        gamma = ExponentField.constant(c_inf * b * (1.0 - b / n), n)
    else:
        gamma = ExponentField(GammaWeight(beta.form, float(c_inf), n), n)
    if gamma.ess_sup > n / 4 * c_inf * (1 + 1e-12) + 1e-15:
        raise AdmissibilityError(f"gamma exceeds n/4 c_inf: {gamma.ess_sup} > {n / 4 * c_inf}")
    return gamma


def weight(gamma: ExponentField):
    """Radial profile of (1+|x|)^{-gamma(x)}."""

    def profile(r):
        r = np.asarray(r, dtype=float)
        return (1.0 + r) ** (-gamma.radial(r))

    return profile


def estimate_log_holder_origin(
    field: ExponentField, grid=None, cutoff: float = 0.5
) -> LogHolderEstimate:
    r = _grid(grid)
    r = r[(r > 0) & (r <= cutoff)]
    if r.size == 0:
        raise ConfigurationError(f"no probe radii in (0, {cutoff}]")
    if r.min() > 1e-8 * (1 + 1e-9):
        logger.warning("origin probe grid starts at %g, above 1e-8", r.min())
    scores = np.abs(field.radial(r) - field.value_at_origin) * np.log(E + 1.0 / r)
    i = int(np.argmax(scores))
    return LogHolderEstimate(float(scores[i]), (float(r[i]),), int(r.size))


def estimate_log_holder_infinity(field: ExponentField, grid=None) -> LogHolderEstimate:
    lim = field.limit_at_infinity
    if lim is None:
        raise DomainError(f"{field.form.name} field has no radial limit at infinity")
    r = _grid(grid)
    if r.max() < 1e6 * (1 - 1e-9):
        logger.warning("infinity probe grid stops at %g, below 1e6", r.max())
    scores = np.abs(field.radial(r) - lim) * np.log(E + r)
    i = int(np.argmax(scores))
    return LogHolderEstimate(float(scores[i]), (float(r[i]),), int(r.size))


def estimate_log_holder_local(
    field: ExponentField, grid=None, max_separation: float = 0.5, separations: int = 64
) -> LogHolderEstimate:
    """sup |a(x) - a(y)| (-ln|x - y|) over same-ray pairs with |x - y| <= max_separation.

    Same-ray pairs dominate for radial fields: any other pair with the same radii is
    farther apart and the weight -ln|x - y| decreases with distance.
    """
    r = _grid(grid)
    deltas = np.geomspace(1e-10, max_separation, separations)
    x = r[:, None]
    y = x + deltas[None, :]
    diff = np.abs(field.radial(x) - field.radial(y))
    scores = diff * (-np.log(deltas))[None, :]
    i, j = np.unravel_index(int(np.argmax(scores)), scores.shape)
    return LogHolderEstimate(float(scores[i, j]), (float(x[i, 0]), float(y[i, j])), int(scores.size))


def check_log_holder(field: ExponentField, grid=None) -> Dict[str, Optional[LogHolderEstimate]]:
    out = {
        "origin": estimate_log_holder_origin(field, grid),
        "local": estimate_log_holder_local(field, grid),
    }
    try:
        out["infinity"] = estimate_log_holder_infinity(field, grid)
    except DomainError:
        out["infinity"] = None
    return out


def _sup_product(q1: ExponentField, beta: ExponentField, grid) -> Tuple[float, float]:
    """(sup q1(x) beta(x), witnessing radius) for nonnegative beta."""
    if q1.is_constant:
        return q1.value_at_origin * beta.ess_sup, math.nan
    if beta.is_constant:
        return q1.ess_sup * beta.value_at_origin, math.nan
    r = _grid(grid)
    prod = q1.radial(r) * beta.radial(r)
    candidates = [(float(prod.max()), float(r[int(np.argmax(prod))]))]
    candidates.append((q1.value_at_origin * beta.value_at_origin, 0.0))
    if q1.limit_at_infinity is not None and beta.limit_at_infinity is not None:
        candidates.append((q1.limit_at_infinity * beta.limit_at_infinity, math.inf))
    return max(candidates)


def check_beta_admissible(beta: ExponentField, q1: ExponentField, grid=None) -> AdmissibilityReport:
    if q1.n != beta.n:
        raise ConfigurationError(f"dimension mismatch: q1.n={q1.n} beta.n={beta.n}")
    n = q1.n
    beta0 = beta.ess_inf
    sup_prod, _ = _sup_product(q1, beta, grid)
    q_inf = q1.limit_at_infinity
    sup_inf = q_inf * beta.ess_sup if q_inf is not None else math.inf
    report = AdmissibilityReport(
        (
            Condition("beta_0_positive", beta0 > 0, beta0),
            Condition("sup_q1_beta_below_n", sup_prod < n, sup_prod),
            Condition("sup_q1_inf_beta_below_n", sup_inf < n, sup_inf),
        )
    )
    logger.debug("beta admissibility %s", report)
    return report


def check_minimal_at_infinity(q: ExponentField, grid=None) -> MinimalityReport:
    lim = q.limit_at_infinity
    if lim is None:
        raise DomainError(f"{q.form.name} field has no radial limit at infinity")
    r = _grid(grid)
    excess = q.radial(r) - lim
    i = int(np.argmin(excess))
    holds = lim > 1 and bool(excess.min() >= -MINIMALITY_TOL) and math.isfinite(q.ess_sup)
    return MinimalityReport(holds, lim, float(excess[i]), float(r[i]), q.ess_sup)
