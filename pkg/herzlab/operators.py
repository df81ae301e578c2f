import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np
from scipy.special import hyp2f1

from .errors import ConfigurationError, DomainError
from .exponent import ExponentField, weight
from .functions import RadialFunction
from .norms import NormValue, luxemburg_norm
from .quad import (
    DEFAULT_SPEC,
    QuadratureSpec,
    integrate_panels,
    integrate_support,
    kronrod_nodes,
)
from .util import as_radius, sphere_measure

logger = logging.getLogger(__name__)

KINDS = ("hardy", "hardy_star", "riesz")


def _moment(f, m: float, a: float, b: float) -> Optional[float]:
    moment = getattr(f, "moment", None)
    return moment(m, a, b) if moment is not None else None


def hardy(f, beta: ExponentField, x, spec: QuadratureSpec = None, use_moments: bool = True) -> float:
    """|x|^{beta(x) - n} times the integral of f over the ball |t| < |x|."""
    r = as_radius(x)
    if r == 0:
        raise DomainError("hardy operator is evaluated at x != 0")
    lo, _ = f.support
    if f.is_zero() or r <= lo:
        return 0.0
    n = f.n
    b = float(beta.radial(r))
    inner = _moment(f, n - 1, 0.0, r) if use_moments else None
    if inner is None:
        mass = integrate_support(f, 0.0, r, spec).value
    else:
        mass = sphere_measure(n) * inner
    return r ** (b - n) * mass


def hardy_star(
    f, beta: ExponentField, x, spec: QuadratureSpec = None, use_moments: bool = True
) -> float:
    """Integral of f(t) |t|^{beta(x) - n} over |t| >= |x|; beta is frozen at x."""
    r = as_radius(x)
    if r == 0:
        raise DomainError("adjoint hardy operator is evaluated at x != 0")
    _, hi = f.support
    if f.is_zero() or r >= hi:
        return 0.0
    n = f.n
    b = float(beta.radial(r))
    inner = _moment(f, b - 1, r, math.inf) if use_moments else None
    if inner is not None:
        return sphere_measure(n) * inner
    kernel = f.multiply(lambda t: t ** (b - n))
    return integrate_support(kernel, r, math.inf, spec).value


def riesz_kernel(n: int, r: float, rho: np.ndarray, b: float) -> np.ndarray:
    """Angular integral of |x - y|^{b - n} over |y| = rho, for |x| = r, per unit rho^{n-1}."""
    rho = np.asarray(rho, dtype=float)
    if r == 0:
        return sphere_measure(n) * rho ** (b - n)
    with np.errstate(divide="ignore", invalid="ignore"):
        if n == 1:
            return np.abs(r - rho) ** (b - 1) + (r + rho) ** (b - 1)
        if n == 2:
            big, small = np.maximum(r, rho), np.minimum(r, rho)
            a = (2 - b) / 2
            return 2 * np.pi * big ** (b - 2) * hyp2f1(a, a, 1.0, (small / big) ** 2)
        if b == 1:
            return 2 * np.pi / (r * rho) * np.log((r + rho) / np.abs(r - rho))
        return (
            2 * np.pi / (r * rho * (b - 1)) * ((r + rho) ** (b - 1) - np.abs(r - rho) ** (b - 1))
        )


def riesz(f, beta: ExponentField, x, spec: QuadratureSpec = None) -> float:
    """Integral of f(y) |x - y|^{beta(x) - n} over R^n for radial f."""
    spec = spec or DEFAULT_SPEC
    r = as_radius(x)
    n = f.n
    b = float(beta.radial(r))
    # beta = n leaves the constant kernel, i.e. the mass of f
    if not 0 < b <= n:
        raise DomainError(f"riesz potential needs 0 < beta(x) <= n, got beta={b} at |x|={r}")
    if f.is_zero():
        return 0.0
    lo, hi = f.support

    def evaluate(a, c):
        rho = kronrod_nodes(a, c)
        return f.profile(rho) * rho ** (n - 1) * riesz_kernel(n, r, rho, b)

    singular = tuple(f.singular()) + ((r,) if r > 0 else (0.0,))
    result, _ = integrate_panels(evaluate, lo, hi, spec, tuple(f.breakpoints()), singular)
    return result.value


_POINTWISE = {"hardy": hardy, "hardy_star": hardy_star, "riesz": riesz}


def evaluate(kind: str, f, beta: ExponentField, x, spec: QuadratureSpec = None) -> float:
    if kind not in _POINTWISE:
        raise ConfigurationError(f"unknown operator {kind!r}; expected one of {KINDS}")
    return _POINTWISE[kind](f, beta, x, spec)


@dataclass(frozen=True, eq=False)
class OperatorImage(RadialFunction):
    """Lazily evaluated (1+|x|)^{-gamma(x)} T f, optionally restricted to lo < |x| <= hi.

    kind is one of hardy, hardy_star, riesz, or identity for a weighted source.
    """

    source: RadialFunction
    kind: str
    beta: Optional[ExponentField] = None
    gamma: Optional[ExponentField] = None
    spec: QuadratureSpec = DEFAULT_SPEC
    lo: float = 0.0
    hi: float = math.inf
    _memo: Dict[float, float] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind != "identity" and self.kind not in KINDS:
            raise ConfigurationError(f"unknown operator {self.kind!r}; expected one of {KINDS}")
        if self.kind != "identity" and self.beta is None:
            raise ConfigurationError(f"{self.kind} image needs a beta field")
        if self.gamma is not None and self.gamma.ess_inf < 0:
            raise DomainError(f"weight exponent must be nonnegative, got ess inf {self.gamma.ess_inf}")

    @property
    def n(self):
        return self.source.n

    @property
    def weighted(self) -> bool:
        return self.gamma is not None and not (self.gamma.is_constant and self.gamma.value_at_origin == 0)

    @property
    def support(self):
        if self.source.is_zero():
            return (0.0, 0.0)
        slo, shi = self.source.support
        if self.kind == "hardy":
            lo, hi = slo, math.inf
        elif self.kind == "hardy_star":
            lo, hi = 0.0, shi
        elif self.kind == "riesz":
            lo, hi = 0.0, math.inf
        else:
            lo, hi = slo, shi
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        return (lo, hi) if hi > lo else (0.0, 0.0)

    def breakpoints(self):
        pts = list(self.source.breakpoints())
        pts += [b for b in (self.lo, self.hi) if 0 < b < math.inf]
        for fld in (self.beta, self.gamma):
            if fld is not None:
                pts += list(fld.breakpoints())
        return tuple(sorted(set(pts)))

    def singular(self):
        lo, _ = self.support
        return (0.0,) if lo == 0 else ()

    def point(self, r: float) -> float:
        """Unweighted operator value at radius r, memoized."""
        if r not in self._memo:
            if self.kind == "identity":
                self._memo[r] = float(self.source.profile(np.asarray([r]))[0])
            else:
                self._memo[r] = _POINTWISE[self.kind](self.source, self.beta, r, self.spec)
        return self._memo[r]

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.support
        inside = (r > lo) & (r <= hi)
        out = np.zeros(r.shape)
        if not inside.any():
            return out
        radii, inverse = np.unique(r[inside], return_inverse=True)
        values = np.asarray([self.point(float(s)) for s in radii])[inverse]
        if self.weighted:
            values = values * weight(self.gamma)(r[inside])
        out[inside] = values
        return out

    def restrict(self, lo, hi):
        return replace(self, lo=max(self.lo, lo), hi=min(self.hi, hi), _memo=self._memo)


def image(kind: str, f, beta: ExponentField, gamma: ExponentField = None, spec=None) -> OperatorImage:
    return OperatorImage(f, kind, beta, gamma, spec or DEFAULT_SPEC)


def apply_weight(target, gamma: ExponentField) -> OperatorImage:
    """Pointwise product with (1+|x|)^{-gamma(x)}."""
    if gamma.ess_inf < 0:
        raise DomainError(f"weight exponent must be nonnegative, got ess inf {gamma.ess_inf}")
    if isinstance(target, OperatorImage):
        if target.weighted:
            raise ConfigurationError("operator image already carries a weight")
        return replace(target, gamma=gamma, _memo=target._memo)
    return OperatorImage(target, "identity", None, gamma)


def operator_block_norm(
    kind: str,
    f,
    beta: ExponentField,
    gamma: Optional[ExponentField],
    k: int,
    q: ExponentField,
    spec: QuadratureSpec = None,
    source_image: Optional[OperatorImage] = None,
) -> NormValue:
    """||(1+|x|)^{-gamma(x)} T f chi_k||_{L^q}.

    Passing `source_image` reuses its memoized pointwise values across blocks.
    """
    spec = spec or DEFAULT_SPEC
    spec.check_index(k)
    img = source_image if source_image is not None else image(kind, f, beta, gamma, spec)
    block = img.restrict_annulus(k)
    if block.is_zero():
        return NormValue(0.0, 0.0, {"k": k})
    out = luxemburg_norm(block, q, spec)
    logger.debug("%s block %d: %.12g", kind, k, out.value)
    return out
