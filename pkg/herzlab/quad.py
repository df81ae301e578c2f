import logging
import math
import numbers
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, QuadratureError, TruncationError, config_field
from .util import (
    annulus_index,
    check_dimension,
    dyadic_radius,
    merge_points,
    sphere_measure,
)

logger = logging.getLogger(__name__)

ABS_FLOOR = 1e-30
GRADING_LEVELS = 30
STALL_RATIO = 1 - 1e-9

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15)
_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

XK = np.concatenate([-_XGK[:-1], _XGK[::-1]])
WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
WG = np.zeros(15)
for _i in (1, 3, 5):
    WG[_i] = WG[14 - _i] = _WG[_i // 2]
WG[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    max_subdivisions: int = 2**20
    dyadic_window: Tuple[int, int] = (-40, 40)
    angular_points: int = 64

    def __post_init__(self):
        with config_field("quadrature spec"):
            object.__setattr__(self, "rel_tol", float(self.rel_tol))
            object.__setattr__(self, "max_subdivisions", int(self.max_subdivisions))
            object.__setattr__(self, "angular_points", int(self.angular_points))
            k_min, k_max = (float(k) for k in self.dyadic_window)
        if not self.rel_tol > 0:
            raise ConfigurationError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_subdivisions < 1:
            raise ConfigurationError(
                f"max_subdivisions must be positive, got {self.max_subdivisions}"
            )
        if not (k_min.is_integer() and k_max.is_integer()):
            raise ConfigurationError(f"dyadic_window must hold integers, got {self.dyadic_window}")
        if not k_min < k_max:
            raise ConfigurationError(f"dyadic_window needs k_min < k_max, got {self.dyadic_window}")
        if self.angular_points < 2:
            raise ConfigurationError(f"angular_points must be >= 2, got {self.angular_points}")
        object.__setattr__(self, "dyadic_window", (int(k_min), int(k_max)))

    def replace(self, **changes) -> "QuadratureSpec":
        return replace(self, **changes)

    def check_index(self, k: int) -> int:
        k_min, k_max = self.dyadic_window
        if not k_min <= k <= k_max:
            raise ConfigurationError(f"dyadic index {k} outside window {self.dyadic_window}")
        return k

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dyadic_window"] = list(self.dyadic_window)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QuadratureSpec":
        with config_field("quadrature spec"):
            d = dict(d)
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown quadrature spec keys {sorted(unknown)}")
        return cls(**d)


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class IntegralValue:
    value: float
    err_estimate: float
    panels_used: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


ZERO = IntegralValue(0.0, 0.0, 0)


@dataclass(frozen=True)
class Integrand:
    """A function on R^n handed to the integrators.

    Radial integrands are given by their profile r -> g(r); non-radial ones take points
    of shape (..., n) and are averaged over spheres with a product rule.
    """

    fn: Callable
    n: int = 1
    radial: bool = True
    breakpoints: Tuple[float, ...] = ()
    singular: Tuple[float, ...] = ()
    support: Tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        check_dimension(self.n)

    @classmethod
    def wrap(cls, g, n: Optional[int] = None) -> "Integrand":
        if isinstance(g, Integrand):
            return g
        if hasattr(g, "profile"):
            return cls(
                g.profile,
                g.n,
                breakpoints=tuple(g.breakpoints()),
                singular=tuple(g.singular()),
                support=tuple(g.support),
            )
        if isinstance(g, numbers.Real):
            c = float(g)
            return cls(lambda r: np.full(np.shape(r), c), n or 1)
        if callable(g):
            return cls(g, n or 1)
        raise ConfigurationError(f"cannot integrate {type(g).__name__}")

    def mean_profile(self, r: np.ndarray, angular_points: int = 64) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.radial:
            return np.broadcast_to(np.asarray(self.fn(r), dtype=float), r.shape)
        if self.n == 1:
            x = r[..., None]
            return 0.5 * (self.fn(x) + self.fn(-x))
        phi = 2 * np.pi * np.arange(angular_points) / angular_points
        if self.n == 2:
            dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
            return self.fn(r[..., None, None] * dirs).mean(axis=-1)
        t, w = np.polynomial.legendre.leggauss(max(angular_points // 2, 4))
        s = np.sqrt(1 - t**2)
        dirs = np.stack(
            [
                s[:, None] * np.cos(phi)[None, :],
                s[:, None] * np.sin(phi)[None, :],
                np.broadcast_to(t[:, None], (t.size, phi.size)),
            ],
            axis=-1,
        )
        vals = self.fn(r[..., None, None, None] * dirs).mean(axis=-1)
        return vals @ (w / 2)


def kronrod_nodes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return center[:, None] + half[:, None] * XK[None, :]


@dataclass
class Panels:
    a: np.ndarray
    b: np.ndarray
    seg: np.ndarray
    edges: np.ndarray
    K: Optional[np.ndarray] = None
    err: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.a.size)

    def result(self) -> IntegralValue:
        return IntegralValue(float(self.K.sum()), float(self.err.sum()), self.size)

    def segment_sums(self) -> np.ndarray:
        return np.bincount(self.seg, weights=self.K, minlength=self.edges.size - 1)


def _apply_rule(evaluate, a, b):
    vals = np.asarray(evaluate(a, b), dtype=float)
    half = 0.5 * (b - a)
    K = half * (vals @ WK)
    G = half * (vals @ WG)
    return K, np.abs(K - G)


def adaptive(evaluate, panels: Panels, rel_tol: float, max_panels: int) -> Panels:
    """Bisect panels until the summed |K15 - G7| meets rel_tol.

    `evaluate(a, b)` returns integrand values at the Kronrod nodes of every panel,
    shape (P, 15).
    """
    a, b, seg = panels.a, panels.b, panels.seg
    K, err = _apply_rule(evaluate, a, b)
    while True:
        total = float(K.sum())
        err_total = float(err.sum())
        best = IntegralValue(total, err_total, int(a.size))
        if not (math.isfinite(total) and math.isfinite(err_total)):
            raise QuadratureError("integrand is not finite on the integration range", best)
        tol = max(rel_tol * abs(total), ABS_FLOOR)
        if err_total <= tol:
            break
        mid = 0.5 * (a + b)
        splittable = (mid > a) & (mid < b)
        if not splittable.any():
            raise QuadratureError(f"panels exhausted with error {err_total:.3g} > {tol:.3g}", best)
        pick = (err > tol / a.size) & splittable
        pick[int(np.argmax(np.where(splittable, err, -1.0)))] = True
        if a.size + int(pick.sum()) > max_panels:
            raise QuadratureError(
                f"max_subdivisions={max_panels} reached with error {err_total:.3g} > {tol:.3g}",
                best,
            )
        na = np.concatenate([a[pick], mid[pick]])
        nb = np.concatenate([mid[pick], b[pick]])
        ns = np.concatenate([seg[pick], seg[pick]])
        nK, nerr = _apply_rule(evaluate, na, nb)
        keep = ~pick
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        seg = np.concatenate([seg[keep], ns])
        K = np.concatenate([K[keep], nK])
        err = np.concatenate([err[keep], nerr])
    return Panels(a, b, seg, panels.edges, K, err)


def _graded(u: float, v: float, toward_u: bool, toward_v: bool) -> np.ndarray:
    """Panel edges of [u, v] graded geometrically (ratio 1/2) toward singular ends."""
    if toward_u and toward_v:
        m = 0.5 * (u + v)
        return np.concatenate([_graded(u, m, True, False)[:-1], _graded(m, v, False, True)])
    steps = 0.5 ** np.arange(GRADING_LEVELS, 0, -1)
    if toward_u:
        inner = u + (v - u) * steps
    elif toward_v:
        inner = v - (v - u) * steps[::-1]
    else:
        inner = np.empty(0)
    pts = np.concatenate([[u], inner, [v]])
    return np.unique(pts[(pts >= u) & (pts <= v)])


def initial_panels(
    lo: float, hi: float, spec: QuadratureSpec, breakpoints=(), singular=()
) -> Panels:
    """Segments of [lo, hi] cut at dyadic radii, breakpoints and singular points.

    The segment [lo, 2^{k_min - 1}] is the origin panel when lo == 0.
    """
    k_min, k_max = spec.dyadic_window
    dyadic = [dyadic_radius(j) for j in range(k_min - 1, k_max + 1)]
    inner = merge_points(dyadic, breakpoints, singular, lo=lo, hi=hi)
    edges = np.asarray((lo,) + inner + (hi,), dtype=float)
    sing = set(float(s) for s in singular)
    if lo == 0:
        sing.add(0.0)
    a, b, seg = [], [], []
    for i, (u, v) in enumerate(zip(edges[:-1], edges[1:])):
        pts = _graded(u, v, u in sing, v in sing)
        a.append(pts[:-1])
        b.append(pts[1:])
        seg.append(np.full(pts.size - 1, i))
    return Panels(np.concatenate(a), np.concatenate(b), np.concatenate(seg), edges)


def _tail(panels: Panels, spec: QuadratureSpec, value: float, tol: float):
    """Geometric tail beyond 2^{k_max} from the ratio of the last two dyadic shells."""
    k_max = spec.dyadic_window[1]
    sums = panels.segment_sums()
    shells = np.asarray([annulus_index(e) for e in panels.edges[1:]])
    if panels.edges[0] > dyadic_radius(k_max - 2):
        raise TruncationError(
            "range too narrow below 2^k_max for a tail estimate",
            IntegralValue(value, math.inf, panels.size),
        )
    last = abs(float(sums[shells == k_max].sum()))
    prev = abs(float(sums[shells == k_max - 1].sum()))
    if last == 0:
        return 0.0
    best = IntegralValue(value, math.inf, panels.size)
    # shells shrinking by less than STALL_RATIO count as not decaying
    if prev == 0 or last >= prev * STALL_RATIO:
        raise TruncationError(
            f"integrand does not decay beyond 2^{k_max} (last shells {prev:.3g}, {last:.3g})",
            best,
        )
    rho = last / prev
    tail = last * rho / (1 - rho)
    if tail > tol:
        extra = math.log(tol * (1 - rho) / last) / math.log(rho) - 1
        required = k_max + max(1, math.ceil(extra))
        raise TruncationError(
            f"tail beyond 2^{k_max} estimated at {tail:.3g} exceeds tolerance {tol:.3g}",
            IntegralValue(value + tail, tail, panels.size),
            required_k_max=required,
        )
    return tail


def integrate_panels(
    evaluate,
    lo: float,
    hi: float,
    spec: QuadratureSpec,
    breakpoints=(),
    singular=(),
    warm: Optional[Panels] = None,
) -> Tuple[IntegralValue, Panels]:
    """Integrate over [lo, hi] (hi may be inf) with dyadic truncation at 2^{k_max}."""
    if not hi > lo:
        return ZERO, None
    top = dyadic_radius(spec.dyadic_window[1])
    if lo >= top:
        raise ConfigurationError(
            f"integration range starts at {lo:g}, beyond the dyadic window {spec.dyadic_window}"
        )
    truncated = hi > top
    rel_tol = spec.rel_tol / 2 if truncated else spec.rel_tol
    panels = warm or initial_panels(lo, min(hi, top), spec, breakpoints, singular)
    panels = adaptive(evaluate, panels, rel_tol, spec.max_subdivisions)
    result = panels.result()
    if truncated:
        tol = max(rel_tol * abs(result.value), ABS_FLOOR)
        tail = _tail(panels, spec, result.value, tol)
        result = IntegralValue(result.value, result.err_estimate + tail, result.panels_used)
    logger.debug(
        "integrated (%g, %g]: %.12g +- %.3g over %d panels",
        lo,
        hi,
        result.value,
        result.err_estimate,
        result.panels_used,
    )
    return result, panels


def _evaluator(g: Integrand, spec: QuadratureSpec):
    sigma = sphere_measure(g.n)
    n = g.n

    def evaluate(a, b):
        x = kronrod_nodes(a, b)
        return sigma * x ** (n - 1) * g.mean_profile(x, spec.angular_points)

    return evaluate


def integrate_support(
    g, lo: float = 0.0, hi: float = math.inf, spec: QuadratureSpec = None, n: Optional[int] = None
) -> IntegralValue:
    """Integral of g over the shell lo < |x| <= hi, restricted to g's support."""
    spec = spec or DEFAULT_SPEC
    g = Integrand.wrap(g, n)
    lo, hi = max(lo, g.support[0]), min(hi, g.support[1])
    if not hi > lo:
        return ZERO
    result, _ = integrate_panels(_evaluator(g, spec), lo, hi, spec, g.breakpoints, g.singular)
    return result


def integrate_annulus(g, k: int, spec: QuadratureSpec = None, n: Optional[int] = None):
    spec = spec or DEFAULT_SPEC
    spec.check_index(k)
    return integrate_support(g, dyadic_radius(k - 1), dyadic_radius(k), spec, n)


def integrate_ball(g, k: int, spec: QuadratureSpec = None, n: Optional[int] = None):
    spec = spec or DEFAULT_SPEC
    spec.check_index(k)
    return integrate_support(g, 0.0, dyadic_radius(k), spec, n)


def integrate_exterior(g, k: int, spec: QuadratureSpec = None, n: Optional[int] = None):
    spec = spec or DEFAULT_SPEC
    spec.check_index(k)
    return integrate_support(g, dyadic_radius(k), math.inf, spec, n)


class ModularEvaluator:
    """F_q(f/eta) for a sequence of eta sharing one set of node evaluations.

    The panel set of each call seeds the next one, and |f| and q are evaluated once per
    panel, so bisection on eta only pays for newly split panels.
    """

    def __init__(self, f, q, spec: QuadratureSpec = None):
        self.f = f
        self.q = q
        self.spec = spec or DEFAULT_SPEC
        self.n = f.n
        self.sigma = sphere_measure(self.n)
        self._cache: Dict[Tuple[float, float], Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._panels: Optional[Panels] = None
        self.calls = 0

    @property
    def support(self) -> Tuple[float, float]:
        return tuple(self.f.support)

    def _node_values(self, a, b):
        keys = list(zip(a.tolist(), b.tolist()))
        missing = [i for i, k in enumerate(keys) if k not in self._cache]
        if missing:
            x = kronrod_nodes(a[missing], b[missing])
            fv = np.abs(np.asarray(self.f.profile(x), dtype=float))
            qv = self.q.radial(x)
            jac = self.sigma * x ** (self.n - 1)
            for i, fr, qr, jr in zip(missing, fv, qv, jac):
                self._cache[keys[i]] = (fr, qr, jr)
        rows = [self._cache[k] for k in keys]
        return tuple(np.stack(col) for col in zip(*rows))

    def __call__(self, eta: float = 1.0) -> IntegralValue:
        lo, hi = self.support
        if not hi > lo:
            return ZERO
        self.calls += 1

        def evaluate(a, b):
            fv, qv, jac = self._node_values(a, b)
            with np.errstate(over="ignore", under="ignore"):
                return np.where(fv > 0, (fv / eta) ** qv, 0.0) * jac

        breakpoints = tuple(self.f.breakpoints()) + tuple(self.q.breakpoints())
        result, panels = integrate_panels(
            evaluate, lo, hi, self.spec, breakpoints, tuple(self.f.singular()), self._panels
        )
        if panels is not None:
            self._panels = Panels(panels.a, panels.b, panels.seg, panels.edges)
        return result


def modular(f, q, spec: QuadratureSpec = None, eta: float = 1.0) -> IntegralValue:
    """F_q(f / eta) = integral of |f(x)/eta|^{q(x)} over R^n."""
    if f.n != q.n:
        raise ConfigurationError(f"dimension mismatch: f.n={f.n} q.n={q.n}")
    return ModularEvaluator(f, q, spec)(eta)
