import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, DivergenceError, DomainError
from .exponent import ExponentField, weight
from .quad import DEFAULT_SPEC, ModularEvaluator, QuadratureSpec
from .util import canonical_float, clip_window

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8
BRACKET_REL_WIDTH = 1e-12
MAX_DOUBLINGS = 200
MAX_BISECTIONS = 200
COMBINE_MODES = ("joint", "sum")
TAIL_STEPS = 64


@dataclass(frozen=True)
class NormValue:
    value: float
    err_estimate: float
    meta: Dict = field(default_factory=dict, compare=False)

    def scaled(self, c: float) -> "NormValue":
        return NormValue(abs(c) * self.value, abs(c) * self.err_estimate, dict(self.meta))

    @property
    def rel_err(self) -> float:
        return self.err_estimate / self.value if self.value else 0.0

    def to_dict(self) -> dict:
        return {
            "value": canonical_float(self.value),
            "err_estimate": canonical_float(self.err_estimate),
            "meta": {k: canonical_float(v) if isinstance(v, float) else v for k, v in self.meta.items()},
        }


ZERO_NORM = NormValue(0.0, 0.0, {"iterations": 0})


def _check_dims(f, q: ExponentField):
    if f.n != q.n:
        raise ConfigurationError(f"dimension mismatch: f.n={f.n} q.n={q.n}")


def luxemburg_norm(
    f, q: ExponentField, spec: QuadratureSpec = None, tol: float = RESIDUAL_TOL
) -> NormValue:
    """inf{eta > 0 : F_q(f/eta) <= 1}.

    The modular is strictly decreasing in eta: the root is bracketed by doubling and then
    narrowed by bisection in log(eta), with a log-log secant step whenever it lands
    inside the bracket (exact in one step for constant q).
    """
    _check_dims(f, q)
    spec = spec or DEFAULT_SPEC
    if f.is_zero():
        return ZERO_NORM
    modular = ModularEvaluator(f, q, spec)

    def F(log_eta):
        v = modular(math.exp(log_eta))
        return v.value, v.err_estimate

    start = (0.0,) + F(0.0)
    if start[1] == 0:
        return NormValue(0.0, start[2], {"iterations": 0, "doublings": 0})
    step = math.log(2.0) if start[1] > 1 else -math.log(2.0)
    prev, doublings = start, 0
    while True:
        if doublings >= MAX_DOUBLINGS:
            raise DivergenceError(
                f"no Luxemburg bracket after {MAX_DOUBLINGS} doublings (modular {prev[1]:.3g})"
            )
        cur = (prev[0] + step,) + F(prev[0] + step)
        doublings += 1
        if (cur[1] > 1) != (prev[1] > 1):
            break
        prev = cur
    # lo: modular above 1, hi: modular at or below 1
    lo, hi = sorted([prev, cur])
    x_lo, y_lo, x_hi, y_hi = lo[0], lo[1], hi[0], hi[1]
    best = min(lo, hi, key=lambda v: abs(v[1] - 1))
    iterations = 0
    last_width = x_hi - x_lo
    while iterations < MAX_BISECTIONS:
        if abs(best[1] - 1) <= tol:
            break
        width = x_hi - x_lo
        if width <= BRACKET_REL_WIDTH:
            break
        x = 0.5 * (x_lo + x_hi)
        if y_lo > 0 and y_hi > 0 and width < 0.75 * last_width:
            ly_lo, ly_hi = math.log(y_lo), math.log(y_hi)
            if ly_lo != ly_hi:
                secant = x_lo + ly_lo * (x_hi - x_lo) / (ly_lo - ly_hi)
                if x_lo + 0.01 * width < secant < x_hi - 0.01 * width:
                    x = secant
        last_width = width
        y, e = F(x)
        iterations += 1
        if abs(y - 1) < abs(best[1] - 1):
            best = (x, y, e)
        if y > 1:
            x_lo, y_lo = x, y
        else:
            x_hi, y_hi = x, y
    x, y, e = best
    eta = math.exp(x)
    residual = y - 1
    # F(eta) ~ eta^{-q}: a modular offset d moves eta by about eta d / q
    q_lo = q.ess_inf if q.ess_inf > 0 else 1.0
    err = eta * (abs(residual) + e) / q_lo
    if abs(residual) > tol:
        err += eta * math.expm1(x_hi - x_lo)
        logger.warning(
            "Luxemburg bisection stopped on bracket width with residual %.3g > %.3g",
            residual,
            tol,
        )
    logger.debug(
        "luxemburg norm %.12g after %d doublings, %d bisections, residual %.3g",
        eta,
        doublings,
        iterations,
        residual,
    )
    return NormValue(
        eta,
        err,
        {
            "iterations": iterations,
            "doublings": doublings,
            "residual": residual,
            "modular_calls": modular.calls,
        },
    )


def weighted_norm(
    f, gamma: ExponentField, q: ExponentField, spec: QuadratureSpec = None
) -> NormValue:
    """||(1+|x|)^{-gamma(x)} f||_{L^q}."""
    if gamma.is_constant and gamma.value_at_origin == 0:
        return luxemburg_norm(f, q, spec)
    return luxemburg_norm(f.multiply(weight(gamma), gamma.breakpoints()), q, spec)


def candidate_blocks(f, spec: QuadratureSpec = None) -> List[int]:
    """Dyadic indices k whose annulus A_k meets the support of f, inside the window."""
    spec = spec or DEFAULT_SPEC
    window = f.support_window()
    if window is None:
        return []
    clipped = clip_window(window, spec.dyadic_window)
    if clipped is None:
        return []
    return list(range(clipped[0], clipped[1] + 1))


def block_norms(
    f, q: ExponentField, spec: QuadratureSpec = None, multiplier: Optional[ExponentField] = None
) -> List[Tuple[int, NormValue]]:
    """||f chi_k||_{L^q} for every candidate block, or ||2^{k a(.)} f chi_k|| given a = multiplier."""
    _check_dims(f, q)
    out = []
    for k in candidate_blocks(f, spec):
        block = f.restrict_annulus(k)
        if block.is_zero():
            out.append((k, ZERO_NORM))
            continue
        if multiplier is None:
            out.append((k, luxemburg_norm(block, q, spec)))
        elif multiplier.is_constant:
            scale = 2.0 ** (k * multiplier.value_at_origin)
            out.append((k, luxemburg_norm(block, q, spec).scaled(scale)))
        else:
            factor = _dyadic_multiplier(k, multiplier)
            out.append((k, luxemburg_norm(block.multiply(factor, multiplier.breakpoints()), q, spec)))
        logger.debug("block %d: %s", k, out[-1][1].value)
    return out


def _dyadic_multiplier(k: int, alpha: ExponentField):
    def factor(r):
        return 2.0 ** (k * alpha.radial(r))

    return factor


def _check_params(lam: float, p: float):
    if not p > 0:
        raise ConfigurationError(f"p must be positive, got {p}")
    if lam < 0:
        raise ConfigurationError(f"lambda must be nonnegative, got {lam}")


def _edge_ratio(edge: float, inner: float) -> Optional[float]:
    """Outward ratio of p-th power block norms at a window edge, None when not decaying."""
    if edge == 0:
        return 0.0
    if inner == 0 or edge >= inner:
        return None
    return edge / inner


def _geometric(start: float, rho: float, remainder: bool) -> List[float]:
    terms = [start * rho**m for m in range(1, TAIL_STEPS + 1)]
    if remainder:
        terms[-1] += start * rho ** (TAIL_STEPS + 1) / (1 - rho)
    return terms


def _extend(ks: Sequence[int], powered: np.ndarray, lam: float, f, spec: QuadratureSpec):
    """Continue the p-th power block norms geometrically past the window edges f crosses.

    Returns the extended indices and values with the lower and upper tail sums; the
    upper tail is inf when the blocks grow there and lam > 0 keeps the sup finite.
    """
    window = f.support_window()
    k_min, k_max = spec.dyadic_window
    ks, values = list(ks), [float(v) for v in powered]
    head, tail = [], []
    lower = upper = 0.0
    if window[0] < k_min and ks[0] == k_min:
        if len(values) == 1 and values[0] > 0:
            raise DivergenceError(
                f"one block inside the window cannot bound the blocks below k={k_min}; "
                f"widen dyadic_window"
            )
        rho = _edge_ratio(values[0], values[1] if len(values) > 1 else 0.0)
        if rho is None:
            raise DivergenceError("block norms are not decaying toward the origin at the window edge")
        if rho > 0:
            head = _geometric(values[0], rho, remainder=True)[::-1]
            lower = values[0] * rho / (1 - rho)
    if window[1] > k_max and ks[-1] == k_max:
        last, prev = values[-1], values[-2] if len(values) > 1 else 0.0
        rho = _edge_ratio(last, prev)
        if rho is None:
            if lam == 0 or prev == 0:
                raise DivergenceError("Herz-Morrey block sum is not converging at the window edge")
            tail, upper = _geometric(last, last / prev, remainder=False), math.inf
        elif rho > 0:
            tail = _geometric(last, rho, remainder=True)
            upper = last * rho / (1 - rho)
    ext_ks = list(range(ks[0] - len(head), ks[0])) + ks + list(range(ks[-1] + 1, ks[-1] + 1 + len(tail)))
    if lower or upper:
        logger.debug("window tails: lower %.3g upper %.3g", lower, upper)
    return ext_ks, np.asarray(head + values + tail), lower, upper


def _candidates(ks: Sequence[int], powered: np.ndarray, lam: float, p: float, combine=None):
    """2^{-k0 lam} times the 1/p root of the partial sum up to k0, for every k0."""
    ks_arr = np.asarray(ks, dtype=float)
    if combine is None:
        inner = np.cumsum(powered) ** (1.0 / p)
    else:
        neg = np.cumsum(np.where(ks_arr < 0, powered, 0.0))
        pos = np.cumsum(np.where(ks_arr >= 0, powered, 0.0))
        if combine == "joint":
            inner = (neg + pos) ** (1.0 / p)
        else:
            inner = neg ** (1.0 / p) + pos ** (1.0 / p)
    return 2.0 ** (-ks_arr * lam) * inner


def _fold(blocks: List[Tuple[int, NormValue]], scalars, lam, p, f, spec, combine=None):
    ks = [k for k, _ in blocks]
    vals = np.asarray([b.value for _, b in blocks]) * np.asarray(scalars)
    powered = vals**p
    ext_ks, ext_powered, lower, upper = _extend(ks, powered, lam, f, spec)
    sups = _candidates(ext_ks, ext_powered, lam, p, combine)
    i = int(np.argmax(sups))
    if math.isinf(upper) and i == len(sups) - 1:
        raise DivergenceError("Herz-Morrey sup is still growing past the window edge")
    if lower and i == 0:
        raise DivergenceError("Herz-Morrey sup is still growing below the window edge")
    value = float(sups[i])
    inside = float(_candidates(ks, powered, lam, p, combine).max())
    rel = max((b.rel_err for _, b in blocks), default=0.0)
    meta = {
        "k0": ext_ks[i],
        "window": [ks[0], ks[-1]],
        "blocks": sum(1 for _, b in blocks if b.value > 0),
        "tail_bound": upper,
        "lower_tail_bound": lower,
    }
    # err covers the whole contribution of the extrapolated tails
    return NormValue(value, value * rel + abs(value - inside), meta)


def herz_morrey_norm(
    f, alpha: ExponentField, lam: float, p: float, q: ExponentField, spec: QuadratureSpec = None
) -> NormValue:
    """sup_{k0} 2^{-k0 lam} (sum_{k <= k0} ||2^{k alpha(.)} f chi_k||^p)^{1/p}.

    The multiplier 2^{k alpha(x)} stays inside the Luxemburg norm.
    """
    _check_params(lam, p)
    blocks = block_norms(f, q, spec, multiplier=alpha)
    if not any(b.value > 0 for _, b in blocks):
        return ZERO_NORM
    return _fold(blocks, np.ones(len(blocks)), lam, p, f, spec or DEFAULT_SPEC)


def herz_norm(
    f, alpha: ExponentField, p: float, q: ExponentField, spec: QuadratureSpec = None
) -> NormValue:
    """(sum_k ||2^{k alpha(.)} f chi_k||^p)^{1/p}, the homogeneous Herz norm."""
    _check_params(0.0, p)
    blocks = block_norms(f, q, spec, multiplier=alpha)
    if not any(b.value > 0 for _, b in blocks):
        return ZERO_NORM
    # with lam = 0 the sup over k0 is the full sum
    total = _fold(blocks, np.ones(len(blocks)), 0.0, p, f, spec or DEFAULT_SPEC)
    meta = {k: v for k, v in total.meta.items() if k != "k0"}
    return NormValue(total.value, total.err_estimate, meta)


def split_scalars(ks: Sequence[int], alpha: ExponentField) -> np.ndarray:
    """2^{k alpha(0)} for k < 0 and 2^{k alpha_inf} for k >= 0."""
    a_inf = alpha.limit_at_infinity
    if a_inf is None:
        raise DomainError(f"split Herz-Morrey norm needs alpha with a radial limit, got {alpha.form.name}")
    a0 = alpha.value_at_origin
    return np.asarray([2.0 ** (k * (a0 if k < 0 else a_inf)) for k in ks])


def herz_morrey_norm_split(
    f,
    alpha: ExponentField,
    lam: float,
    p: float,
    q: ExponentField,
    spec: QuadratureSpec = None,
    combine: str = "joint",
) -> NormValue:
    """Herz-Morrey norm with scalar factors 2^{k alpha(0)} (k < 0) and 2^{k alpha_inf} (k >= 0).

    combine="joint" adds the p-th power sums of both sides before the 1/p root;
    combine="sum" adds the two roots.
    """
    _check_params(lam, p)
    if combine not in COMBINE_MODES:
        raise ConfigurationError(f"combine must be one of {COMBINE_MODES}, got {combine!r}")
    blocks = block_norms(f, q, spec)
    if not any(b.value > 0 for _, b in blocks):
        return ZERO_NORM
    scalars = split_scalars([k for k, _ in blocks], alpha)
    return _fold(blocks, scalars, lam, p, f, spec or DEFAULT_SPEC, combine=combine)

