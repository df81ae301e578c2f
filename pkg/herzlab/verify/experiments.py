import inspect
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import AdmissibilityError, ConfigurationError, DomainError, HerzLabError
from ..exponent import (
    ExponentField,
    check_beta_admissible,
    check_minimal_at_infinity,
    conjugate,
    estimate_log_holder_infinity,
    gamma_weight_exponent,
    probe_grid,
    sobolev_exponent,
)
from ..functions import TestFunction
from ..norms import (
    block_norms,
    herz_morrey_norm,
    herz_morrey_norm_split,
    herz_norm,
    luxemburg_norm,
    weighted_norm,
)
from ..operators import KINDS, evaluate, hardy, image, operator_block_norm, riesz
from ..quad import DEFAULT_SPEC, Integrand, QuadratureSpec, integrate_support
from ..util import ball_volume, dyadic_radius, make_maybe_no_args_decorator, running_max
from .family import FunctionFamily
from .report import ExperimentReport, Measurement, Verdict, band, describe, measure

logger = logging.getLogger(__name__)

HOLDER_TOL = 1e-6
DUALITY_THRESHOLD = 100.0
EQUIVALENCE_THRESHOLD = 10.0
STABILIZATION = 0.05
BLOCK_SPREAD = 10.0
MODES = ("strict", "exploratory")
NORM_KINDS = ("luxemburg", "weighted", "herz_morrey", "herz_morrey_split", "herz")


@dataclass(frozen=True)
class Experiment:
    experiment_id: str
    fn: Callable
    anchor: str
    description: str
    listed: bool = True

    @property
    def bound(self) -> Dict:
        return self.fn.keywords if isinstance(self.fn, partial) else {}

    @property
    def required(self) -> Tuple[str, ...]:
        return tuple(
            k
            for k, p in inspect.signature(self.fn).parameters.items()
            if p.default is inspect.Parameter.empty and k not in self.bound
        )

    def run(self, **inputs) -> ExperimentReport:
        missing = [k for k in self.required if k not in inputs]
        if missing:
            raise ConfigurationError(f"{self.experiment_id} needs inputs {missing}")
        accepted = inspect.signature(self.fn).parameters
        unknown = [k for k in inputs if k not in accepted or k in self.bound]
        if unknown:
            raise ConfigurationError(f"{self.experiment_id} does not take inputs {unknown}")
        logger.debug("running %s with %s", self.experiment_id, sorted(inputs))
        return self.fn(**inputs)


REGISTRY: Dict[str, Experiment] = {}


@make_maybe_no_args_decorator
def experiment(fn, anchor: str = "", variants: Optional[Dict[str, str]] = None, listed: bool = True):
    """Register `fn` as an experiment; `variants` maps a `kind` value to its anchor."""
    description = (inspect.getdoc(fn) or "").splitlines()[0] if fn.__doc__ else ""
    if variants:
        for kind, variant_anchor in variants.items():
            eid = f"{fn.__name__}:{kind}"
            REGISTRY[eid] = Experiment(eid, partial(fn, kind=kind), variant_anchor, description, listed)
    else:
        REGISTRY[fn.__name__] = Experiment(fn.__name__, fn, anchor, description, listed)
    return fn


def catalog() -> List[Experiment]:
    return [REGISTRY[k] for k in sorted(REGISTRY) if REGISTRY[k].listed]


def get_experiment(experiment_id: str) -> Experiment:
    try:
        return REGISTRY[experiment_id]
    except KeyError:
        raise ConfigurationError(
            f"unknown experiment {experiment_id!r}; expected one of {sorted(REGISTRY)}"
        )


def _map(fn, items, workers: int = 1) -> list:
    """Order-preserving map, threaded when workers > 1."""
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def holder_constant(q: ExponentField) -> float:
    return 1 + 1 / q.ess_inf - 1 / q.ess_sup


def product_integral(f, g, spec: QuadratureSpec = None) -> float:
    """Integral of |f g| over R^n."""
    lo = max(f.support[0], g.support[0])
    hi = min(f.support[1], g.support[1])
    if f.is_zero() or g.is_zero() or not hi > lo:
        return 0.0
    integrand = Integrand(
        lambda r: np.abs(f.profile(r) * g.profile(r)),
        f.n,
        breakpoints=tuple(f.breakpoints()) + tuple(g.breakpoints()),
        singular=tuple(f.singular()) + tuple(g.singular()),
        support=(lo, hi),
    )
    return integrate_support(integrand, spec=spec).value


@experiment(anchor="Lemma 1")
def holder_check(
    family: FunctionFamily,
    q: ExponentField,
    spec: QuadratureSpec = DEFAULT_SPEC,
    tolerance: float = HOLDER_TOL,
    workers: int = 1,
) -> ExperimentReport:
    """Ratio of the integral of |fg| to ||f||_q ||g||_q' over member pairs."""
    q_conj = conjugate(q)
    c_q = holder_constant(q)

    def run(pair):
        label, f, g = pair
        lhs = product_integral(f, g, spec)
        rhs = luxemburg_norm(f, q, spec).value * luxemburg_norm(g, q_conj, spec).value
        return measure(label, lhs, rhs)

    measurements = _map(run, family.pairs(), workers)
    report = ExperimentReport(
        "holder_check",
        {"family": family, "q": q, "spec": spec, "tolerance": tolerance, "seed": family.seed},
        measurements,
    )
    worst = report.measured_constant
    passed = worst is None or worst <= c_q + tolerance
    report.verdict = Verdict(passed, c_q + tolerance, "" if passed else "ratio above C_q")
    report.statistics = {"C_q": c_q, "pairs": len(measurements)}
    return report


def ball_norms(q: ExponentField, indices: Sequence[int], spec: QuadratureSpec = None) -> Dict[int, float]:
    return {
        k: luxemburg_norm(TestFunction.ball_indicator(k, q.n), q, spec).value for k in indices
    }


def fit_delta(ratios: np.ndarray, measures: np.ndarray) -> Tuple[float, float]:
    """(delta, C) with ratio <= C measure^delta for every sample, delta by least squares."""
    proper = measures < 1
    if len(set(measures[proper].tolist())) < 3:
        raise ConfigurationError("delta fit needs at least 3 distinct measure ratios |S|/|B| < 1")
    delta, _ = np.polyfit(np.log(measures[proper]), np.log(ratios[proper]), 1)
    c = float(np.max(ratios / measures**delta))
    return float(delta), c


@experiment(anchor="Lemma 2(I), Eq. (2.9)")
def lemma2_delta_fit(
    q: ExponentField,
    indices: Sequence[int] = tuple(range(-10, 11)),
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExperimentReport:
    """Fit (delta, C) to norms of nested concentric balls S inside B."""
    indices = sorted(set(int(k) for k in indices))
    norms = ball_norms(q, indices, spec)
    measurements, ratios, measures = [], [], []
    for k in indices:
        for j in indices:
            if j > k:
                continue
            x = (dyadic_radius(j) / dyadic_radius(k)) ** q.n
            m = measure(f"S=B_{j}|B=B_{k}", norms[j], norms[k])
            measurements.append(m)
            ratios.append(m.ratio)
            measures.append(x)
    ratios, measures = np.asarray(ratios), np.asarray(measures)
    delta, c = fit_delta(ratios, measures)
    envelope_ok = bool(np.all(ratios <= c * measures**delta * (1 + 1e-12)))
    passed = delta > 0 and envelope_ok
    report = ExperimentReport(
        "lemma2_delta_fit", {"q": q, "indices": indices, "spec": spec}, measurements
    )
    reciprocal = 1 / q.ess_sup
    report.statistics = {
        "delta": delta,
        "C": c,
        "delta_conservative": min(delta, reciprocal),
        "delta_below_reciprocal_sup": delta < reciprocal,
        "ball_norms": {str(k): v for k, v in norms.items()},
    }
    report.verdict = Verdict(passed, 0.0, "" if passed else "non-positive delta or envelope miss")
    return report


@experiment(anchor="Lemma 2(II)")
def lemma2_duality_check(
    q: ExponentField,
    indices: Sequence[int] = tuple(range(-10, 11)),
    spec: QuadratureSpec = DEFAULT_SPEC,
    threshold: float = DUALITY_THRESHOLD,
) -> ExperimentReport:
    """Products (1/|B|) ||chi_B||_q ||chi_B||_q' over balls of dyadic radius."""
    indices = sorted(set(int(k) for k in indices))
    norms = ball_norms(q, indices, spec)
    conj_norms = ball_norms(conjugate(q), indices, spec)
    measurements = []
    for k in indices:
        volume = ball_volume(q.n, dyadic_radius(k))
        measurements.append(measure(f"B_{k}", norms[k] * conj_norms[k], volume))
    report = ExperimentReport(
        "lemma2_duality_check",
        {"q": q, "indices": indices, "spec": spec, "threshold": threshold},
        measurements,
    )
    stats = band(report.ratios)
    passed = stats["spread"] is not None and stats["spread"] <= threshold
    report.statistics = stats
    report.verdict = Verdict(passed, threshold, "" if passed else "product band too wide")
    return report


def weight_exponent(beta: ExponentField, q1: ExponentField, c_inf: Optional[float] = None):
    """gamma = C_inf beta (1 - beta/n), with C_inf the log-Hölder constant of q1 at infinity."""
    if c_inf is None:
        c_inf = estimate_log_holder_infinity(q1).constant
    return gamma_weight_exponent(beta, c_inf), c_inf


def _fitted_delta(q: ExponentField, indices, spec) -> Dict:
    return lemma2_delta_fit(q, indices, spec).statistics


def _block_sum(kind: str, k: int, blocks: Dict[int, float], n: int, delta: float) -> float:
    if kind == "hardy":
        return sum(2.0 ** ((j - k) * n * delta) * v for j, v in blocks.items() if j <= k)
    return sum(2.0 ** ((k - j) * n * delta) * v for j, v in blocks.items() if j >= k + 1)


@experiment(
    variants={
        "hardy": "Eq. (3.3)",
        "hardy_star": "Eq. (3.9)",
    }
)
def block_estimate_check(
    f: TestFunction,
    beta: ExponentField,
    q1: ExponentField,
    kind: str = "hardy",
    indices: Sequence[int] = tuple(range(-5, 6)),
    delta: Optional[float] = None,
    c_inf: Optional[float] = None,
    fit_indices: Sequence[int] = tuple(range(-10, 11)),
    spec: QuadratureSpec = DEFAULT_SPEC,
    threshold: float = BLOCK_SPREAD,
) -> ExperimentReport:
    """Per-block operator norm against the geometrically weighted sum of source blocks."""
    q2 = sobolev_exponent(q1, beta)
    gamma, c_inf = weight_exponent(beta, q1, c_inf)
    if delta is None:
        fit_target = conjugate(q1) if kind == "hardy" else q2
        delta = _fitted_delta(fit_target, fit_indices, spec)["delta"]
    blocks = {k: b.value for k, b in block_norms(f, q1, spec) if b.value > 0}
    img = image(kind, f, beta, gamma, spec)
    measurements = []
    for k in indices:
        lhs = operator_block_norm(kind, f, beta, gamma, k, q2, spec, source_image=img).value
        rhs = _block_sum(kind, k, blocks, f.n, delta)
        measurements.append(measure(f"k={k}", lhs, rhs))
    report = ExperimentReport(
        f"block_estimate_check:{kind}",
        {
            "f": f,
            "beta": beta,
            "q1": q1,
            "q2": q2,
            "gamma": gamma,
            "c_inf": c_inf,
            "delta": delta,
            "indices": list(indices),
            "spec": spec,
        },
        measurements,
    )
    positive = [r for r in report.ratios if r > 0]
    stats = band(positive)
    if not positive:
        report.verdict = Verdict(True, threshold, "no comparable blocks")
    else:
        passed = math.isfinite(stats["max"]) and stats["spread"] < threshold
        report.verdict = Verdict(passed, threshold, "" if passed else "block ratios vary too much")
    report.statistics = {**stats, "boundary_cases": sum(m.status == "boundary" for m in measurements)}
    return report


def _side_exponent(alpha: ExponentField, j: int) -> float:
    a_inf = alpha.limit_at_infinity
    if a_inf is None:
        raise DomainError(f"alpha needs a radial limit, got {alpha.form.name}")
    return alpha.value_at_origin if j < 0 else a_inf


@experiment(anchor="Eqs. (3.5)/(3.6)")
def case_estimate_check(
    f: TestFunction,
    alpha: ExponentField,
    lam: float,
    p1: float,
    q1: ExponentField,
    spec: QuadratureSpec = DEFAULT_SPEC,
    threshold: Optional[float] = None,
) -> ExperimentReport:
    """Each block norm against 2^{j(lambda - alpha(0 or inf))} times the Herz-Morrey norm."""
    total = herz_morrey_norm(f, alpha, lam, p1, q1, spec).value
    measurements = []
    for j, b in block_norms(f, q1, spec):
        if b.value == 0:
            continue
        scale = 2.0 ** (j * (lam - _side_exponent(alpha, j)))
        measurements.append(measure(f"j={j}", b.value, scale * total))
    report = ExperimentReport(
        "case_estimate_check",
        {"f": f, "alpha": alpha, "lambda": lam, "p1": p1, "q1": q1, "spec": spec, "threshold": threshold},
        measurements,
    )
    worst = report.measured_constant
    if worst is None:
        report.verdict = Verdict(True, threshold, "vacuous: zero function")
    else:
        passed = math.isfinite(worst) and (threshold is None or worst <= threshold)
        report.verdict = Verdict(passed, threshold, "" if passed else "block ratio above threshold")
    report.statistics = {"herz_morrey_norm": total}
    return report


def stabilization(ratios: Sequence[float]) -> float:
    """Relative growth of the running sup over the last half of the sequence."""
    if len(ratios) < 2:
        return 0.0
    run = running_max(ratios)
    base = run[len(run) // 2 - 1]
    return float(run[-1] / base - 1) if base > 0 else (0.0 if run[-1] == 0 else math.inf)


def theorem_gates(
    kind: str,
    q1: ExponentField,
    beta: ExponentField,
    alpha: Optional[ExponentField],
    lam: float,
    delta: Optional[float],
    c_inf: Optional[float],
    fit_indices: Sequence[int],
    spec: QuadratureSpec,
) -> Dict:
    """Evaluate every precondition; returns gate booleans plus the derived exponents."""
    n = q1.n
    gates, derived = {}, {}
    gates["beta_admissible"] = check_beta_admissible(beta, q1).holds
    try:
        gates["q1_minimal_at_infinity"] = check_minimal_at_infinity(q1).holds
    except DomainError:
        gates["q1_minimal_at_infinity"] = False
    try:
        derived["q2"] = sobolev_exponent(q1, beta)
        gates["sobolev_exponent"] = True
    except AdmissibilityError:
        derived["q2"] = None
        gates["sobolev_exponent"] = False
    try:
        derived["gamma"], derived["c_inf"] = weight_exponent(beta, q1, c_inf)
        gates["weight_exponent"] = True
    except (DomainError, AdmissibilityError):
        derived["gamma"], derived["c_inf"] = None, c_inf
        gates["weight_exponent"] = False
    if kind == "riesz":
        return {"gates": gates, **derived}
    a_inf = alpha.limit_at_infinity if alpha is not None else None
    if a_inf is None:
        gates["alpha_range"] = False
        return {"gates": gates, **derived}
    a0 = alpha.value_at_origin
    if delta is None and derived["q2"] is not None:
        target = conjugate(q1) if kind == "hardy" else derived["q2"]
        fit = _fitted_delta(target, fit_indices, spec)
        delta, derived["delta_conservative"] = fit["delta"], fit["delta_conservative"]
    derived["delta"] = delta
    if delta is None:
        gates["alpha_range"] = False
    elif kind == "hardy":
        gates["alpha_range"] = a0 <= a_inf < lam + n * delta
        derived["margin"] = lam + n * delta - a_inf
    else:
        gates["alpha_range"] = lam - n * delta < a0 <= a_inf
        derived["margin"] = a0 - (lam - n * delta)
    if "delta_conservative" in derived:
        d = derived["delta_conservative"]
        derived["margin_conservative"] = (
            lam + n * d - a_inf if kind == "hardy" else a0 - (lam - n * d)
        )
    return {"gates": gates, **derived}


@experiment(
    variants={
        "hardy": "Theorem 1",
        "hardy_star": "Theorem 2",
        "riesz": "Proposition 2.2",
    }
)
def theorem_ratio(
    family: FunctionFamily,
    q1: ExponentField,
    beta: ExponentField,
    kind: str = "hardy",
    alpha: Optional[ExponentField] = None,
    lam: float = 0.0,
    p1: float = 1.0,
    p2: float = 1.0,
    c_inf: Optional[float] = None,
    delta: Optional[float] = None,
    mode: str = "strict",
    fit_indices: Sequence[int] = tuple(range(-10, 11)),
    stabilization_tol: float = STABILIZATION,
    workers: int = 1,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExperimentReport:
    """Output norm of the weighted operator image over the input norm, across a family."""
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    if kind != "riesz" and alpha is None:
        raise ConfigurationError(f"theorem_ratio:{kind} needs inputs ['alpha']")
    gated = theorem_gates(kind, q1, beta, alpha, lam, delta, c_inf, fit_indices, spec)
    gates = gated["gates"]
    config = {
        "family": family,
        "q1": q1,
        "beta": beta,
        "alpha": alpha,
        "lambda": lam,
        "p1": p1,
        "p2": p2,
        "c_inf": c_inf,
        "delta": delta,
        "mode": mode,
        "spec": spec,
        "seed": family.seed,
    }
    report = ExperimentReport(f"theorem_ratio:{kind}", config)
    report.statistics = {
        "gates": gates,
        **{k: v for k, v in gated.items() if k != "gates"},
    }
    gates_hold = all(gates.values())
    q2, gamma = gated["q2"], gated["gamma"]
    if not gates_hold:
        failed = sorted(k for k, v in gates.items() if not v)
        if mode == "strict" or q2 is None or gamma is None:
            report.verdict = Verdict(False, None, f"gate-violation: {', '.join(failed)}")
            return report
        logger.warning("exploratory %s run with violated gates %s", kind, failed)

    def run(member):
        label, f = member
        if f.is_zero():
            return Measurement(label, 0.0, 0.0, None, "skipped")
        img = image(kind, f, beta, gamma, spec)
        try:
            if kind == "riesz":
                lhs = luxemburg_norm(img, q2, spec).value
                rhs = luxemburg_norm(f, q1, spec).value
            else:
                lhs = herz_morrey_norm(img, alpha, lam, p2, q2, spec).value
                rhs = herz_morrey_norm(f, alpha, lam, p1, q1, spec).value
        except HerzLabError as e:
            logger.warning("member %s failed: %s", label, e)
            return Measurement(label, math.nan, math.nan, None, "error")
        return measure(label, lhs, rhs)

    report.measurements = _map(run, family.members(), workers)
    ratios = report.ratios
    growth = stabilization(ratios)
    dilation = [m.ratio for m in report.measurements if m.case.startswith("dilation") and m.ratio]
    report.statistics.update(
        {
            "stabilization": growth,
            "dilation_spread": band(dilation)["spread"],
            "errors": sum(m.status == "error" for m in report.measurements),
        }
    )
    if not gates_hold:
        report.verdict = Verdict(None, stabilization_tol, "exploratory: gates violated")
        return report
    worst = report.measured_constant
    if report.statistics["errors"]:
        report.verdict = Verdict(False, stabilization_tol, "numeric-error")
    elif worst is None:
        report.verdict = Verdict(True, stabilization_tol, "vacuous: no nonzero members")
    else:
        passed = math.isfinite(worst) and growth < stabilization_tol
        report.verdict = Verdict(passed, stabilization_tol, "" if passed else "running sup not stabilized")
    return report


@experiment(anchor="Remark 3(i)")
def weight_equivalence_check(
    beta: ExponentField,
    c_inf: float,
    grid: Optional[Sequence[float]] = None,
) -> ExperimentReport:
    """Band of the two-weight ratio over the probe grid."""
    gamma = gamma_weight_exponent(beta, c_inf)
    g_inf = gamma.limit_at_infinity
    if g_inf is None:
        raise DomainError(f"beta needs a radial limit, got {beta.form.name}")
    r = probe_grid() if grid is None else np.asarray(grid, dtype=float)
    ratio = (1 + r) ** (g_inf - gamma.radial(r))
    decades = np.unique(np.clip(np.searchsorted(r, 10.0 ** np.arange(-8, 7)), 0, r.size - 1))
    measurements = [
        Measurement(f"|x|={r[i]:.6g}", float((1 + r[i]) ** -gamma.radial(r[i])), float((1 + r[i]) ** -g_inf), float(ratio[i]))
        for i in decades
    ]
    report = ExperimentReport(
        "weight_equivalence_check",
        {"beta": beta, "c_inf": c_inf, "grid_size": int(r.size)},
        measurements,
    )
    lo, hi = float(ratio.min()), float(ratio.max())
    passed = math.isfinite(hi) and lo > 0
    report.statistics = {
        "min": lo,
        "max": hi,
        "gamma_inf": g_inf,
        "beta_log_holder_infinity": estimate_log_holder_infinity(beta, r).constant,
    }
    report.verdict = Verdict(passed, None, "" if passed else "weight ratio degenerates")
    return report


def _annulus_probes(k: int, probes: int) -> np.ndarray:
    return dyadic_radius(k - 1) * (1 + (np.arange(probes) + 1) / probes)


@experiment(anchor="Eqs. (3.2)/(3.8)")
def pointwise_lower_bound_check(
    beta: ExponentField,
    indices: Sequence[int] = tuple(range(-3, 4)),
    probes: int = 50,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExperimentReport:
    """|x|^{beta(x)} over the Riesz potential of the ball indicator; C is 1 / measured constant."""
    n = beta.n
    measurements = []
    for k in indices:
        f = TestFunction.ball_indicator(k, n)
        for r in _annulus_probes(k, probes):
            lhs = float(r ** beta.radial(r))
            measurements.append(measure(f"k={k}|r={r:.6g}", lhs, riesz(f, beta, r, spec)))
    report = ExperimentReport(
        "pointwise_lower_bound_check",
        {"beta": beta, "indices": list(indices), "probes": probes, "spec": spec},
        measurements,
    )
    worst = report.measured_constant
    passed = worst is not None and math.isfinite(worst) and all(m.rhs > 0 for m in measurements)
    report.statistics = {"C": 1 / worst if worst else None}
    report.verdict = Verdict(passed, None, "" if passed else "potential vanishes on a probe")
    return report


@experiment(anchor="Eq. (3.1)")
def hardy_pointwise_check(
    f: TestFunction,
    beta: ExponentField,
    q1: ExponentField,
    indices: Sequence[int] = tuple(range(-5, 6)),
    probes: int = 8,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExperimentReport:
    """|H_beta f(x)| against 2^{-kn} sum_{j<=k} ||f_j||_q1 ||chi_j||_q1' |x|^{beta(x)} on A_k."""
    n = f.n
    q_conj = conjugate(q1)
    products = {}
    for j, b in block_norms(f, q1, spec):
        if b.value > 0:
            chi = TestFunction.annulus_indicator(j, n)
            products[j] = b.value * luxemburg_norm(chi, q_conj, spec).value
    measurements = []
    for k in indices:
        total = sum(v for j, v in products.items() if j <= k)
        for r in _annulus_probes(k, probes):
            lhs = abs(hardy(f, beta, r, spec))
            rhs = dyadic_radius(-k * n) * total * float(r ** beta.radial(r))
            measurements.append(measure(f"k={k}|r={r:.6g}", lhs, rhs))
    threshold = holder_constant(q1) * 2.0**n
    report = ExperimentReport(
        "hardy_pointwise_check",
        {"f": f, "beta": beta, "q1": q1, "indices": list(indices), "probes": probes, "spec": spec},
        measurements,
    )
    worst = report.measured_constant
    passed = worst is None or worst <= threshold * (1 + 1e-9)
    report.statistics = {"C_q1": holder_constant(q1), "ball_factor": 2.0**n}
    report.verdict = Verdict(passed, threshold, "" if passed else "pointwise ratio above bound")
    return report


@experiment(anchor="Proposition 2.3")
def herz_equivalence_check(
    family: FunctionFamily,
    alpha: ExponentField,
    lam: float,
    p: float,
    q: ExponentField,
    combine: str = "joint",
    threshold: float = EQUIVALENCE_THRESHOLD,
    workers: int = 1,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExperimentReport:
    """Ratio of the variable-multiplier Herz-Morrey norm to its split form over a family."""

    def run(member):
        label, f = member
        if f.is_zero():
            return Measurement(label, 0.0, 0.0, None, "skipped")
        lhs = herz_morrey_norm(f, alpha, lam, p, q, spec).value
        rhs = herz_morrey_norm_split(f, alpha, lam, p, q, spec, combine=combine).value
        return measure(label, lhs, rhs)

    report = ExperimentReport(
        "herz_equivalence_check",
        {
            "family": family,
            "alpha": alpha,
            "lambda": lam,
            "p": p,
            "q": q,
            "combine": combine,
            "threshold": threshold,
            "spec": spec,
            "seed": family.seed,
        },
        _map(run, family.members(), workers),
    )
    stats = band(report.ratios)
    passed = stats["spread"] is None or stats["spread"] <= threshold
    report.statistics = stats
    report.verdict = Verdict(passed, threshold, "" if passed else "norm ratio band too wide")
    return report


@experiment(anchor="Eq. (3.4)")
def power_sum_check(
    family: FunctionFamily,
    q1: ExponentField,
    p1: float,
    p2: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExperimentReport:
    """(sum of block norms)^theta against the sum of their theta-th powers, theta = p1/p2."""
    theta = p1 / p2
    if not 0 < theta <= 1:
        raise ConfigurationError(f"power-sum check needs 0 < p1/p2 <= 1, got {theta}")
    measurements = []
    for label, f in family.members():
        a = np.asarray([b.value for _, b in block_norms(f, q1, spec)])
        measurements.append(measure(label, float(a.sum() ** theta), float((a**theta).sum())))
    report = ExperimentReport(
        "power_sum_check",
        {"family": family, "q1": q1, "p1": p1, "p2": p2, "spec": spec, "seed": family.seed},
        measurements,
    )
    worst = report.measured_constant
    passed = worst is None or worst <= 1 + 1e-12
    report.statistics = {"theta": theta}
    report.verdict = Verdict(passed, 1.0, "" if passed else "power sum exceeded")
    return report


@experiment(anchor="norm evaluation", listed=False)
def norm(
    f: TestFunction,
    q: ExponentField,
    which: str = "luxemburg",
    gamma: Optional[ExponentField] = None,
    alpha: Optional[ExponentField] = None,
    lam: float = 0.0,
    p: float = 1.0,
    combine: str = "joint",
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExperimentReport:
    """Compute one norm of a test function."""
    if which not in NORM_KINDS:
        raise ConfigurationError(f"which must be one of {NORM_KINDS}, got {which!r}")
    if which == "weighted" and gamma is None:
        raise ConfigurationError("weighted norm needs inputs ['gamma']")
    if which.startswith("herz") and alpha is None:
        raise ConfigurationError(f"{which} norm needs inputs ['alpha']")
    if which == "luxemburg":
        value = luxemburg_norm(f, q, spec)
    elif which == "weighted":
        value = weighted_norm(f, gamma, q, spec)
    elif which == "herz_morrey":
        value = herz_morrey_norm(f, alpha, lam, p, q, spec)
    elif which == "herz_morrey_split":
        value = herz_morrey_norm_split(f, alpha, lam, p, q, spec, combine=combine)
    else:
        value = herz_norm(f, alpha, p, q, spec)
    report = ExperimentReport(
        "norm",
        {"f": f, "q": q, "which": which, "gamma": gamma, "alpha": alpha, "lambda": lam, "p": p, "spec": spec},
        [Measurement(which, value.value, value.err_estimate, None)],
        Verdict(True, None, "computed"),
        {"value": value.value, "err_estimate": value.err_estimate, "meta": describe(value.meta)},
    )
    return report


@experiment(anchor="operator evaluation", listed=False)
def operator(
    f: TestFunction,
    beta: ExponentField,
    radii: Sequence[float],
    kind: str = "hardy",
    gamma: Optional[ExponentField] = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExperimentReport:
    """Evaluate a (weighted) operator image at a list of radii."""
    if kind not in KINDS:
        raise ConfigurationError(f"kind must be one of {KINDS}, got {kind!r}")
    measurements = []
    for r in radii:
        value = evaluate(kind, f, beta, float(r), spec)
        w = float((1 + r) ** -gamma.radial(r)) if gamma is not None else 1.0
        measurements.append(Measurement(f"|x|={r:g}", w * value, w, None))
    return ExperimentReport(
        "operator",
        {"f": f, "beta": beta, "radii": list(radii), "kind": kind, "gamma": gamma, "spec": spec},
        measurements,
        Verdict(True, None, "computed"),
        {"points": len(measurements)},
    )
