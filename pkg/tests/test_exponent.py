import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from herzlab.errors import AdmissibilityError, ConfigurationError, DomainError
from herzlab.exponent import (
    ExponentField,
    RadialAffine,
    check_beta_admissible,
    check_log_holder,
    check_minimal_at_infinity,
    conjugate,
    estimate_log_holder_infinity,
    estimate_log_holder_local,
    estimate_log_holder_origin,
    gamma_weight_exponent,
    probe_grid,
    refine_grid,
    sobolev_exponent,
    value,
    weight,
)

E = math.e
# |x| with ln(e + |x|) = 2
R_LN2 = E**2 - E


def test_value_examples():
    assert value(ExponentField.constant(2), (5.0, 0.0)) == 2
    assert value(ExponentField.radial_log(2, 1), R_LN2) == pytest.approx(2.5, rel=1e-14)
    q = ExponentField.radial_origin_log(3, -1)
    assert value(q, 1e-300) == pytest.approx(3, abs=2e-3)
    assert q.value_at_origin == 3


def test_point_and_radius_agree():
    q = ExponentField.radial_log(2, 1, n=3)
    assert value(q, (1.0, 2.0, 2.0)) == value(q, 3.0)


def test_piecewise_radial():
    # 2 + min(1, |x|)
    q = ExponentField.piecewise_radial(
        [1.0], [ExponentField(RadialAffine(2.0, 1.0)), ExponentField.constant(3.0)]
    )
    assert value(q, 0.5) == 2.5
    assert value(q, 4.0) == 3.0
    assert q.ess_inf == 2.0
    assert q.ess_sup == 3.0
    assert q.limit_at_infinity == 3.0
    assert q.breakpoints() == (1.0,)


def test_piecewise_overlap_rejected():
    with pytest.raises(ConfigurationError):
        ExponentField.piecewise_radial(
            [2.0, 1.0], [ExponentField.constant(2)] * 3
        )
    with pytest.raises(ConfigurationError):
        ExponentField.piecewise_radial([1.0], [ExponentField.constant(2)])


def test_cached_bounds():
    q = ExponentField.radial_log(2, 1)
    assert q.ess_inf == 2.0
    assert q.ess_sup == pytest.approx(3.0)
    assert q.value_at_origin == pytest.approx(3.0)
    assert q.limit_at_infinity == 2.0
    r = probe_grid()
    v = q.radial(r)
    assert np.all(v >= q.ess_inf) and np.all(v <= q.ess_sup)
    assert abs(value(q, 1e6) - q.limit_at_infinity) < 1e-1
    assert abs(value(ExponentField.radial_log(2, 0.1), 1e6) - 2) < 1e-2


def test_descriptor_round_trip():
    q = ExponentField.radial_origin_log(3, -1, n=2)
    assert ExponentField.from_dict(q.to_dict()) == q
    with pytest.raises(ConfigurationError):
        ExponentField.from_dict({"form": "cubic", "c": 1})
    with pytest.raises(ConfigurationError):
        ExponentField.from_dict({"c": 1})


def test_conjugate_examples():
    assert conjugate(ExponentField.constant(2)).value_at_origin == 2
    assert conjugate(ExponentField.constant(3)).value_at_origin == pytest.approx(1.5)
    q = ExponentField.piecewise_radial(
        [1.0], [ExponentField.constant(4 / 3), ExponentField.constant(4.0)]
    )
    qc = conjugate(q)
    assert qc.ess_inf == pytest.approx(4 / 3)
    assert qc.ess_sup == pytest.approx(4.0)


def test_conjugate_domain():
    with pytest.raises(DomainError):
        conjugate(ExponentField.constant(1.0))
    with pytest.raises(DomainError):
        conjugate(ExponentField.radial_log(1, 1))


@settings(max_examples=50, deadline=None)
@given(c=st.floats(1.2, 5), a=st.floats(0, 2))
def test_conjugate_involution(c, a):
    q = ExponentField.radial_log(c, a)
    qq = conjugate(conjugate(q))
    r = np.geomspace(1e-4, 1e4, 33)
    np.testing.assert_allclose(qq.radial(r), q.radial(r), rtol=1e-12)
    qc = conjugate(q)
    assert qc.ess_inf == pytest.approx(q.ess_sup / (q.ess_sup - 1))
    assert qc.ess_sup == pytest.approx(q.ess_inf / (q.ess_inf - 1))


@settings(max_examples=50, deadline=None)
@given(c=st.floats(1.5, 4), a=st.floats(0.05, 2))
def test_conjugate_lipschitz(c, a):
    q = ExponentField.radial_log(c, a)
    qc = conjugate(q)
    r = np.geomspace(1e-3, 1e3, 40)
    x, y = r[:-1], r[1:]
    dq = np.abs(q.radial(x) - q.radial(y))
    assert np.all(np.abs(qc.radial(x) - qc.radial(y)) <= dq / (q.ess_inf - 1) ** 2 * (1 + 1e-9))
    recip = np.abs(1 / q.radial(x) - 1 / q.radial(y))
    assert np.all(recip <= dq / q.ess_inf**2 * (1 + 1e-9))
    assert np.all(recip >= dq / q.ess_sup**2 * (1 - 1e-9))


def test_sobolev_examples():
    q2 = sobolev_exponent(ExponentField.constant(2, n=2), ExponentField.constant(0.5, n=2))
    assert q2.is_constant
    assert q2.value_at_origin == pytest.approx(4)
    q1 = ExponentField.radial_log(2, 1)
    assert sobolev_exponent(q1, ExponentField.constant(0)) is q1
    q2 = sobolev_exponent(q1, ExponentField.constant(0.25))
    assert value(q2, R_LN2) == pytest.approx(20 / 3, rel=1e-12)
    assert q2.ess_inf == pytest.approx(1 / (1 / 2 - 0.25))
    assert q2.ess_sup == pytest.approx(1 / (1 / 3 - 0.25))


def test_sobolev_inadmissible():
    with pytest.raises(AdmissibilityError) as e:
        sobolev_exponent(ExponentField.constant(2), ExponentField.constant(0.5))
    assert "q1" in str(e.value)
    with pytest.raises(AdmissibilityError) as e:
        sobolev_exponent(ExponentField.radial_log(2, 2), ExponentField.constant(0.3))
    assert e.value.radius is not None


def test_gamma_weight_examples():
    for n in (1, 2, 3):
        g = gamma_weight_exponent(ExponentField.constant(n / 2, n=n), 1.0)
        assert g.value_at_origin == pytest.approx(n / 4)
    assert gamma_weight_exponent(ExponentField.constant(0), 3.0).value_at_origin == 0
    g = gamma_weight_exponent(ExponentField.constant(0.5, n=2), 2.0)
    assert g.value_at_origin == pytest.approx(0.75)


def test_gamma_weight_bound_and_domain():
    beta = ExponentField.radial_log(0.5, 0.1)
    g = gamma_weight_exponent(beta, 1.0)
    assert g.ess_sup <= 1 / 4 + 1e-15
    assert g.limit_at_infinity == pytest.approx(0.5 * 0.5)
    with pytest.raises(DomainError):
        gamma_weight_exponent(ExponentField.constant(1.0), 1.0)
    with pytest.raises(DomainError):
        gamma_weight_exponent(ExponentField.constant(0.5), -1.0)


@settings(max_examples=50, deadline=None)
@given(
    n=st.sampled_from([1, 2, 3]),
    ends=st.lists(st.floats(0, 0.95), min_size=2, max_size=2),
    c_inf=st.floats(0, 5),
)
def test_gamma_weight_bound_on_grid(n, ends, c_inf):
    lo, hi = (n * e for e in ends)
    beta = ExponentField.radial_log(lo, hi - lo, n=n)
    gamma = gamma_weight_exponent(beta, c_inf)
    values = gamma.radial(probe_grid(per_decade=16))
    assert np.all(values >= 0)
    assert np.all(values <= n / 4 * c_inf * (1 + 1e-12) + 1e-15)


def test_weight_profile():
    g = ExponentField.constant(0.5)
    np.testing.assert_allclose(weight(g)(np.array([0.0, 3.0])), [1.0, 0.5])


def test_log_holder_origin():
    assert estimate_log_holder_origin(ExponentField.constant(2)).constant == 0
    est = estimate_log_holder_origin(ExponentField.radial_origin_log(2, 1))
    assert est.constant == pytest.approx(1, abs=1e-6)
    with pytest.raises(ConfigurationError):
        estimate_log_holder_origin(ExponentField.constant(2), grid=[1.0, 2.0])
    with pytest.raises(ConfigurationError):
        estimate_log_holder_origin(ExponentField.constant(2), grid=[])


def test_log_holder_origin_refinement_monotone():
    # alpha(x) = |x| near the origin
    alpha = ExponentField(RadialAffine(0.0, 1.0))
    grid = probe_grid(per_decade=4)
    coarse = estimate_log_holder_origin(alpha, grid).constant
    fine = estimate_log_holder_origin(alpha, refine_grid(grid)).constant
    assert fine >= coarse
    r = np.geomspace(1e-8, 0.5, 200001)
    oracle = float(np.max(r * np.log(E + 1 / r)))
    assert fine <= oracle * (1 + 1e-9)


def test_log_holder_infinity():
    assert estimate_log_holder_infinity(ExponentField.constant(2)).constant == 0
    est = estimate_log_holder_infinity(ExponentField.radial_log(2, 1))
    assert est.constant == pytest.approx(1, rel=1e-12)
    with pytest.raises(DomainError):
        estimate_log_holder_infinity(ExponentField(RadialAffine(1.0, 1.0)))


@settings(max_examples=30, deadline=None)
@given(c=st.floats(1.2, 4), a=st.floats(0.05, 2), per_decade=st.integers(1, 16))
def test_log_holder_infinity_refinement_monotone(c, a, per_decade):
    field = conjugate(ExponentField.radial_log(c, a))
    grid = probe_grid(per_decade=per_decade)
    coarse = estimate_log_holder_infinity(field, grid).constant
    assert estimate_log_holder_infinity(field, refine_grid(grid)).constant >= coarse


def test_log_holder_local_and_classification():
    assert estimate_log_holder_local(ExponentField.constant(2)).constant == 0
    report = check_log_holder(ExponentField.radial_log(2, 1))
    assert all(math.isfinite(v.constant) for v in report.values())
    report = check_log_holder(ExponentField(RadialAffine(1.0, 1.0)), probe_grid(1e-8, 10.0, 16))
    assert report["infinity"] is None


def test_beta_admissible():
    q1 = ExponentField.constant(2)
    report = check_beta_admissible(ExponentField.constant(0.25), q1)
    assert report.holds
    report = check_beta_admissible(ExponentField.constant(0), q1)
    assert not report["beta_0_positive"].holds
    report = check_beta_admissible(ExponentField.constant(0.5), q1)
    assert not report["sup_q1_beta_below_n"].holds
    assert not report["sup_q1_inf_beta_below_n"].holds
    # q1 reaches 3 only at the origin: sup q1 beta = 0.9 < 1 still passes
    report = check_beta_admissible(ExponentField.constant(0.3), ExponentField.radial_log(2, 1))
    assert report.holds


def test_minimal_at_infinity():
    assert check_minimal_at_infinity(ExponentField.radial_log(2, 1)).holds
    report = check_minimal_at_infinity(ExponentField.radial_log(2, -0.5))
    assert not report.holds
    assert report.min_excess < 0
    assert not check_minimal_at_infinity(ExponentField.constant(1.0)).holds
    with pytest.raises(DomainError):
        check_minimal_at_infinity(ExponentField(RadialAffine(1.0, 1.0)))
