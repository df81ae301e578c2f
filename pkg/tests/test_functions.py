import math

import numpy as np
import pytest
from scipy import integrate

from herzlab.errors import ConfigurationError
from herzlab.functions import Term, TestFunction
from herzlab.quad import integrate_support
from herzlab.util import annulus_index, support_window

# noinspection PyUnresolvedReferences
from herzlab.testing import quad_spec


def test_annulus_index():
    assert annulus_index(1.0) == 0
    assert annulus_index(1.5) == 1
    assert annulus_index(2.0) == 1
    assert annulus_index(0.3) == -1
    with pytest.raises(ConfigurationError):
        annulus_index(0.0)


def test_support_window():
    assert support_window(0.5, 1.0) == (0, 0)
    assert support_window(0.0, 4.0) == (-math.inf, 2)
    assert support_window(0.75, math.inf) == (0, math.inf)


def test_exact_support_and_restriction():
    f = TestFunction.ball(1.0) + TestFunction.annulus_indicator(3, coeff=2.0)
    assert f.support == (0.0, 8.0)
    assert f.breakpoints() == (1.0, 4.0, 8.0)
    assert f.restrict_annulus(2).is_zero()
    block = f.restrict_annulus(3)
    assert block.support == (4.0, 8.0)
    assert block(6.0) == 2.0
    assert f(0.5) == 1.0 and f(1.0) == 1.0 and f(1.5) == 0.0


def test_zero_coefficients_dropped():
    f = TestFunction((Term("indicator", 0.0, 0.0, 1.0),))
    assert f.is_zero()
    assert f.support_window() is None


def test_bad_terms():
    with pytest.raises(ConfigurationError):
        Term("cubic")
    with pytest.raises(ConfigurationError):
        Term("indicator", 1.0, 2.0, 1.0)
    with pytest.raises(ConfigurationError):
        TestFunction.radial_power(-1.0, 0.0, 1.0, n=1)
    # integrable in three dimensions
    assert TestFunction.radial_power(-1.0, 0.0, 1.0, n=3).singular() == (0.0,)


def test_dilation():
    f = TestFunction.ball(1.0)
    g = f.dilate(4.0)
    assert g.support == (0.0, 0.25)
    h = TestFunction.radial_power(0.5, 1.0, 2.0).dilate(2.0)
    r = np.array([0.6, 0.9])
    np.testing.assert_allclose(h.profile(r), (2 * r) ** 0.5)
    with pytest.raises(ConfigurationError):
        f.dilate(0.0)


@pytest.mark.parametrize(
    "f, m",
    [
        (TestFunction.ball(2.0), 0.0),
        (TestFunction.radial_power(-0.5, 0.0, 3.0), 0.0),
        (TestFunction.radial_power(0.3, 0.5, 4.0), 1.5),
        (TestFunction.gaussian(1.5), 2.0),
        (TestFunction.gaussian(0.5, lo=1.0, hi=2.0), 0.25),
    ],
)
def test_moments_against_scipy(f, m):
    lo, hi = f.support
    expected, _ = integrate.quad(lambda r: r**m * float(f.profile(np.array([r]))[0]), lo, hi)
    assert f.moment(m, 0.0, math.inf) == pytest.approx(expected, rel=1e-8)


def test_moment_unavailable():
    assert TestFunction.radial_power_log(0.5, 1.0, 0.0, 1.0).moment(0.0) is None
    assert TestFunction.radial_power(-1.0, 1.0, math.inf).moment(0.0) is None


def test_power_log_quadrature(quad_spec):
    f = TestFunction.radial_power_log(-0.5, 1.0, 0.0, 1.0)
    expected, _ = integrate.quad(
        lambda r: 2 * r**-0.5 * math.log(math.e + 1 / r), 0, 1, limit=200
    )
    assert integrate_support(f, spec=quad_spec).value == pytest.approx(expected, rel=1e-7)


def test_descriptor_round_trip():
    f = TestFunction.gaussian(2.0, n=2) + TestFunction.annulus_indicator(-3, n=2, coeff=0.5)
    d = f.to_dict()
    assert d["terms"][0]["hi"] == "inf"
    assert TestFunction.from_dict(d) == f
    with pytest.raises(ConfigurationError):
        TestFunction.from_dict({"n": 1})
    with pytest.raises(ConfigurationError):
        TestFunction.from_dict({"terms": [{"kind": "indicator", "colour": 1}]})
