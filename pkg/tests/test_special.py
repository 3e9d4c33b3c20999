import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from privkick.special import NonPositiveArgument, log_gamma

# 25-digit values computed offline with mpmath.loggamma
MP_FIXTURES = [
    (1e-6, 13.81550998074943166920783),
    (0.1, 2.252712651734205959869702),
    (0.999, 0.0005780385328913797240363425),
    (1.001, -0.000576393598283369541629696),
    (2.001, 0.0004231067348001636251797029),
    (3.7, 1.428072326665387921872381),
    (10.0, 12.80182748008146961120772),
    (123.4, 469.3360974421905584447938),
    (1e4, 82099.71749644237727264896),
]


def test_exact_points():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(2.0) == pytest.approx(0.0, abs=1e-16)
    assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-14)
    expected = math.log(3.5 * 2.5 * 1.5 * 0.5 * math.sqrt(math.pi))
    assert log_gamma(4.5) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("x,ref", MP_FIXTURES)
def test_against_high_precision(x, ref):
    assert log_gamma(x) == pytest.approx(ref, rel=1e-12)


@given(st.floats(1e-3, 100.0))
def test_recurrence(x):
    lhs = log_gamma(x + 1.0)
    rhs = log_gamma(x) + math.log(x)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-13)


@given(st.floats(1e-6, 1e4))
def test_matches_stdlib(x):
    assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5, float("inf"), float("nan")])
def test_rejects_non_positive(x):
    with pytest.raises(NonPositiveArgument):
        log_gamma(x)
