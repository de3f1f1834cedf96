"""Special-function checks against independently computed references.

Reference values were produced with mpmath at 30 significant digits
(``mp.gammainc``, ``mp.hyp2f1``, ``mp.quad``) and frozen here, so the
implementation under test shares no code with the oracle.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renormflow.exceptions import ParameterError
from renormflow.specfun import (
    gauss_2f1,
    odd_power_diff_identity,
    sphere_reduce,
    unit_sphere_area,
    upper_inc_gamma,
    upper_inc_gamma_diff,
)

# mpmath gammainc(a, x, inf), dps=30
GAMMA_REF = [
    (-0.7, 1.3, 0.0881346209036433),
    (-1.3, 0.25, 2.677972970399016),
    (-2.6, 4.0, 6.9340287408266843e-5),
    (0.5, 2.0, 0.080647117960317691),
    (3.2, 0.9, 2.3099212829485156),
    (1.0, 5.0, 0.0067379469990854671),
    (-0.5, 0.01, 16.654759630333674),
    (2.0, 30.0, 2.9008631203404541e-12),
]

# mpmath hyp2f1, dps=30
HYP_REF = [
    (0.25, -0.35, 1.5, 0.3, 0.98154067635377381),
    (0.25, -0.35, 1.5, 0.9, 0.93491377180059219),
    (-0.15, -0.575, 1.5, 0.5625, 1.0338999359919349),
    (1.1, 0.4, 2.3, -2.0, 0.78308007002327181),
    (0.3, 0.7, 1.9, 0.99, 1.237429482615048),
]


@pytest.mark.parametrize("a,x,ref", GAMMA_REF)
def test_upper_inc_gamma_reference(a, x, ref):
    assert upper_inc_gamma(a, x) == pytest.approx(ref, rel=1e-12)


def test_upper_inc_gamma_closed_forms():
    # Gamma(1, x) = exp(-x); Gamma(1/2, 0) = sqrt(pi)
    for x in (0.1, 1.0, 7.5):
        assert upper_inc_gamma(1.0, x) == pytest.approx(math.exp(-x), rel=1e-13)
    assert upper_inc_gamma(0.5, 0.0) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_upper_inc_gamma_rejects_bad_domain():
    with pytest.raises(ParameterError):
        upper_inc_gamma(-0.5, 0.0)
    with pytest.raises(ParameterError):
        upper_inc_gamma(0.5, -1.0)


@given(
    a=st.floats(-2.9, 3.0).filter(lambda v: abs(v - round(v)) > 1e-3),
    x=st.floats(0.05, 12.0),
)
@settings(max_examples=150, deadline=None)
def test_upper_inc_gamma_recurrence(a, x):
    # Gamma(a+1, x) = a Gamma(a, x) + x^a e^-x
    lhs = upper_inc_gamma(a + 1.0, x)
    rhs = a * upper_inc_gamma(a, x) + x**a * math.exp(-x)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-13)


def test_gamma_diff_cancellation_safe():
    # endpoints within 1e-3 relative: subtraction would lose ~4 digits,
    # the quadrature branch must not (mpmath reference, dps=30)
    got = upper_inc_gamma_diff(0.625, 2.0, 2.0005)
    assert got == pytest.approx(5.2163397379507311e-5, rel=1e-11)
    got = upper_inc_gamma_diff(0.625, 2.0, 3.7)
    assert got == pytest.approx(0.077661633681734968, rel=1e-11)


@given(
    a=st.floats(0.2, 2.5),
    x1=st.floats(0.1, 5.0),
    scale=st.floats(1.0000001, 1.5),
)
@settings(max_examples=100, deadline=None)
def test_gamma_diff_positive_and_additive(a, x1, scale):
    x2 = x1 * scale
    xm = math.sqrt(x1 * x2)
    whole = upper_inc_gamma_diff(a, x1, x2)
    split = upper_inc_gamma_diff(a, x1, xm) + upper_inc_gamma_diff(a, xm, x2)
    assert whole > 0.0
    assert whole == pytest.approx(split, rel=1e-8, abs=1e-15)


@pytest.mark.parametrize("a,b,c,z,ref", HYP_REF)
def test_gauss_2f1_reference(a, b, c, z, ref):
    assert gauss_2f1(a, b, c, z) == pytest.approx(ref, rel=1e-10)


def test_gauss_2f1_degenerate_parameter_difference():
    # c - a - b exactly integer exercises the averaged-shift branch
    val = gauss_2f1(0.25, 0.25, 1.5, 0.9)
    import mpmath as mp

    ref = float(mp.hyp2f1(0.25, 0.25, 1.5, 0.9))
    assert val == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize(
    "n,z,ref",
    [
        (0.3, 0.5, -1.2878942050071654),
        (-0.7, 0.25, -0.15191984534878636),
        (1.7, 0.95, -6.0683619433013105),
        (-2.3, 0.6, 2.7481502820169406),
    ],
)
def test_odd_power_diff_identity_reference(n, z, ref):
    lhs, rhs = odd_power_diff_identity(n, z)
    assert lhs == pytest.approx(ref, rel=1e-12)
    assert rhs == pytest.approx(ref, rel=1e-9)


@given(
    n=st.floats(-2.8, 2.8).filter(lambda v: abs(v + 1.0) > 1e-3),
    z=st.floats(0.01, 0.97),
)
@settings(max_examples=150, deadline=None)
def test_odd_power_diff_identity_holds(n, z):
    lhs, rhs = odd_power_diff_identity(n, z)
    assert lhs == pytest.approx(rhs, rel=1e-7, abs=1e-10)


def test_sphere_reduce_constants():
    # total sphere areas recovered from the unit zonal function
    assert sphere_reduce(lambda t: np.ones_like(t), 2) == pytest.approx(
        2.0 * math.pi, rel=1e-12
    )
    assert sphere_reduce(lambda t: np.ones_like(t), 3) == pytest.approx(
        4.0 * math.pi, rel=1e-12
    )
    assert sphere_reduce(lambda t: t**2, 3) == pytest.approx(
        4.0 * math.pi / 3.0, rel=1e-12
    )


def test_sphere_reduce_exponential_zonal():
    # mpmath: area(S^{d-2}) * quad(exp(t) (1-t^2)^((d-3)/2), [-1, 1])
    refs = {2: 7.9549265210128452, 3: 14.768013745765291, 4: 22.311587120319795}
    for d, ref in refs.items():
        assert sphere_reduce(np.exp, d) == pytest.approx(ref, rel=1e-10)


def test_unit_sphere_area_values():
    assert unit_sphere_area(1) == pytest.approx(2.0)
    assert unit_sphere_area(2) == pytest.approx(2.0 * math.pi)
    assert unit_sphere_area(3) == pytest.approx(4.0 * math.pi)
