import math

import mpmath as mp
import pytest
from hypothesis import given, strategies as st
from scipy import special

from qinvariant import special_ref as ref
from qinvariant.errors import PoleParameter
from qinvariant.levy_model import BrownianDrift
from qinvariant.series_engine import SeriesSpec, eval_I, eval_Iq


def test_kummer_at_zero():
    assert ref.kummer_Phi(0.7, 0.75, 0.0) == 1.0


def test_bessel_half_integer():
    assert ref.bessel_I(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-14)


def test_prabhakar_exponential():
    assert ref.prabhakar_M(1.0, 1.0, 1.0, 0.7) == pytest.approx(math.exp(0.7), rel=1e-14)


def test_bessel_asymptotic():
    x = 40.0
    assert ref.bessel_I(0.25, x) * math.sqrt(2 * math.pi * x) * math.exp(-x) == pytest.approx(1.0, rel=0.01)


@given(nu=st.floats(-0.95, 3.0), x=st.floats(0.01, 30.0))
def test_bessel_vs_mpmath(nu, x):
    assert ref.bessel_I(nu, x) == pytest.approx(float(mp.besseli(nu, x)), rel=1e-12)


@given(q=st.floats(0.05, 5.0), nu=st.floats(0.05, 3.0), x=st.floats(0.0, 30.0))
def test_kummer_vs_mpmath(q, nu, x):
    assert ref.kummer_Phi(q, nu, x) == pytest.approx(float(mp.hyp1f1(q, nu, x)), rel=1e-12)


@given(q=st.floats(0.05, 5.0), nu=st.sampled_from([0.6, 0.75, 0.9, 1.5]), x=st.floats(0.05, 5.0))
def test_tricomi_vs_mpmath(q, nu, x):
    # the two-Kummer form cancels, so judge the error against the size of its terms
    t1 = math.gamma(1 - nu) * special.rgamma(q - nu + 1) * ref.kummer_Phi(q, nu, x)
    t2 = math.gamma(nu - 1) / math.gamma(q) * x ** (1 - nu) * ref.kummer_Phi(q - nu + 1, 2 - nu, x)
    err = abs(ref.tricomi_Lambda(q, nu, x) - float(mp.hyperu(q, nu, x)))
    assert err <= 1e-13 * (abs(t1) + abs(t2))


@given(q=st.floats(0.1, 5.0), nu=st.floats(0.1, 3.0), x=st.floats(0.0, 20.0))
def test_kummer_contiguous(q, nu, x):
    lhs = ref.kummer_Phi(q, nu, x) - ref.kummer_Phi(q - 1, nu, x)
    rhs = x / nu * ref.kummer_Phi(q, nu + 1, x)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10 * ref.kummer_Phi(q, nu, x))


@given(a=st.floats(0.5, 2.5), b=st.floats(0.2, 3.0), z=st.floats(-5.0, 10.0))
def test_prabhakar_reduces_to_mittag_leffler(a, b, z):
    m = ref.prabhakar_M(a, b, 1.0, z)
    e = ref.mittag_leffler(a, b, z)
    scale = ref.mittag_leffler(a, b, abs(z))
    assert abs(m - e) <= 1e-12 * scale


def test_mittag_leffler_vs_exp():
    assert ref.mittag_leffler(1.0, 1.0, -2.0) == pytest.approx(math.exp(-2.0), rel=1e-12)


@given(nu=st.sampled_from([0.1, 0.25, 0.4]), x=st.one_of(st.just(0.0), st.floats(1e-6, 10.0)))
def test_series_bessel_form(nu, x):
    psi = BrownianDrift(-nu, 1.0)
    val = eval_I(SeriesSpec(2.0, psi), x * x).value
    want = 1.0 if x == 0 else math.gamma(1 - nu) * (x / math.sqrt(2)) ** nu * ref.bessel_I(-nu, math.sqrt(2) * x)
    assert val == pytest.approx(want, rel=1e-9)


@given(nu=st.sampled_from([0.1, 0.25, 0.4]), q=st.floats(0.1, 4.0), x=st.floats(0.0, 10.0))
def test_series_kummer_form(nu, q, x):
    psi = BrownianDrift(-nu, 1.0)
    assert eval_Iq(SeriesSpec(2.0, psi, q), x * x).value == pytest.approx(ref.kummer_Phi(q, 1 - nu, x * x / 2), rel=1e-9)


def test_poles():
    with pytest.raises(PoleParameter):
        ref.kummer_Phi(1.0, -2.0, 1.0)
    with pytest.raises(PoleParameter):
        ref.tricomi_Lambda(1.0, 2.0, 1.0)
    with pytest.raises(PoleParameter):
        ref.prabhakar_M(0.0, 1.0, 1.0, 1.0)


def test_evaluate_dispatch():
    p = ref.SpecialFnParams("kummer_Phi", (0.7, 0.75))
    assert ref.evaluate(p, 1.0) == pytest.approx(float(mp.hyp1f1(0.7, 0.75, 1.0)), rel=1e-13)
    with pytest.raises(PoleParameter):
        ref.evaluate(ref.SpecialFnParams("nope", ()), 1.0)
