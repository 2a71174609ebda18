import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from qinvariant import gamma_transform as gt
from qinvariant.errors import DomainError, NonFinite
from qinvariant.levy_model import BrownianDrift
from qinvariant.series_engine import SeriesSpec, eval_Iq, series_function

BES = BrownianDrift(-0.25, 1.0)


@given(q=st.floats(0.01, 10.0), chi=st.floats(0.1, 5.0), alpha=st.floats(0.5, 2.0), x=st.floats(0.0, 5.0))
def test_constant_function(q, chi, alpha, x):
    spec = gt.GammaTransformSpec(q, chi, alpha)
    assert gt.apply(spec, lambda y: np.ones_like(y), x) == pytest.approx(chi ** (q / chi), rel=1e-10)


@pytest.mark.parametrize("q,chi,alpha", [(0.7, 2.0, 2.0), (1.3, 0.5, 1.5), (0.02, 1.0, 1.25)])
def test_first_moment(q, chi, alpha):
    spec = gt.GammaTransformSpec(q, chi, alpha)
    assert gt.apply(spec, lambda y: np.asarray(y) ** alpha, 1.0) == pytest.approx(chi ** (q / chi) * q, rel=1e-10)


@given(q=st.floats(0.06, 6.0), chi=st.floats(0.2, 4.0), alpha=st.floats(0.5, 2.0), k=st.integers(0, 5))
def test_moment_exactness(q, chi, alpha, k):
    spec = gt.GammaTransformSpec(q, chi, alpha)
    a = q / chi
    exact = chi**a * chi**k * math.exp(special.gammaln(a + k) - special.gammaln(a))
    assert gt.apply(spec, lambda y: np.asarray(y) ** (alpha * k), 1.0) == pytest.approx(exact, rel=1e-10)


def test_series_integrand():
    q, chi, alpha, x = 0.7, 2.0, 2.0, 1.0
    spec = gt.GammaTransformSpec(q, chi, alpha)
    got = gt.apply(spec, series_function(SeriesSpec(alpha, BES)), x)
    want = chi ** (q / chi) * eval_Iq(SeriesSpec(alpha, BES, q / chi), chi * x**alpha).value
    assert got == pytest.approx(want, rel=1e-9)


@given(q=st.floats(0.1, 4.0), chi=st.floats(0.3, 3.0), r=st.floats(0.2, 5.0), x=st.floats(0.0, 3.0))
def test_scaling_identity(q, chi, r, x):
    # I_r(x) = I(r^(1/alpha) x): transforming against (q r, chi r) equals rescaling the argument
    alpha = 2.0
    f = series_function(SeriesSpec(alpha, BES))
    spec = gt.GammaTransformSpec(q, chi, alpha)
    lhs = gt.apply(gt.rescaled(spec, r), f, x) / (chi * r) ** (q / chi)
    rhs = gt.apply(spec, f, r ** (1 / alpha) * x) / chi ** (q / chi)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@given(q=st.floats(0.1, 5.0), x=st.floats(0.0, 3.0), which=st.integers(0, 2))
def test_order_stability(q, x, which):
    chi, alpha = 2.0, 2.0
    f = [series_function(SeriesSpec(alpha, BES)), lambda y: np.exp(-np.asarray(y) ** alpha), lambda y: np.asarray(y) ** alpha * np.exp(-0.25 * np.asarray(y) ** alpha)][which]
    lo = gt.GammaTransformSpec(q, chi, alpha, gt.QuadratureRule.gauss_laguerre(64, q / chi - 1))
    hi = gt.GammaTransformSpec(q, chi, alpha, gt.QuadratureRule.gauss_laguerre(128, q / chi - 1))
    a, b = gt.apply(lo, f, x), gt.apply(hi, f, x)
    assert abs(a - b) <= 1e-8 * max(abs(a), 1.0)


def test_adaptive_rule_selected_for_small_shape():
    spec = gt.GammaTransformSpec(0.01, 1.0, 2.0)
    assert spec.rule.kind == "adaptive"
    assert gt.GammaTransformSpec(1.0, 1.0, 2.0).rule.kind == "gauss_laguerre"


def test_time_space_invariant():
    spec = gt.GammaTransformSpec(0.7, 2.0, 2.0)
    f = series_function(SeriesSpec(2.0, BES))
    assert gt.time_space_invariant(spec, f, 0.0, 1.2) == gt.apply(spec, f, 1.2)
    one = gt.time_space_invariant(spec, lambda y: np.ones_like(np.asarray(y, dtype=float)), 1.5, 1.0)
    assert one == pytest.approx((1 + 2.0 * 1.5) ** (-0.35) * 2.0**0.35, rel=1e-12)
    with pytest.raises(DomainError):
        gt.time_space_invariant(spec, f, -1.0, 1.0)


def test_rule_invariants():
    rule = gt.QuadratureRule.gauss_laguerre(32, 0.4)
    assert np.all(rule.weights > 0) and np.all(np.diff(rule.nodes) > 0) and rule.nodes[0] > 0
    assert rule.weights.sum() == pytest.approx(1.0, rel=1e-13)
    with pytest.raises(DomainError):
        gt.GammaTransformSpec(1.0, 1.0, 2.0, rule)


def test_errors():
    with pytest.raises(DomainError):
        gt.GammaTransformSpec(-1.0, 1.0, 2.0)
    with pytest.raises(NonFinite):
        gt.apply(gt.GammaTransformSpec(1.0, 1.0, 2.0), lambda y: np.full_like(y, np.nan), 1.0)
