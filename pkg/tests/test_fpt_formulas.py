import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qinvariant import gamma_transform as gt
from qinvariant import special_ref as ref
from qinvariant.errors import DomainError, MeaninglessQuery
from qinvariant.fpt_formulas import FptQuery, harmonic_transfer, laplace_fpt
from qinvariant.levy_model import BrownianDrift, Pochhammer, phi_inverse
from qinvariant.series_engine import SeriesSpec, eval_Iq, series_function

BES = BrownianDrift(-0.25, 1.0)
UP = BrownianDrift(0.4, 1.0)  # positive mean, for the Z and Yhat tags


def U(q, x, a, psi=BES, alpha=2.0, lam=1.0, process="U"):
    return laplace_fpt(FptQuery(process, psi, alpha, lam, q, x, a))


def test_boundary_and_zero_rate():
    assert U(0.7, 1.0, 1.0) == 1.0
    assert U(0.0, 0.3, 1.0) == 1.0
    assert laplace_fpt(FptQuery("U_to_zero", BES, 2.0, 1.0, 0.0, 1.0)) == 1.0


def test_bessel_ou_kummer_ratio():
    q, x, a, chi, nu = 0.7, 0.5, 1.0, 2.0, 0.25
    qp = q / chi
    want = ref.kummer_Phi(qp, 1 - nu, chi * x * x / 2) / ref.kummer_Phi(qp, 1 - nu, chi * a * a / 2)
    assert U(q, x, a) == pytest.approx(want, rel=1e-10)
    assert U(q, x, a, process="X_moving_boundary") == U(q, x, a)


@pytest.mark.parametrize("psi,alpha", [(BES, 2.0), (Pochhammer(1.5, 0.0), 1.5), (UP, 1.0)])
def test_monotonicity(psi, alpha):
    qs = np.linspace(0.1, 5, 12)
    v = [U(q, 0.6, 1.2, psi, alpha) for q in qs]
    assert np.all(np.diff(v) < 0)
    v = [U(1.0, 0.6, a, psi, alpha) for a in np.linspace(0.7, 3.0, 12)]
    assert np.all(np.diff(v) < 0)
    v = [U(1.0, x, 1.2, psi, alpha) for x in np.linspace(0.05, 1.2, 12)]
    assert np.all(np.diff(v) > 0)


@pytest.mark.parametrize("process,psi,alpha", [("U", BES, 2.0), ("U", Pochhammer(1.5, 0.0), 1.5), ("Z", UP, 1.0), ("Yhat", UP, 1.0), ("U_delta_clock", UP, 1.0)])
def test_complete_monotonicity_in_q(process, psi, alpha):
    x, a = (0.8, 1.5) if process != "Z" else (1.0, 2.0)
    v = np.array([laplace_fpt(FptQuery(process, psi, alpha, 1.0, q, x, a)) for q in np.linspace(0.2, 3.0, 8)])
    for k in (1, 2, 3):
        assert np.all((-1) ** k * np.diff(v, k) >= -1e-12)


@given(q=st.floats(0.05, 5.0), x=st.floats(0.01, 2.0), a=st.floats(0.05, 2.0))
def test_agrees_with_gamma_transform(q, x, a):
    x = min(x, a)
    alpha, chi = 2.0, 2.0
    f = series_function(SeriesSpec(alpha, BES))
    spec = gt.GammaTransformSpec(q, chi, alpha)
    ratio = gt.apply(spec, f, x) / gt.apply(spec, f, a)
    assert U(q, x, a) == pytest.approx(ratio, rel=1e-9)


def test_passage_to_zero_tricomi():
    nu, q, x, chi = 0.25, 1.0, 0.8, 2.0
    qp = q / chi
    pre = math.gamma(qp + nu) / math.gamma(nu)
    want = pre * ref.tricomi_Lambda(qp, 1 - nu, chi * x * x / 2)
    assert laplace_fpt(FptQuery("U_to_zero", BES, 2.0, 1.0, q, x)) == pytest.approx(want, rel=1e-9)


def test_harmonic_transfer():
    g = phi_inverse(UP, 1.3)
    h = harmonic_transfer(lambda x: 1.0, UP, 1.3)
    assert h(2.0) == pytest.approx(2.0**g)
    # the Delta-clock closed form is the ratio of the transferred harmonic function
    q, x, a, chi = 1.3, 0.6, 1.4, 1.0
    spec = SeriesSpec(1.0, UP.esscher(g), g / 1.0)
    H = harmonic_transfer(lambda y: eval_Iq(spec, chi * y).value, UP, q)
    got = laplace_fpt(FptQuery("U_delta_clock", UP, 1.0, 1.0, q, x, a))
    assert got == pytest.approx(H(x) / H(a), rel=1e-12)


def test_derived_and_printed_forms_differ():
    qz = FptQuery("Z", UP, 1.5, 1.0, 1.0, 1.0, 2.0)
    assert laplace_fpt(qz) != pytest.approx(laplace_fpt(qz, variant="printed"), rel=1e-3)
    qy = FptQuery("Yhat", UP, 1.5, 1.0, 1.0, 0.5, 1.0)
    assert laplace_fpt(qy) != pytest.approx(laplace_fpt(qy, variant="printed"), rel=1e-3)
    with pytest.raises(DomainError):
        laplace_fpt(qz, variant="other")


def test_query_guards():
    with pytest.raises(MeaninglessQuery):
        FptQuery("U", BES, 2.0, 1.0, 1.0, 2.0, 1.0)
    with pytest.raises(MeaninglessQuery):
        FptQuery("U_to_zero", UP, 2.0, 1.0, 1.0, 1.0)
    with pytest.raises(MeaninglessQuery):
        FptQuery("Z", BES, 2.0, 1.0, 1.0, 1.0, 2.0)
    with pytest.raises(DomainError):
        FptQuery("W", BES, 2.0, 1.0, 1.0, 1.0, 2.0)
    with pytest.raises(DomainError):
        FptQuery("U", BES, 2.0, 1.0, 1.0, 1.0)
    with pytest.raises(MeaninglessQuery):
        laplace_fpt(FptQuery("U_delta_clock", UP, 1.0, 1.0, 0.0, 0.5, 1.0))


@pytest.mark.slow
def test_variant_forms_resolved_by_monte_carlo():
    from qinvariant.validation import run_suite

    res = run_suite("variants", seed=0)
    failed = [(c.name, c.residual, c.detail) for c in res.checks if not c.passed]
    assert not failed, failed
    assert any(c.name.endswith("typeset rejected") for c in res.checks)
