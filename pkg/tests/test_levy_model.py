import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from qinvariant.errors import DomainError
from qinvariant.levy_model import (
    BrownianDrift,
    EsscherShift,
    Pochhammer,
    TabulatedTriplet,
    cramer_theta,
    eval_psi,
    exponent_from_json,
    phi_inverse,
)

DRIVERS = [
    BrownianDrift(-0.25, 1.0),
    BrownianDrift(0.5, 2.0),
    BrownianDrift(0.0, 1.0),
    Pochhammer(1.5, 0.0),
    Pochhammer(1.25, 0.3),
    Pochhammer(1.75, -0.5),
]


def test_brownian_value():
    assert eval_psi(BrownianDrift(-0.25, 1.0), 2.0) == pytest.approx(1.5, abs=1e-15)


def test_pochhammer_zero_and_value():
    p = Pochhammer(1.5, 0.0)
    assert p(0.0) == 0.0
    assert p(1.5) == pytest.approx(math.gamma(2.0) / math.gamma(0.5) / 1.5, rel=1e-13)


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        BrownianDrift(1.0, 1.0)(-0.1)


def test_cramer_roots():
    assert cramer_theta(BrownianDrift(-0.25, 1.0)) == pytest.approx(0.5, abs=1e-12)
    assert cramer_theta(Pochhammer(1.5, 0.0)) == pytest.approx(1.0, abs=1e-12)
    assert cramer_theta(BrownianDrift(1.0, 1.0)) is None


def test_phi_examples():
    assert phi_inverse(BrownianDrift(0.0, 1.0), 2.0) == pytest.approx(2.0, abs=1e-12)
    assert phi_inverse(BrownianDrift(0.3, 1.0), 0.0) == 0.0
    assert phi_inverse(Pochhammer(1.5, 0.0), 0.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("psi", DRIVERS, ids=lambda p: repr(p)[:40])
def test_round_trip(psi):
    qs = np.random.default_rng(1).uniform(0, 10, 100)
    for q in qs:
        assert abs(psi(phi_inverse(psi, q)) - q) < 1e-10


@given(
    idx=st.integers(0, len(DRIVERS) - 1),
    g=st.floats(0.0, 5.0),
    u=st.floats(0.0, 20.0),
)
def test_esscher_consistency(idx, g, u):
    psi = DRIVERS[idx]
    g = max(g, psi.theta0)
    direct = eval_psi(psi, u + g) - eval_psi(psi, g)
    shifted = EsscherShift(psi, g)(u)
    assert shifted == pytest.approx(direct, rel=1e-13, abs=1e-13 * max(1.0, abs(eval_psi(psi, u + g))))
    assert EsscherShift(psi, g)(0.0) == 0.0


@pytest.mark.parametrize("psi", DRIVERS, ids=lambda p: repr(p)[:40])
def test_convexity_probe(psi):
    h = 1e-3
    u = np.linspace(psi.theta0 + h, psi.theta0 + 10, 200)
    d2 = (psi(u + h) - 2 * psi(u) + psi(u - h)) / h**2
    assert d2.min() >= -1e-8 * max(1.0, float(np.abs(psi(u)).max()))
    assert np.all(np.diff(psi(u)) > 0)


@pytest.mark.parametrize("b", [-0.25, 0.0, 0.7])
def test_brownian_mean(b):
    psi = BrownianDrift(b, 1.3)
    h = 1e-7
    assert (psi(h) - psi(0.0)) / h == pytest.approx(b, abs=1e-6)
    assert psi.mean() == pytest.approx(b, abs=1e-15)


@pytest.mark.parametrize("alpha,gamma", [(1.5, 0.0), (1.25, 0.3), (1.75, -0.5), (1.5, 1.0)])
def test_pochhammer_mean(alpha, gamma):
    psi = Pochhammer(alpha, gamma)
    h = 1e-7
    fd = (psi(2 * h) * -1 + 4 * psi(h) - 3 * psi(0.0)) / (2 * h)
    z = gamma - 1.0
    m = round(-z)
    if m >= 0 and abs(z + m) < 1e-12:
        # at z = -m the digamma pole cancels the zero of 1/Gamma(z)
        closed = math.gamma(alpha - m) * (-1) ** m * math.factorial(m) / alpha
    else:
        closed = (math.gamma(z + alpha) / math.gamma(z)) * (special.digamma(z + alpha) - special.digamma(z)) / alpha
    assert fd == pytest.approx(closed, abs=1e-6)
    assert psi.mean() == pytest.approx(closed, abs=1e-10)


def test_pochhammer_mean_reference_value():
    assert Pochhammer(1.5, 0.0).mean() == pytest.approx(-1.18164, abs=1e-5)


def test_pochhammer_matches_tabulated_triplet():
    p = Pochhammer(1.5, 0.2)
    # the tabulated jump part is fully compensated, so its drift is the mean
    tab = TabulatedTriplet(p.mean(), 0.0, p.jump_density)
    for u in (0.5, 1.0, 2.0, 4.0):
        assert tab(u) == pytest.approx(p(u), rel=1e-8, abs=1e-10)


def test_jump_density_supported_on_negative_axis():
    p = Pochhammer(1.5, 0.0)
    assert p.jump_density(np.array([-0.5]))[0] > 0
    assert p.jump_constant == pytest.approx(0.5 / math.gamma(0.5), rel=1e-14)


def test_from_json():
    assert exponent_from_json({"kind": "brownian", "nu": 0.25})(2.0) == pytest.approx(1.5)
    p = exponent_from_json({"kind": "pochhammer", "alpha": 1.5, "gamma": 0.0})
    assert p(1.5) == pytest.approx(Pochhammer(1.5, 0.0)(1.5))
