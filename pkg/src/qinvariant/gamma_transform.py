"""Gamma transform: ``I(q; x) = chi^(q/chi) E[f((chi G)^(1/alpha) x)]`` with ``G ~ Gamma(q/chi)``.

Applied to a 1-invariant function of a self-similar semigroup it yields a
q-invariant function of the associated Ornstein-Uhlenbeck semigroup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NonFinite, QuadratureFailure

DEFAULT_ORDER = 64
ADAPTIVE_BELOW = 0.05
_MOMENT_CHECK = 6


@dataclass(frozen=True)
class QuadratureRule:
    """Rule for ``E[h(G)]``, ``G ~ Gamma(a + 1)``.

    ``kind`` is ``"gauss_laguerre"`` (``nodes``/``weights`` set, weights sum to
    one) or ``"adaptive"`` (scipy ``quad`` with relative tolerance ``rtol``).
    """

    kind: str
    exponent: float
    order: int = 0
    rtol: float = 1e-11
    nodes: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    weights: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @classmethod
    def gauss_laguerre(cls, order: int, exponent: float) -> "QuadratureRule":
        if exponent <= -1:
            raise DomainError("Gauss-Laguerre exponent must exceed -1")
        x, w = special.roots_genlaguerre(order, exponent)
        # weights sum to Gamma(a + 1); normalise in log space for large a
        w = w / math.exp(special.gammaln(exponent + 1.0))
        rule = cls("gauss_laguerre", exponent, order, nodes=x, weights=w)
        rule._check_moments()
        return rule

    @classmethod
    def adaptive(cls, exponent: float, rtol: float = 1e-11) -> "QuadratureRule":
        if exponent <= -1:
            raise DomainError("Gamma shape must be positive")
        return cls("adaptive", exponent, rtol=rtol)

    def _check_moments(self):
        if np.any(self.weights <= 0) or np.any(np.diff(self.nodes) <= 0) or self.nodes[0] <= 0:
            raise QuadratureFailure("Gauss-Laguerre rule has non-positive weights or unordered nodes")
        shape = self.exponent + 1.0
        for k in range(min(_MOMENT_CHECK, 2 * self.order - 1) + 1):
            exact = math.exp(special.gammaln(shape + k) - special.gammaln(shape))
            got = float(np.dot(self.weights, self.nodes**k))
            if abs(got - exact) > 1e-10 * exact:
                raise QuadratureFailure(f"moment {k}: rule gives {got}, exact {exact}")

    @property
    def shape(self) -> float:
        return self.exponent + 1.0

    def expect(self, h: Callable[[np.ndarray], np.ndarray]) -> float:
        """``E[h(G)]``."""
        if self.kind == "gauss_laguerre":
            vals = _eval(h, self.nodes)
            return float(np.dot(self.weights, vals))
        return _adaptive_expect(h, self.shape, self.rtol)


def default_rule(q: float, chi: float, order: int = DEFAULT_ORDER) -> QuadratureRule:
    a = q / chi
    if a < ADAPTIVE_BELOW:
        return QuadratureRule.adaptive(a - 1.0)
    return QuadratureRule.gauss_laguerre(order, a - 1.0)


@dataclass(frozen=True)
class GammaTransformSpec:
    q: float
    chi: float
    alpha: float
    rule: Optional[QuadratureRule] = None

    def __post_init__(self):
        if not (self.q > 0 and self.chi > 0 and self.alpha > 0):
            raise DomainError("q, chi and alpha must be positive")
        if self.rule is None:
            object.__setattr__(self, "rule", default_rule(self.q, self.chi))
        elif abs(self.rule.shape - self.q / self.chi) > 1e-12 * max(1.0, self.q / self.chi):
            raise DomainError("quadrature rule shape does not match q/chi")

    @property
    def shape(self) -> float:
        return self.q / self.chi

    @property
    def prefactor(self) -> float:
        return self.chi**self.shape


def _eval(f, y: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(y), dtype=float)
        if vals.shape != y.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([float(f(v)) for v in y])
    if not np.all(np.isfinite(vals)):
        raise NonFinite("integrand returned non-finite values at quadrature nodes")
    return vals


def _adaptive_expect(h, shape: float, rtol: float) -> float:
    """``E[h(G)]`` by quad: algebraic weight on ``[0, 1]``, plain integrand beyond."""
    log_norm = special.gammaln(shape)
    scal = lambda r: float(_eval(h, np.array([r]))[0])  # noqa: E731
    head, e1 = integrate.quad(lambda r: scal(r) * math.exp(-r), 0.0, 1.0, weight="alg", wvar=(shape - 1.0, 0.0), epsrel=rtol, epsabs=0.0, limit=200)
    # beyond r_max the Gamma weight is below e^-700 and f is not evaluated, so
    # series integrands never see arguments where their partial sums overflow
    r_max = 700.0 + 2.0 * shape
    tail, e2 = integrate.quad(lambda r: scal(r) * math.exp(-r + (shape - 1.0) * math.log(r)), 1.0, r_max, epsrel=rtol, epsabs=0.0, limit=400)
    total = head + tail
    if not math.isfinite(total) or e1 + e2 > 100 * rtol * abs(total):
        raise QuadratureFailure(f"adaptive Gamma expectation stalled (error {e1 + e2:.2e})")
    return total / math.exp(log_norm)


def apply(spec: GammaTransformSpec, f: Callable, x) -> float:
    """``chi^(q/chi) E[f((chi G)^(1/alpha) x)]``; ``f`` may be vectorised or scalar."""
    x = float(x)
    inv_a = 1.0 / spec.alpha
    h = lambda r: f((spec.chi * np.asarray(r)) ** inv_a * x)  # noqa: E731
    return spec.prefactor * spec.rule.expect(h)


def dilate(f: Callable, c: float) -> Callable:
    """``d_c f(y) = f(c y)``."""
    return lambda y: f(c * np.asarray(y))


def time_space_invariant(spec: GammaTransformSpec, f_inv: Callable, t: float, x) -> float:
    """``(1 + chi t)^(-q/chi) apply(d_{(1 + chi t)^(-1/alpha)} f_inv, x)``."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        return apply(spec, f_inv, x)
    s = 1.0 + spec.chi * t
    return s ** (-spec.shape) * apply(spec, dilate(f_inv, s ** (-1.0 / spec.alpha)), x)


def rescaled(spec: GammaTransformSpec, r: float) -> GammaTransformSpec:
    """Spec with ``(q, chi) -> (q r, chi r)``; the Gamma shape is unchanged."""
    return GammaTransformSpec(spec.q * r, spec.chi * r, spec.alpha, spec.rule)
