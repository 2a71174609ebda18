"""Reference special functions, summed term by term.

These are oracles for the series engine, so they share no code with it: each
series is accumulated with its own term recursion in plain floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PoleParameter, TruncationFailure

RTOL = 1e-15
MAX_TERMS = 2000


@dataclass(frozen=True)
class SpecialFnParams:
    name: str
    params: tuple
    rtol: float = RTOL


def _is_nonpositive_int(v: float) -> bool:
    return v <= 0 and v == math.floor(v)


def _accumulate(first: float, ratio, x: float, rtol: float) -> float:
    """Sum ``t_0 = first``, ``t_{n+1} = t_n ratio(n) x``; stop after three negligible terms."""
    total = first
    term = first
    quiet = 0
    for n in range(MAX_TERMS):
        step = ratio(n) * x
        term = term * step
        total += term
        if abs(term) <= rtol * abs(total):
            quiet += 1
            if quiet >= 3 and abs(step) < 0.5:
                return total
        else:
            quiet = 0
    raise TruncationFailure(f"reference series did not converge at x = {x}")


def bessel_I(nu: float, x: float, rtol: float = RTOL) -> float:
    """Modified Bessel function ``I_nu(x) = sum (x/2)^(nu + 2n) / (n! Gamma(nu + n + 1))``, ``x > 0``."""
    if x < 0:
        raise PoleParameter("bessel_I is evaluated at x >= 0")
    if _is_nonpositive_int(nu):
        nu = -nu  # I_{-m} = I_m
    if x == 0:
        return 1.0 if nu == 0 else (0.0 if nu > 0 else math.inf)
    h = 0.5 * x
    first = h**nu / math.gamma(nu + 1.0)
    return _accumulate(first, lambda n: 1.0 / ((n + 1.0) * (nu + n + 1.0)), h * h, rtol)


def kummer_Phi(q: float, nu: float, x: float, rtol: float = RTOL) -> float:
    """Confluent hypergeometric ``Phi(q, nu, x) = sum (q)_n x^n / ((nu)_n n!)``."""
    if _is_nonpositive_int(nu):
        raise PoleParameter(f"Phi is undefined for nu = {nu}")
    if x == 0:
        return 1.0
    return _accumulate(1.0, lambda n: (q + n) / ((nu + n) * (n + 1.0)), x, rtol)


def tricomi_Lambda(q: float, nu: float, x: float, rtol: float = RTOL) -> float:
    """Confluent hypergeometric function of the second kind, non-integer ``nu``, ``x > 0``.

        Lambda(q, nu, x) = Gamma(1 - nu)/Gamma(q - nu + 1) Phi(q, nu, x)
                         + Gamma(nu - 1)/Gamma(q) x^(1 - nu) Phi(q - nu + 1, 2 - nu, x)
    """
    if nu == math.floor(nu):
        raise PoleParameter(f"two-Kummer form needs non-integer nu, got {nu}")
    if x <= 0:
        raise PoleParameter("Lambda is evaluated at x > 0")
    c1 = _rgamma(q - nu + 1.0) * math.gamma(1.0 - nu)
    c2 = _rgamma(q) * math.gamma(nu - 1.0)
    t1 = c1 * kummer_Phi(q, nu, x, rtol) if c1 != 0 else 0.0
    t2 = c2 * x ** (1.0 - nu) * kummer_Phi(q - nu + 1.0, 2.0 - nu, x, rtol) if c2 != 0 else 0.0
    return t1 + t2


def prabhakar_M(alpha: float, beta: float, q: float, z: float, with_factorial: bool = True, rtol: float = RTOL) -> float:
    """Three-parameter Mittag-Leffler function.

    ``with_factorial=True`` is Prabhakar's ``sum (q)_n z^n / (n! Gamma(alpha n + beta))``;
    ``False`` drops the ``n!``, giving ``sum (q)_n z^n / Gamma(alpha n + beta)``.
    """
    if not (alpha > 0 and beta > 0):
        raise PoleParameter("need alpha > 0 and beta > 0")
    if z == 0:
        return 1.0 / math.gamma(beta)
    lg = math.lgamma

    def ratio(n: int) -> float:
        r = math.exp(lg(alpha * n + beta) - lg(alpha * (n + 1) + beta)) * (q + n)
        return r / (n + 1.0) if with_factorial else r

    return _accumulate(1.0 / math.gamma(beta), ratio, z, rtol)


def mittag_leffler(alpha: float, beta: float, z: float, rtol: float = RTOL) -> float:
    """Two-parameter ``E_{alpha,beta}(z) = sum z^n / Gamma(alpha n + beta)``."""
    if z == 0:
        return 1.0 / math.gamma(beta)
    total = 0.0
    quiet = 0
    for n in range(MAX_TERMS):
        sign = -1.0 if z < 0 and n % 2 else 1.0
        term = sign * math.exp(n * math.log(abs(z)) - math.lgamma(alpha * n + beta))
        total += term
        if abs(term) <= rtol * abs(total):
            quiet += 1
            if quiet >= 3:
                return total
        else:
            quiet = 0
    raise TruncationFailure("Mittag-Leffler series did not converge")


def _rgamma(v: float) -> float:
    return 0.0 if _is_nonpositive_int(v) else 1.0 / math.gamma(v)


def evaluate(p: SpecialFnParams, x: float) -> float:
    fns = {
        "bessel_I": bessel_I,
        "kummer_Phi": kummer_Phi,
        "tricomi_Lambda": tricomi_Lambda,
        "prabhakar_M": prabhakar_M,
    }
    try:
        fn = fns[p.name]
    except KeyError:
        raise PoleParameter(f"unknown special function {p.name!r}") from None
    return fn(*p.params, x, rtol=p.rtol)
