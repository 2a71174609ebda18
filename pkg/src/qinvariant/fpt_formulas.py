"""Closed-form Laplace transforms of passage times for semi-stable OU processes.

With ``chi = alpha lambda`` and ``I(q; z)`` the series of :mod:`series_engine`:

* ``U``: ``E_x[e^{-q T_a}] = I(q/chi; chi x^alpha) / I(q/chi; chi a^alpha)``, ``x <= a``
* ``X_moving_boundary``: ``E_x[(1 + chi T)^(-q/chi)]``, same ratio, ``T`` the first
  time ``X_u = a (1 + chi u)^(1/alpha)``
* ``U_delta_clock``: ``E_x[e^{-q Delta(T_a)}; T_a < T_0] = (x/a)^g I_g(g/alpha; chi x^alpha) / I_g(g/alpha; chi a^alpha)``
* ``Z`` (from ``1/x`` up to ``a``): ``(a x)^(-g/alpha) I_g(g/alpha; chi) / I_g(g/alpha; chi a x)``
* ``Yhat`` (from ``a`` down to ``x``): ``(x/a)^(g/alpha) I_g(g/alpha; chi) / I_g(g/alpha; chi a / x)``
* ``U_to_zero``: ``E_x[e^{-q T_0}] = N(q/chi; chi x^alpha)``

where ``g = phi(q)`` and ``I_g`` is built on the Esscher shift ``psi_g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import DomainError, MeaninglessQuery, ValidationFailure
from .levy_model import LevyExponent, cramer_theta, phi_inverse
from .series_engine import SeriesSpec, Truncation, eval_Iq, eval_N

PROCESSES = ("U", "X_moving_boundary", "U_delta_clock", "Z", "Yhat", "U_to_zero")
RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class FptQuery:
    process: str
    psi: LevyExponent
    alpha: float
    lam: float
    q: float
    x: float
    a: Optional[float] = None

    def __post_init__(self):
        if self.process not in PROCESSES:
            raise DomainError(f"unknown process tag {self.process!r}")
        if not (self.alpha > 0 and self.lam > 0):
            raise DomainError("alpha and lambda must be positive")
        if self.q < 0:
            raise DomainError("q must be non-negative")
        if self.x <= 0:
            raise DomainError("start must be positive")
        if self.process == "U_to_zero":
            theta = cramer_theta(self.psi)
            if theta is None or not 0 < theta < self.alpha:
                raise MeaninglessQuery("passage to 0 needs a negative mean and 0 < theta < alpha")
            return
        if self.a is None:
            raise DomainError("barrier a is required")
        if self.process == "Z":
            if not 1.0 / self.x <= self.a:
                raise MeaninglessQuery("Z starts at 1/x and needs 1/x <= a")
        elif not self.x <= self.a:
            raise MeaninglessQuery("need 0 < x <= a")
        if self.process in ("Z", "Yhat") and self.psi.mean() <= 0:
            raise MeaninglessQuery("Z and Yhat passage formulas need a positive mean")

    @property
    def chi(self) -> float:
        return self.alpha * self.lam

    @property
    def gamma(self) -> float:
        """Esscher level ``phi(q)``; always derived, never supplied."""
        return phi_inverse(self.psi, self.q)


def _ratio(spec: SeriesSpec, z_num: float, z_den: float) -> float:
    return eval_Iq(spec, z_num).value / eval_Iq(spec, z_den).value


def _esscher_spec(qr: FptQuery, truncation: Truncation) -> tuple[float, SeriesSpec]:
    g = qr.gamma
    if g <= 0:
        raise MeaninglessQuery("phi(q) = 0: the Esscher-shifted series has no q-argument")
    return g, SeriesSpec(qr.alpha, qr.psi.esscher(g), g / qr.alpha, truncation)


def laplace_fpt(
    qr: FptQuery,
    truncation: Truncation = Truncation(),
    c_theta: Optional[float] = None,
    variant: str = "derived",
) -> float:
    """Closed form for the query's process tag; checked to lie in ``(0, 1]``.

    ``variant="printed"`` switches the ``Z`` and ``Yhat`` tags to the literal
    typeset forms (upper barrier read as ``a``)

        Z:    (a x)^(-g) I_g(g/alpha; chi) / I_g(g/alpha; chi (a x)^alpha)
        Yhat: (x/a)^(g/alpha) I_g(g/alpha; chi^(1/alpha)) / I_g(g/alpha; (chi a/x)^(1/alpha))

    which the Monte Carlo suite compares against the derived forms.
    """
    if variant not in ("derived", "printed"):
        raise DomainError("variant is 'derived' or 'printed'")
    chi, al = qr.chi, qr.alpha
    printed = variant == "printed"
    if qr.process in ("U", "X_moving_boundary"):
        if qr.q == 0 or qr.x == qr.a:
            val = 1.0
        else:
            spec = SeriesSpec(al, qr.psi, qr.q / chi, truncation)
            val = _ratio(spec, chi * qr.x**al, chi * qr.a**al)
    elif qr.process == "U_delta_clock":
        g, spec = _esscher_spec(qr, truncation)
        val = (qr.x / qr.a) ** g * _ratio(spec, chi * qr.x**al, chi * qr.a**al)
    elif qr.process == "Z":
        g, spec = _esscher_spec(qr, truncation)
        ax = qr.a * qr.x
        if printed:
            val = ax ** (-g) * _ratio(spec, chi, chi * ax**al)
        else:
            val = ax ** (-g / al) * _ratio(spec, chi, chi * ax)
    elif qr.process == "Yhat":
        g, spec = _esscher_spec(qr, truncation)
        if printed:
            val = (qr.x / qr.a) ** (g / al) * _ratio(spec, chi ** (1 / al), (chi * qr.a / qr.x) ** (1 / al))
        else:
            val = (qr.x / qr.a) ** (g / al) * _ratio(spec, chi, chi * qr.a / qr.x)
    else:
        if qr.q == 0:
            return 1.0
        y = chi * qr.x**al
        val = eval_N(qr.psi, al, None, qr.q / chi, y ** (1.0 / al), c_theta=c_theta, truncation=truncation)
    if not (0.0 < val <= 1.0 + RANGE_SLACK) or not math.isfinite(val):
        raise ValidationFailure(f"{qr.process} transform {val!r} lies outside (0, 1]")
    return float(val)


def harmonic_transfer(H: Callable[[float], float], psi: LevyExponent, q: float) -> Callable[[float], float]:
    """``x -> x^phi(q) H(x)``: harmonic for the Delta clock when ``H`` is for the shifted law."""
    g = phi_inverse(psi, q)
    return lambda x: x**g * H(x)
