"""Wiener-Hopf factors of stable processes in Doney's classes ``C_{k,l}``.

The stable characteristic exponent is ``Psi(iu) = -c |u|^alpha (1 - i beta sgn(u) tan(pi alpha/2))``
with ``c = (1 + beta^2 tan^2(pi alpha/2))^(-1/2)``.  A process is in ``C_{k,l}``
when ``rho + k = l / alpha``.  All complex powers use the branch
``arg in (-pi, pi]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

from .errors import BranchViolation, DomainError, QuadratureFailure

ANGLE_TOL = 1e-12
CLASS_TOL = 1e-9


def positivity(alpha: float, beta: float) -> float:
    """Zolotarev's ``rho = P(X_1 > 0)``."""
    return 0.5 + math.atan(beta * math.tan(math.pi * alpha / 2)) / (math.pi * alpha)


def beta_for_rho(alpha: float, rho: float) -> float:
    return math.tan(math.pi * alpha * (rho - 0.5)) / math.tan(math.pi * alpha / 2)


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float
    k: Optional[int] = None
    l: Optional[int] = None

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise DomainError("need 1 < alpha < 2")
        if not -1.0 <= self.beta <= 1.0:
            raise DomainError("need -1 <= beta <= 1")
        if (self.k is None) != (self.l is None):
            raise DomainError("set both k and l or neither")
        if self.k is not None and abs(self.rho + self.k - self.l / self.alpha) > CLASS_TOL:
            raise DomainError(
                f"(alpha={self.alpha}, beta={self.beta}) has rho={self.rho:.12g}, not in C_{{{self.k},{self.l}}}"
            )

    @classmethod
    def from_class(cls, alpha: float, k: int, l: int) -> "StableParams":
        rho = l / alpha - k
        if not (1.0 - 1.0 / alpha - CLASS_TOL <= rho <= 1.0 / alpha + CLASS_TOL):
            raise DomainError(f"C_{{{k},{l}}} is empty for alpha={alpha} (rho={rho:.6g})")
        beta = float(np.clip(beta_for_rho(alpha, rho), -1.0, 1.0))
        return cls(alpha, beta, k, l)

    @property
    def rho(self) -> float:
        return positivity(self.alpha, self.beta)

    @property
    def c(self) -> float:
        return 1.0 / math.sqrt(1.0 + (self.beta * math.tan(math.pi * self.alpha / 2)) ** 2)

    @property
    def has_class(self) -> bool:
        return self.k is not None


def cpow(z, p: float):
    """``z^p = |z|^p e^{i p phi}`` with ``phi in (-pi, pi]`` (the ray ``phi = -pi`` maps to ``+pi``)."""
    z = np.asarray(z, dtype=complex)
    phi = np.angle(z)
    phi = np.where(phi <= -math.pi, math.pi, phi)
    return np.abs(z) ** p * np.exp(1j * p * phi)


def f_poly(m: int, x: float, z):
    """``f_m(x, z) = prod_{i=0}^m (z + e^{i x (m - 2i) pi})``; ``m < 0`` is the empty product."""
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for i in range(m + 1):
        out = out * (z + np.exp(1j * x * (m - 2 * i) * math.pi))
    return out


def stable_exponent(params: StableParams, delta):
    """Analytic continuation of ``Psi`` off the real axis.

    ``Psi(delta) = -e^{-i pi alpha rho} delta^alpha`` for ``Im delta > 0`` and
    ``-e^{i pi alpha rho} delta^alpha`` for ``Im delta < 0``; on ``delta = iu``
    it reduces to the displayed exponent.
    """
    d = np.asarray(delta, dtype=complex)
    rot = np.where(d.imag >= 0, np.exp(-1j * math.pi * params.alpha * params.rho), np.exp(1j * math.pi * params.alpha * params.rho))
    return -rot * cpow(d, params.alpha)


def stable_exponent_imag_axis(params: StableParams, u):
    """``Psi(iu)`` straight from the parametrisation."""
    u = np.asarray(u, dtype=float)
    t = math.tan(math.pi * params.alpha / 2)
    return -params.c * np.abs(u) ** params.alpha * (1 - 1j * params.beta * np.sign(u) * t)


@dataclass(frozen=True)
class WienerHopfFactor:
    side: str
    params: StableParams

    def __post_init__(self):
        if self.side not in ("+", "-"):
            raise DomainError("side must be '+' or '-'")
        if not self.params.has_class:
            raise DomainError("Wiener-Hopf factors need a class (k, l)")

    def __call__(self, z):
        return psi_plus(self, z) if self.side == "+" else psi_minus(self, z)


def psi_plus(w: WienerHopfFactor, z):
    """``Psi^+(z) = f_{k-1}(alpha, (-1)^l (-z)^alpha) / f_{l-1}(1/alpha, (-1)^{k+1} z)``, ``Arg z != 0``."""
    p = w.params
    z = np.asarray(z, dtype=complex)
    on_ray = (np.abs(np.angle(z)) <= ANGLE_TOL) & (np.abs(z) > 0)
    if np.any(on_ray):
        raise BranchViolation("Psi^+ is not defined on the positive real axis")
    num = f_poly(p.k - 1, p.alpha, (-1) ** p.l * cpow(-z, p.alpha))
    den = f_poly(p.l - 1, 1.0 / p.alpha, (-1) ** (p.k + 1) * z)
    out = num / den
    return out if out.ndim else complex(out)


def psi_minus(w: WienerHopfFactor, z):
    """``Psi^-(z) = f_{l-1}(1/alpha, (-1)^{k+1} z) / f_k(alpha, (-1)^l z^alpha)``, ``Arg z != -pi``."""
    p = w.params
    z = np.asarray(z, dtype=complex)
    raw = np.angle(z)
    if np.any((raw <= -math.pi + ANGLE_TOL) & (np.abs(z) > 0)):
        raise BranchViolation("Psi^- is not defined on the ray Arg z = -pi")
    num = f_poly(p.l - 1, 1.0 / p.alpha, (-1) ** (p.k + 1) * z)
    den = f_poly(p.k, p.alpha, (-1) ** p.l * cpow(z, p.alpha))
    out = num / den
    return out if out.ndim else complex(out)


def factorization_residual(params: StableParams, delta) -> np.ndarray:
    """``|Psi^-(d) Psi^+(d) (1 - Psi(d)) - 1|``."""
    plus = psi_plus(WienerHopfFactor("+", params), delta)
    minus = psi_minus(WienerHopfFactor("-", params), delta)
    return np.abs(plus * minus * (1.0 - stable_exponent(params, delta)) - 1.0)


def loglog_slope(params: StableParams, x_lo: float = 1e2, x_hi: float = 1e4, n: int = 41) -> float:
    """Least-squares slope of ``log |Psi^+(-x^(1/alpha))|`` against ``log x`` on a log-uniform grid."""
    xs = np.geomspace(x_lo, x_hi, n)
    vals = np.abs(psi_plus(WienerHopfFactor("+", params), -(xs ** (1.0 / params.alpha)) + 0j))
    slope, _ = np.polyfit(np.log(xs), np.log(vals), 1)
    return float(slope)


# double Laplace transforms ----------------------------------------------------


def ou_fpt_double_laplace(
    params: StableParams, side: str, q: float, delta: float, p: float, chi: float, rtol: float = 1e-10, variant: str = "verbatim"
) -> float:
    """``(chi^(q/chi) - Gamma(q/chi)^-1 int_0^inf R(r) e^{-r/chi} r^{q/chi - 1} dr) / (delta - p)``.

    ``R(r) = Psi^+(-r^(1/alpha) delta) / Psi^+(-r^(1/alpha) p)`` for ``side="below"`` and
    ``Psi^-(r^(1/alpha) delta) / Psi^-(r^(1/alpha) p)`` for ``side="above"``.

    ``variant="rescaled"`` evaluates ``R`` at ``r^(-1/alpha)`` (the argument that
    self-similarity gives for killing rate ``r``) and drops the ``chi^(q/chi)``
    normalisation, returning ``(1 - E[R(chi G)]) / (delta - p)`` with ``G ~ Gamma(q/chi)``.
    """
    if variant not in ("verbatim", "rescaled"):
        raise DomainError("variant is 'verbatim' or 'rescaled'")
    if not (q > 0 and delta > 0 and p >= 0 and chi > 0):
        raise DomainError("need q, delta, chi > 0 and p >= 0")
    if delta == p:
        raise DomainError("delta == p is excluded")
    if side == "below":
        w = WienerHopfFactor("+", params)
        sgn = -1.0
    elif side == "above":
        w = WienerHopfFactor("-", params)
        sgn = 1.0
    else:
        raise DomainError("side must be 'below' or 'above'")
    inv_a = 1.0 / params.alpha if variant == "verbatim" else -1.0 / params.alpha

    def ratio(r: float) -> complex:
        # the rescaled argument r^(-1/alpha) blows up at r = 0, where the ratio is flat
        s = max(r, 1e-30) ** inv_a
        return complex(w(sgn * s * delta + 0j)) / complex(w(sgn * s * p + 0j))

    a = q / chi
    imag_seen = [0.0]

    def real_part(r: float) -> float:
        v = ratio(r)
        imag_seen[0] = max(imag_seen[0], abs(v.imag) / max(1.0, abs(v)))
        return v.real

    # the ratio switches from ~1 to its power-law tail where |ratio| changes
    # fastest, roughly at r^(1/alpha) max(delta, p) ~ 1
    r_split = max(delta, p, 1e-12) ** (-params.alpha * math.copysign(1.0, inv_a))
    # substitute r = chi s so the weight is the standard Gamma(a) density
    head, e1 = integrate.quad(
        lambda s: real_part(chi * s) * math.exp(-s),
        0.0,
        r_split / chi,
        weight="alg",
        wvar=(a - 1.0, 0.0),
        epsabs=0.0,
        epsrel=rtol,
        limit=400,
    )
    s0 = r_split / chi
    tail, e2 = integrate.quad(
        lambda t: real_part(chi * (s0 + t)) * math.exp(-(s0 + t) + (a - 1.0) * math.log(s0 + t)),
        0.0,
        np.inf,
        epsabs=0.0,
        epsrel=rtol,
        limit=400,
    )
    if imag_seen[0] > 1e-9:
        raise QuadratureFailure(f"factor ratio has imaginary part {imag_seen[0]:.2e}")
    integral = (head + tail) / math.exp(special.gammaln(a))  # E[R(chi G)]
    err = (e1 + e2) / math.exp(special.gammaln(a))
    if not math.isfinite(integral) or err > 1e3 * rtol * max(1.0, abs(integral)):
        raise QuadratureFailure(f"double Laplace quadrature error {err:.2e}")
    if variant == "rescaled":
        return (1.0 - integral) / (delta - p)
    return chi**a * (1.0 - integral) / (delta - p)
