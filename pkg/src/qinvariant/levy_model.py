"""Laplace exponents of spectrally negative Lévy processes.

An exponent is ``psi(u) = log E[exp(u xi_1)]`` for ``u >= 0``, written in the
compensated Lévy-Khintchine form

    psi(u) = b u + (sigma / 2) u**2 + int_{-inf}^0 (e^{ur} - 1 - ur) nu(r) dr

so ``b`` is the mean and ``sigma`` the Gaussian variance coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, special

from .errors import BracketFailure, ConfigError, DomainError, NonConvergentJumpIntegral

JUMP_ATOL = 1e-10
BRACKET_CAP = 1e6
_LARGE_Z = 20.0


def exp_remainder(x):
    """``e^x - 1 - x`` without cancellation for small ``|x|``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    out = np.empty_like(x)
    xs = x[small]
    out[small] = xs * xs * (0.5 + xs * (1.0 / 6.0 + xs * (1.0 / 24.0 + xs / 120.0)))
    xl = x[~small]
    out[~small] = np.expm1(xl) - xl
    return out if out.ndim else float(out)


def log_poch(z, a):
    """``log((z)_a) = log Gamma(z + a) - log Gamma(z)`` for ``z > 0``, ``a >= 0``.

    Large ``z`` goes through a Stirling difference so that the result keeps
    full relative precision instead of losing ``log Gamma(z)`` digits.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = z > _LARGE_Z
    zs = z[~big]
    out[~big] = special.gammaln(zs + a) - special.gammaln(zs)
    zb = z[big]
    w = zb + a
    out[big] = (
        (zb - 0.5) * np.log1p(a / zb)
        + a * (np.log(w) - 1.0)
        + (1.0 / w - 1.0 / zb) / 12.0
        - (w**-3 - zb**-3) / 360.0
        + (w**-5 - zb**-5) / 1260.0
        - (w**-7 - zb**-7) / 1680.0
    )
    return out if out.ndim else float(out)


def poch(z, a):
    """Real Pochhammer ``(z)_a = Gamma(z + a) / Gamma(z)`` for ``z + a > 0``.

    ``z`` may be negative; ``1/Gamma`` vanishes at the non-positive integers.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = z > _LARGE_Z
    out[big] = np.exp(log_poch(z[big], a))
    zs = z[~big]
    out[~big] = special.gamma(zs + a) * special.rgamma(zs)
    return out if out.ndim else float(out)


def _digamma_over_gamma(z: float) -> float:
    """``digamma(z) / Gamma(z)`` including the finite limit at the poles."""
    if z <= 0 and z == math.floor(z):
        m = int(-z)
        return (-1.0) ** (m + 1) * math.factorial(m)
    return float(special.digamma(z) * special.rgamma(z))


def dpoch(z: float, a: float) -> float:
    """Derivative of ``(z)_a`` with respect to ``z``."""
    g = special.gamma(z + a)
    return float(g * (special.digamma(z + a) * special.rgamma(z) - _digamma_over_gamma(z)))


class LevyExponent:
    """Base class: subclasses implement ``_psi``, ``dpsi``, ``mean`` and ``growth``.

    ``theta0`` (largest root of ``psi(u) = 0``) is computed once at
    construction.
    """

    kind: str = "abstract"

    def __post_init__(self):
        self._validate()
        object.__setattr__(self, "_theta0", _largest_root(self))

    def _validate(self):
        pass

    # evaluation -----------------------------------------------------------
    def _psi(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, u):
        u_arr = np.asarray(u, dtype=float)
        if np.any(u_arr < 0):
            raise DomainError(f"psi is evaluated on u >= 0, got {u!r}")
        out = self._psi(u_arr)
        return out if np.ndim(out) else float(out)

    def log_psi(self, u):
        """``log psi(u)`` where ``psi(u) > 0``."""
        return np.log(self(u))

    def log_psi_ratio(self, u, h: float):
        """``log(psi(u + h) / psi(u))``; subclasses avoid the cancellation when they can."""
        u = np.asarray(u, dtype=float)
        return np.asarray(self.log_psi(u + h)) - np.asarray(self.log_psi(u))

    def dpsi(self, u: float) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        """``b = psi'(0+)``."""
        return self.dpsi(0.0)

    def growth(self) -> Optional[tuple[float, float]]:
        """``(beta, a_beta)`` with ``psi(u) / u**(1 + beta) -> a_beta``, if known."""
        return None

    @property
    def theta0(self) -> float:
        return self._theta0

    def esscher(self, gamma: float) -> "EsscherShift":
        return EsscherShift(self, float(gamma))

    def psi_multiples(self, alpha: float, n: int) -> np.ndarray:
        """``psi(alpha k)`` for ``k = 1..n``; cached per ``alpha``."""
        cache = self._multiples
        arr = cache.get(alpha)
        if arr is None or len(arr) < n:
            m = max(n, 2 * len(arr) if arr is not None else 0, 64)
            arr = np.asarray(self(alpha * np.arange(1, m + 1)), dtype=float)
            cache[alpha] = arr
        return arr[:n]

    def log_psi_multiples(self, alpha: float, n: int) -> np.ndarray:
        """``log |psi(alpha k)|`` for ``k = 1..n``, full precision where positive."""
        key = ("log", alpha)
        cache = self._multiples
        arr = cache.get(key)
        if arr is None or len(arr) < n:
            vals = self.psi_multiples(alpha, n)
            arr = np.log(np.abs(vals))
            pos = vals > 0
            arr[pos] = self.log_psi(alpha * np.arange(1, len(vals) + 1)[pos])
            cache[key] = arr
        return arr[:n]


def _cache_field():
    return field(default_factory=dict, init=False, repr=False, compare=False, hash=False)


@dataclass(frozen=True)
class BrownianDrift(LevyExponent):
    """``psi(u) = b u + sigma u^2 / 2``; ``sigma = 0`` gives a pure drift."""

    b: float
    sigma: float = 1.0
    _multiples: dict = _cache_field()
    kind = "brownian"

    def _validate(self):
        if self.sigma < 0:
            raise DomainError("sigma must be non-negative")

    def _psi(self, u):
        return u * (self.b + 0.5 * self.sigma * u)

    def log_psi(self, u):
        u = np.asarray(u, dtype=float)
        return np.log(u) + np.log(self.b + 0.5 * self.sigma * u)

    def log_psi_ratio(self, u, h: float):
        u = np.asarray(u, dtype=float)
        return np.log1p(h / u) + np.log1p(0.5 * self.sigma * h / (self.b + 0.5 * self.sigma * u))

    def dpsi(self, u):
        return self.b + self.sigma * u

    def growth(self):
        if self.sigma > 0:
            return 1.0, 0.5 * self.sigma
        if self.b > 0:
            return 0.0, self.b
        return None


@dataclass(frozen=True)
class Pochhammer(LevyExponent):
    """``psi(u) = ((u + gamma - 1)_alpha - (gamma - 1)_alpha) / alpha``.

    Defined for ``1 < alpha < 2`` and ``gamma > 1 - alpha``; no Gaussian part.
    """

    alpha: float
    gamma: float = 0.0
    _multiples: dict = _cache_field()
    kind = "pochhammer"

    def _validate(self):
        if not 1.0 < self.alpha < 2.0:
            raise DomainError("Pochhammer exponent needs 1 < alpha < 2")
        if not self.gamma > 1.0 - self.alpha:
            raise DomainError("Pochhammer exponent needs gamma > 1 - alpha")

    @property
    def _offset(self) -> float:
        return float(poch(self.gamma - 1.0, self.alpha))

    def _psi(self, u):
        return (poch(u + self.gamma - 1.0, self.alpha) - self._offset) / self.alpha

    def log_psi(self, u):
        u = np.asarray(u, dtype=float)
        z = u + self.gamma - 1.0
        big = z > _LARGE_Z
        out = np.empty_like(u)
        lp = log_poch(z[big], self.alpha)
        out[big] = lp + np.log1p(-self._offset * np.exp(-lp)) - math.log(self.alpha)
        out[~big] = np.log(self._psi(u[~big]))
        return out if out.ndim else float(out)

    def dpsi(self, u):
        return dpoch(u + self.gamma - 1.0, self.alpha) / self.alpha

    def growth(self):
        return self.alpha - 1.0, 1.0 / self.alpha

    @property
    def jump_constant(self) -> float:
        return (self.alpha - 1.0) / special.gamma(2.0 - self.alpha)

    def jump_density(self, r):
        """Lévy density on ``r < 0``."""
        r = np.asarray(r, dtype=float)
        log_d = (self.alpha + self.gamma - 1.0) * r - (self.alpha + 1.0) * np.log(-np.expm1(r))
        return self.jump_constant * np.exp(log_d)


@dataclass(frozen=True)
class TabulatedTriplet(LevyExponent):
    """Exponent given by its triplet; the jump part is integrated numerically.

    ``density`` maps ``r < 0`` to the Lévy density.  The integrability witness
    ``int (|r| ^ r^2) nu(dr)`` is computed at construction.
    """

    b: float
    sigma: float
    density: Callable[[float], float]
    _multiples: dict = _cache_field()
    kind = "tabulated"

    def _validate(self):
        if self.sigma < 0:
            raise DomainError("sigma must be non-negative")
        w = _jump_integral(lambda r: min(-r, r * r) * self.density(r))
        if not math.isfinite(w):
            raise NonConvergentJumpIntegral("int (|r| ^ r^2) nu(dr) is not finite")
        object.__setattr__(self, "witness", w)

    def _jump(self, u: float) -> float:
        return _jump_integral(lambda r: exp_remainder(u * r) * self.density(r))

    def _psi(self, u):
        if np.ndim(u) == 0:
            jumps = self._jump(float(u))
        else:
            flat = u.ravel()
            jumps = _jump_integral_vec(lambda r: exp_remainder(flat * r) * self.density(r)).reshape(u.shape)
        return self.b * u + 0.5 * self.sigma * u * u + jumps

    def dpsi(self, u):
        jumps = _jump_integral(lambda r: r * math.expm1(u * r) * self.density(r))
        return self.b + self.sigma * u + jumps

    def growth(self):
        if self.sigma > 0:
            return 1.0, 0.5 * self.sigma
        return None


# below r = -e^{-230} an alpha-stable-like density overflows; the neglected mass
# is O(e^{-230 (2 - alpha)})
_Y_MIN = -230.0


def _jump_integral(g: Callable[[float], float]) -> float:
    """``int_{-inf}^0 g(r) dr``; ``r = -e^y`` near ``0-`` tames the singularity."""
    opts = dict(epsabs=JUMP_ATOL / 2, epsrel=1e-12, limit=400)
    far, err_far = integrate.quad(g, -np.inf, -1.0, **opts)
    near, err_near = integrate.quad(lambda y: g(-math.exp(y)) * math.exp(y), _Y_MIN, 0.0, **opts)
    err = err_far + err_near
    if not (math.isfinite(far) and math.isfinite(near)) or err > 10 * JUMP_ATOL * max(1.0, abs(far + near)):
        raise NonConvergentJumpIntegral(f"jump integral error estimate {err:.2e} too large")
    return far + near


def _jump_integral_vec(g: Callable[[float], np.ndarray]) -> np.ndarray:
    """Vector-valued version of :func:`_jump_integral` (one adaptive mesh for all components)."""
    opts = dict(epsabs=JUMP_ATOL / 2, epsrel=1e-12, limit=2000)
    far, err_far = integrate.quad_vec(g, -np.inf, -1.0, **opts)
    near, err_near = integrate.quad_vec(lambda y: g(-math.exp(y)) * math.exp(y), _Y_MIN, 0.0, **opts)
    total = far + near
    err = err_far + err_near
    if not np.all(np.isfinite(total)) or err > 10 * JUMP_ATOL * max(1.0, float(np.max(np.abs(total)))):
        raise NonConvergentJumpIntegral(f"jump integral error estimate {err:.2e} too large")
    return total


@dataclass(frozen=True)
class EsscherShift(LevyExponent):
    """``psi_gamma(u) = psi(u + gamma) - psi(gamma)``."""

    base: LevyExponent
    gamma: float
    _multiples: dict = _cache_field()
    kind = "esscher"

    def _validate(self):
        if self.gamma < 0:
            raise DomainError("Esscher shift needs gamma >= 0")
        object.__setattr__(self, "_shift", float(self.base(self.gamma)))

    def _psi(self, u):
        return self.base._psi(u + self.gamma) - self._shift

    def log_psi(self, u):
        if self._shift == 0.0:
            return self.base.log_psi(np.asarray(u, dtype=float) + self.gamma)
        return super().log_psi(u)

    def dpsi(self, u):
        return self.base.dpsi(u + self.gamma)

    def growth(self):
        return self.base.growth()


# root finding ---------------------------------------------------------------


def _polish(psi: LevyExponent, x: float, target: float) -> float:
    """Two safeguarded Newton steps on ``psi(x) = target``."""
    for _ in range(2):
        d = psi.dpsi(x)
        if d <= 0:
            break
        step = (float(psi(x)) - target) / d
        if abs(step) > 1e-6 * max(1.0, abs(x)):
            break
        x_new = x - step
        if x_new < 0:
            break
        if abs(float(psi(x_new)) - target) <= abs(float(psi(x)) - target):
            x = x_new
    return x


def _bracket_up(psi: LevyExponent, lo: float, target: float) -> float:
    hi = max(2.0 * lo, 1.0)
    while float(psi(hi)) <= target:
        hi *= 2.0
        if hi > BRACKET_CAP:
            raise BracketFailure(f"no sign change of psi - {target} below {BRACKET_CAP:g}")
    return hi


def _largest_root(psi: LevyExponent) -> float:
    b = psi.mean()
    if b >= 0:
        return 0.0
    hi = _bracket_up(psi, 0.0, 0.0)
    lo = hi / 2.0
    for _ in range(200):
        if float(psi(lo)) < 0:
            break
        lo /= 2.0
    else:
        raise BracketFailure("could not find a point with psi < 0")
    root = optimize.brentq(lambda u: float(psi(u)), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _polish(psi, root, 0.0)


def eval_psi(psi: LevyExponent, u):
    return psi(u)


def cramer_theta(psi: LevyExponent) -> Optional[float]:
    """Positive root of ``psi``; ``None`` when the mean is non-negative."""
    if psi.mean() >= 0:
        return None
    return psi.theta0


def phi_inverse(psi: LevyExponent, q: float) -> float:
    """Inverse of ``psi`` on ``[theta0, inf)``."""
    if q < 0:
        raise DomainError("phi is defined for q >= 0")
    lo = psi.theta0
    if q == 0:
        return lo
    hi = _bracket_up(psi, lo, q)
    x = optimize.brentq(lambda u: float(psi(u)) - q, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _polish(psi, x, q)


# JSON descriptors -----------------------------------------------------------


def _tempered_stable(c: float, lam: float, y: float):
    def density(r):
        a = np.abs(r)
        return c * np.exp(-lam * a - (1.0 + y) * np.log(a))

    return density


def exponent_from_json(desc: dict) -> LevyExponent:
    """Build an exponent from ``{"kind": ..., <parameters>}``.

    Kinds: ``brownian`` (b, sigma), ``pochhammer`` (alpha, gamma),
    ``tabulated`` (b, sigma, density) where density is
    ``{"family": "pochhammer", "alpha", "gamma"}`` or
    ``{"family": "tempered_stable", "c", "lambda", "Y"}``.
    """
    try:
        kind = desc["kind"]
        if kind == "brownian":
            if "nu" in desc:
                return BrownianDrift(b=-float(desc["nu"]), sigma=float(desc.get("sigma", 1.0)))
            return BrownianDrift(b=float(desc["b"]), sigma=float(desc.get("sigma", 1.0)))
        if kind == "pochhammer":
            return Pochhammer(alpha=float(desc["alpha"]), gamma=float(desc.get("gamma", 0.0)))
        if kind == "tabulated":
            dens = desc["density"]
            fam = dens["family"]
            if fam == "pochhammer":
                density = Pochhammer(float(dens["alpha"]), float(dens.get("gamma", 0.0))).jump_density
            elif fam == "tempered_stable":
                density = _tempered_stable(float(dens["c"]), float(dens["lambda"]), float(dens["Y"]))
            else:
                raise ConfigError(f"unknown density family {fam!r}")
            return TabulatedTriplet(b=float(desc["b"]), sigma=float(desc.get("sigma", 0.0)), density=density)
    except KeyError as exc:
        raise ConfigError(f"exponent descriptor is missing {exc}") from None
    raise ConfigError(f"unknown exponent kind {desc.get('kind')!r}")
