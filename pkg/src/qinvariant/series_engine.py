"""Power series built on the products ``prod_{k<=n} psi(alpha k)``.

    I(z)      = sum_n a_n z^n,               1/a_n = prod_{k=1}^n psi(alpha k)
    I(q; z)   = sum_n a_n (q)_n z^n
    N(q; x^a) = I(q; x^a) - C x^theta Gamma(q + theta/a)/Gamma(q) I_theta(q + theta/a; x^a)

where ``I_theta`` uses the Esscher shift of ``psi`` at its Cramér root and ``C``
is the constant in ``I(x^a) ~ C x^theta I_theta(x^a)`` as ``x -> inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .errors import DomainError, NonFinite, ProductDivergence, TruncationFailure, ZeroDenominator
from .levy_model import LevyExponent, cramer_theta

INTEGER_TOL = 1e-9
_CONSECUTIVE = 3


@dataclass(frozen=True)
class Truncation:
    rtol: float = 1e-10
    max_terms: int = 400

    def __post_init__(self):
        if not self.rtol > 0:
            raise DomainError("rtol must be positive")
        if self.max_terms < 8:
            raise DomainError("max_terms must be at least 8")


@dataclass(frozen=True)
class SeriesValue:
    value: complex | float
    terms_used: int
    tail_bound: float


@dataclass(frozen=True)
class SeriesSpec:
    """One member of the family: ``q=None`` selects ``I(z)``, otherwise ``I(q; z)``."""

    alpha: float
    psi: LevyExponent
    q: Optional[float] = None
    truncation: Truncation = field(default_factory=Truncation)

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if self.q is not None and not self.q > 0:
            raise DomainError("q must be positive")
        vals = self.psi.psi_multiples(self.alpha, self.truncation.max_terms)
        if np.any(vals == 0.0):
            k = int(np.argmax(vals == 0.0)) + 1
            raise ZeroDenominator(f"psi(alpha k) = 0 at k = {k}")
        if np.any(vals < 0):
            raise DomainError("psi(alpha k) must be positive; need alpha > theta0")

    def with_q(self, q: Optional[float]) -> "SeriesSpec":
        return SeriesSpec(self.alpha, self.psi, q, self.truncation)


# coefficients -----------------------------------------------------------------


def log_coeffs(psi: LevyExponent, alpha: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(log|a_k|, sign a_k)`` for ``k = 0..n``."""
    if n == 0:
        return np.zeros(1), np.ones(1)
    vals = psi.psi_multiples(alpha, n)
    if np.any(vals == 0.0):
        k = int(np.argmax(vals == 0.0)) + 1
        raise ZeroDenominator(f"psi(alpha k) = 0 at k = {k}")
    logs = np.concatenate(([0.0], -np.cumsum(psi.log_psi_multiples(alpha, n))))
    signs = np.concatenate(([1.0], np.cumprod(np.sign(vals))))
    return logs, signs


def scaled_coeffs(psi: LevyExponent, alpha: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(m_k, e_k)`` with ``a_k = m_k 2^e_k`` for ``k = 0..n``.

    Runs the recursion ``a_k = a_{k-1} / psi(alpha k)`` on a renormalised
    mantissa, so each step costs one rounding whatever the size of ``a_k``.
    """
    vals = psi.psi_multiples(alpha, n) if n else np.empty(0)
    if np.any(vals == 0.0):
        k = int(np.argmax(vals == 0.0)) + 1
        raise ZeroDenominator(f"psi(alpha k) = 0 at k = {k}")
    mant = np.ones(n + 1)
    expo = np.zeros(n + 1, dtype=np.int64)
    m, e = 1.0, 0
    for k in range(1, n + 1):
        m, de = math.frexp(m / vals[k - 1])
        e += de
        mant[k], expo[k] = m, e
    return mant, expo


def coeff(psi: LevyExponent, alpha: float, n: int) -> float:
    """``a_n(psi; alpha)``; zero only through underflow."""
    mant, expo = scaled_coeffs(psi, alpha, n)
    return math.ldexp(float(mant[n]), int(expo[n]))


def log_rising(q: float, n: int) -> np.ndarray:
    """``log (q)_k`` for ``k = 0..n`` and ``q > 0``."""
    k = np.arange(n + 1)
    return special.gammaln(q + k) - special.gammaln(q)


def _spec_log_coeffs(spec: SeriesSpec) -> tuple[np.ndarray, np.ndarray]:
    n = spec.truncation.max_terms
    logs, signs = log_coeffs(spec.psi, spec.alpha, n)
    if spec.q is not None:
        logs = logs + log_rising(spec.q, n)
    return logs, signs


# summation --------------------------------------------------------------------


def sum_series(logc: np.ndarray, signs: np.ndarray, z, rtol: float):
    """Sum ``sum_n signs[n] exp(logc[n]) z^n`` elementwise over ``z``.

    A point stops once ``_CONSECUTIVE`` terms in a row fall below
    ``rtol |S|`` and the geometric majorant ``|t_n| r / (1 - r)`` built from
    the last term ratio ``r`` is below ``rtol |S|`` as well.

    Returns ``(values, terms_used, tail_bound)`` with the shape of ``z``.
    """
    z = np.asarray(z)
    is_complex = np.iscomplexobj(z)
    zf = z.ravel().astype(complex if is_complex else float)
    absz = np.abs(zf)
    with np.errstate(divide="ignore", invalid="ignore"):
        logz = np.log(absz)
    # phase from the angle: z / |z| overflows for subnormal complex z
    unit = np.exp(1j * np.angle(zf)) if is_complex else np.where(zf < 0, -1.0, 1.0)

    m = zf.size
    total = np.zeros(m, dtype=zf.dtype)
    used = np.zeros(m, dtype=int)
    tail = np.zeros(m)
    streak = np.zeros(m, dtype=int)
    prev_mag = np.zeros(m)
    done = np.zeros(m, dtype=bool)
    phase = np.ones(m, dtype=zf.dtype)
    active = np.arange(m)

    for n in range(len(logc)):
        if n == 0:
            mag = np.full(active.size, math.exp(logc[0]))
        else:
            with np.errstate(invalid="ignore", over="ignore"):
                mag = np.exp(logc[n] + n * logz[active])
            mag = np.where(absz[active] > 0, mag, 0.0)
            phase[active] = phase[active] * unit[active]
        term = signs[n] * mag * phase[active]
        if not np.all(np.isfinite(mag)):
            raise NonFinite(f"series term {n} overflowed")
        with np.errstate(over="ignore", invalid="ignore"):
            total[active] += term
        if not np.all(np.isfinite(total[active])):
            raise NonFinite(f"partial sum overflowed at term {n}")
        s_abs = np.abs(total[active])
        small = mag <= rtol * s_abs
        streak[active] = np.where(small, streak[active] + 1, 0)
        if n > 0:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                ratio = np.where(prev_mag[active] > 0, mag / prev_mag[active], 0.0)
                bound = np.where(ratio < 1, mag * ratio / np.where(ratio < 1, 1 - ratio, 1.0), np.inf)
            fin = (streak[active] >= _CONSECUTIVE) & (bound <= rtol * s_abs)
            if np.any(fin):
                idx = active[fin]
                done[idx] = True
                used[idx] = n + 1
                tail[idx] = bound[fin]
                keep = ~fin
                prev_mag[active] = mag
                active = active[keep]
                if active.size == 0:
                    break
                continue
        prev_mag[active] = mag
    if not np.all(done):
        worst = zf[~done][np.argmax(absz[~done])]
        raise TruncationFailure(f"series not converged within {len(logc) - 1} terms at z = {worst}")
    shape = z.shape
    return total.reshape(shape), used.reshape(shape), tail.reshape(shape)


def _evaluate(spec: SeriesSpec, z) -> SeriesValue:
    logc, signs = _spec_log_coeffs(spec)
    vals, used, tail = sum_series(logc, signs, z, spec.truncation.rtol)
    if np.ndim(vals) == 0:
        v = vals[()]
        return SeriesValue(v if np.iscomplexobj(vals) else float(v), int(used), float(tail))
    return SeriesValue(vals, used, tail)


def eval_I(spec: SeriesSpec, z) -> SeriesValue:
    """``I(z) = sum a_n z^n``; ``spec.q`` must be ``None``."""
    if spec.q is not None:
        raise DomainError("eval_I needs a q-free spec; use eval_Iq")
    return _evaluate(spec, z)


def eval_Iq(spec: SeriesSpec, z) -> SeriesValue:
    """``I(q; z) = sum a_n (q)_n z^n``."""
    if spec.q is None:
        raise DomainError("eval_Iq needs spec.q set")
    return _evaluate(spec, z)


def series_function(spec: SeriesSpec):
    """Vectorised ``y -> I(y^alpha)`` (or ``I(q; y^alpha)``) for ``y >= 0``."""
    logc, signs = _spec_log_coeffs(spec)

    def f(y):
        y = np.asarray(y, dtype=float)
        vals, _, _ = sum_series(logc, signs, y**spec.alpha, spec.truncation.rtol)
        return vals

    return f


# asymptotic constant ----------------------------------------------------------


def _richardson(values: list[float]) -> tuple[float, float]:
    """Repeated Richardson on partial sums at ``N, 2N, 4N, ...``.

    The tail of ``sum_k g(k)`` with ``g(k) = O(k^-2)`` expands in powers of
    ``1/N``; level ``j`` removes the ``N^-j`` term.
    """
    table = [list(values)]
    for j in range(1, len(values)):
        prev = table[-1]
        f = 2.0**j
        table.append([(f * prev[i + 1] - prev[i]) / (f - 1.0) for i in range(len(prev) - 1)])
    best = table[-1][0]
    err = abs(best - table[-2][-1]) if len(table) > 1 else math.inf
    return best, err


def eval_C_theta(
    psi: LevyExponent,
    alpha: float,
    beta: Optional[float] = None,
    a_beta: Optional[float] = None,
    n_start: int = 1024,
    levels: int = 5,
) -> float:
    """Constant ``C`` with ``I(x^alpha) ~ C x^theta I_theta(x^alpha)``.

    With ``p = (theta/alpha)(1 + beta)`` and ``psi(u) ~ a_beta u^(1+beta)``

        C = alpha^-p a_beta^(-theta/alpha) e^(p E) prod_k e^(-p/k) psi(alpha k + theta)/psi(alpha k)

    (``E`` the Euler-Mascheroni constant).  The log of the product is summed to
    ``N 2^levels`` and extrapolated.
    """
    theta = cramer_theta(psi)
    if theta is None:
        raise DomainError("C needs a negative mean (a Cramér root)")
    if beta is None or a_beta is None:
        g = psi.growth()
        if g is None:
            raise DomainError("growth index (beta, a_beta) unknown; pass it explicitly")
        beta = g[0] if beta is None else beta
        a_beta = g[1] if a_beta is None else a_beta
    if not (0.0 <= beta <= 1.0 and a_beta > 0):
        raise DomainError("need beta in [0, 1] and a_beta > 0")
    th_a = theta / alpha
    if abs(th_a - round(th_a)) < INTEGER_TOL:
        raise ZeroDenominator(
            f"theta/alpha = {th_a:.12g} is an integer: psi(alpha k) vanishes at k = {round(th_a)}"
        )
    p = th_a * (1.0 + beta)
    n_max = n_start * 2**levels
    k = np.arange(1, n_max + 1, dtype=float)
    u = alpha * k
    psi_u = np.asarray(psi(u))
    if np.any(psi_u <= 0):
        raise DomainError("psi(alpha k) must be positive; need alpha > theta")
    g = np.asarray(psi.log_psi_ratio(u, theta)) - p / k
    csum = np.cumsum(g)
    partial = [float(csum[n_start * 2**j - 1]) for j in range(levels + 1)]
    log_k, err = _richardson(partial)
    if not math.isfinite(log_k) or err > 1e-9 * max(1.0, abs(log_k)):
        raise ProductDivergence(f"log-product did not settle (last correction {err:.2e})")
    return math.exp(-p * math.log(alpha) - th_a * math.log(a_beta) + p * np.euler_gamma + log_k)


# N function -------------------------------------------------------------------


@dataclass(frozen=True)
class NParts:
    """``N = first - second``; both parts kept to judge cancellation."""

    first: float
    second: float

    @property
    def value(self) -> float:
        return self.first - self.second


def eval_N_parts(
    psi: LevyExponent,
    alpha: float,
    q: float,
    x: float,
    theta: Optional[float] = None,
    c_theta: Optional[float] = None,
    truncation: Truncation = Truncation(),
) -> NParts:
    if theta is None:
        theta = cramer_theta(psi)
    if theta is None or not 0 < theta < alpha:
        raise DomainError("N needs a Cramér root 0 < theta < alpha")
    if x < 0:
        raise DomainError("N is evaluated at x >= 0")
    th_a = theta / alpha
    y = x**alpha
    first = eval_Iq(SeriesSpec(alpha, psi, q, truncation), y).value
    if x == 0:
        return NParts(float(first), 0.0)
    if c_theta is None:
        c_theta = eval_C_theta(psi, alpha)
    shifted = SeriesSpec(alpha, psi.esscher(theta), q + th_a, truncation)
    log_pre = math.log(c_theta) + theta * math.log(x) + special.gammaln(q + th_a) - special.gammaln(q)
    second = math.exp(log_pre) * eval_Iq(shifted, y).value
    return NParts(float(first), float(second))


def eval_N(psi: LevyExponent, alpha: float, theta: Optional[float], q: float, x: float, **kw) -> float:
    """``N(q; x^alpha)``."""
    return eval_N_parts(psi, alpha, q, x, theta=theta, **kw).value
