"""Monte Carlo for Lamperti / OU images of spectrally negative Lévy processes.

Notation: ``xi`` is the Lévy process (``xi_0 = 0``), ``V_u = int_0^u e^{alpha xi}``,
``chi = alpha lambda`` and ``e_chi(t) = (e^{chi t} - 1)/chi``.  From ``x > 0``

    X_s = x exp(xi_{A_s}),            x^alpha V_{A_s} = s
    U_t = e^{-lambda t} X_{e_chi(t)}

so the OU time of xi-time ``u`` is ``v_chi(x^alpha V_u) = log(1 + chi x^alpha V_u)/chi``
and ``Delta_t = int_0^t U^{-alpha}`` is the xi-clock itself.

Three engines:

* a xi-clock streaming engine (any driver; minimal process killed at 0),
* an exact engine for Brownian drivers with ``alpha = 2``, where ``U^2`` is a
  squared-Bessel OU process reflected at 0 (the recurrent extension),
* a sampler of the exponential functional ``V_inf`` for passage to 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate

from .errors import ConfigError, DomainError, GridExhausted, InsufficientHits, UnsupportedExponent
from .levy_model import (
    BrownianDrift,
    EsscherShift,
    LevyExponent,
    Pochhammer,
    TabulatedTriplet,
    _Y_MIN,
)

BLOCK = 10_000
MIN_HITS = 100
U_FLOOR = 1e-12
EXP_FUNCTIONAL_CUT = 36.0  # stop once alpha xi < -36: remaining mass below e^-36 E[V]
CDF_POINTS = 4097


# configuration ----------------------------------------------------------------


@dataclass(frozen=True)
class JumpAdapted:
    """Jumps below ``eps`` in size become a variance-matched Gaussian."""

    eps: float = 1e-3

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("jump cutoff must be positive")


Scheme = Union[str, JumpAdapted]


@dataclass(frozen=True)
class PathConfig:
    """``scheme`` is ``"euler"`` (Gaussian drivers on a xi grid), ``JumpAdapted``
    (jump drivers on a xi grid) or ``"exact_bessel"`` (Brownian, ``alpha = 2``,
    OU-time stepping with exact squared-Bessel transitions)."""

    psi: LevyExponent
    alpha: float
    lam: float
    dt: float
    horizon: float
    seed: int = 0
    scheme: Scheme = "euler"

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.horizon > self.dt:
            raise ConfigError("horizon must exceed dt")
        if not self.alpha > 0 or self.lam < 0:
            raise ConfigError("need alpha > 0 and lambda >= 0")
        if isinstance(self.scheme, str) and self.scheme not in ("euler", "exact_bessel"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "exact_bessel":
            b, sigma, dens = triplet(self.psi)
            if dens is not None or sigma <= 0 or self.alpha != 2.0:
                raise ConfigError("exact_bessel needs a Brownian driver with sigma > 0 and alpha = 2")

    @property
    def chi(self) -> float:
        return self.alpha * self.lam

    def generators(self, n_paths: int) -> list[np.random.Generator]:
        """One generator per block of ``BLOCK`` paths, derived from ``(seed, block)``."""
        n_blocks = -(-n_paths // BLOCK)
        return [np.random.default_rng(s) for s in np.random.SeedSequence(self.seed).spawn(n_blocks)]


def e_chi(t, chi: float):
    t = np.asarray(t, dtype=float)
    return t if chi == 0 else np.expm1(chi * t) / chi


def v_chi(s, chi: float):
    s = np.asarray(s, dtype=float)
    return s if chi == 0 else np.log1p(chi * s) / chi


# drivers ----------------------------------------------------------------------


def triplet(psi: LevyExponent) -> tuple[float, float, Optional[Callable]]:
    """``(b, sigma, density)`` with ``density = None`` when there are no jumps."""
    if isinstance(psi, BrownianDrift):
        return psi.b, psi.sigma, None
    if isinstance(psi, Pochhammer):
        return psi.mean(), 0.0, psi.jump_density
    if isinstance(psi, TabulatedTriplet):
        return psi.b, psi.sigma, psi.density
    if isinstance(psi, EsscherShift):
        _, sigma, dens = triplet(psi.base)
        g = psi.gamma
        if dens is None:
            return psi.mean(), sigma, None
        return psi.mean(), sigma, (lambda r, d=dens: np.exp(g * np.asarray(r)) * d(r))
    raise UnsupportedExponent(f"no sampler for exponent kind {psi.kind!r}")


@dataclass
class GaussianIncrements:
    b: float
    sigma: float

    def sample(self, rng: np.random.Generator, n: int, dt) -> np.ndarray:
        return self.b * dt + np.sqrt(self.sigma * dt) * rng.standard_normal(n)

    @property
    def var_rate(self) -> float:
        return self.sigma


@dataclass
class JumpIncrements:
    """Small jumps as Gaussian, big jumps as compound Poisson from a tabulated law.

    The big-jump law is tabulated in ``w = log(-r)``: piecewise-uniform in ``w``
    between grid points.  Its compensator is computed from the same table so
    the simulated mean equals ``b`` exactly.
    """

    b: float
    sigma: float
    density: Callable
    eps: float
    rate: float = field(init=False)
    drift: float = field(init=False)
    small_var: float = field(init=False)
    w: np.ndarray = field(init=False, repr=False)
    cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dens = lambda r: float(self.density(r))  # noqa: E731
        log_eps = math.log(self.eps)
        self.small_var, _ = integrate.quad(lambda y: dens(-math.exp(y)) * math.exp(3 * y), _Y_MIN, log_eps, limit=400)
        w_hi = max(log_eps + 1.0, math.log(50.0))
        tail_mass = lambda w: integrate.quad(dens, -np.inf, -math.exp(w), limit=400)[0]  # noqa: E731
        total = tail_mass(w_hi) + integrate.quad(lambda w: dens(-math.exp(w)) * math.exp(w), log_eps, w_hi, limit=400)[0]
        while tail_mass(w_hi) > 1e-13 * total:
            w_hi += 1.0
        w = np.linspace(log_eps, w_hi, CDF_POINTS)
        pdf = np.array([dens(-math.exp(v)) * math.exp(v) for v in w])
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(w))))
        self.rate = float(cum[-1])
        self.cdf = cum / cum[-1]
        self.w = w
        # mean of -e^W for W piecewise uniform on each cell with the cell's mass
        dp = np.diff(self.cdf)
        cell_mean = np.diff(np.exp(w)) / np.diff(w)
        mean_jump = -float(np.dot(dp, cell_mean))
        self.drift = self.b - self.rate * mean_jump

    @property
    def var_rate(self) -> float:
        return self.sigma + self.small_var

    def sample(self, rng: np.random.Generator, n: int, dt) -> np.ndarray:
        out = self.drift * dt + np.sqrt(self.var_rate * dt) * rng.standard_normal(n)
        counts = rng.poisson(self.rate * dt, n)
        m = int(counts.sum())
        if m:
            owners = np.repeat(np.arange(n), counts)
            sizes = -np.exp(np.interp(rng.random(m), self.cdf, self.w))
            out += np.bincount(owners, weights=sizes, minlength=n)
        return out


def increment_sampler(cfg: PathConfig):
    b, sigma, dens = triplet(cfg.psi)
    if dens is None:
        return GaussianIncrements(b, sigma)
    if not isinstance(cfg.scheme, JumpAdapted):
        raise UnsupportedExponent("jump drivers need the JumpAdapted scheme")
    return JumpIncrements(b, sigma, dens, cfg.scheme.eps)


def _has_jumps(cfg: PathConfig) -> bool:
    return triplet(cfg.psi)[2] is not None


# paths ------------------------------------------------------------------------


@dataclass(frozen=True)
class LevyPaths:
    t: np.ndarray
    xi: np.ndarray  # (n_paths, n_steps + 1)


def simulate_levy(cfg: PathConfig, n_paths: int = 1, n_steps: Optional[int] = None) -> LevyPaths:
    """``xi`` on the grid ``k dt`` up to ``horizon`` (or ``n_steps``)."""
    if n_steps is None:
        n_steps = int(round(cfg.horizon / cfg.dt))
    sampler = increment_sampler(cfg)
    xi = np.zeros((n_paths, n_steps + 1))
    for bi, rng in enumerate(cfg.generators(n_paths)):
        sl = slice(bi * BLOCK, min((bi + 1) * BLOCK, n_paths))
        m = sl.stop - sl.start
        inc = np.empty((m, n_steps))
        for k in range(n_steps):
            inc[:, k] = sampler.sample(rng, m, cfg.dt)
        xi[sl, 1:] = np.cumsum(inc, axis=1)
    return LevyPaths(cfg.dt * np.arange(n_steps + 1), xi)


def exponential_functional(xi: np.ndarray, alpha: float, dt: float, sign: float = 1.0) -> np.ndarray:
    """Cumulative trapezoid of ``e^{sign alpha xi}`` along the last axis."""
    e = np.exp(sign * alpha * xi)
    out = np.zeros_like(e)
    out[..., 1:] = np.cumsum(0.5 * dt * (e[..., 1:] + e[..., :-1]), axis=-1)
    return out


@dataclass(frozen=True)
class OUPath:
    """``U`` on a regular OU-time grid; entries after absorption are 0."""

    t: np.ndarray
    U: np.ndarray
    killed_at: float  # OU time of absorption (inf if none)
    xi_time: np.ndarray  # xi-time matched to each grid point
    node_t: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)  # OU times of the xi-grid nodes
    node_U: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


def lamperti_ou(cfg: PathConfig, x0: float, t_max: Optional[float] = None, dt_out: Optional[float] = None, paths: Optional[LevyPaths] = None) -> OUPath:
    """One path of ``U`` built from a xi path by inverting ``x0^alpha V``.

    ``lambda = 0`` is the exact branch ``U = X``.  Raises :class:`GridExhausted`
    if the xi path is too short to reach ``t_max`` and has not been absorbed.
    """
    if x0 <= 0:
        raise DomainError("x0 must be positive")
    if paths is None:
        paths = simulate_levy(cfg, 1)
    xi = paths.xi[0]
    u = paths.t
    chi = cfg.chi
    s = x0**cfg.alpha * exponential_functional(xi, cfg.alpha, cfg.dt)  # X-time
    dt_out = cfg.dt if dt_out is None else dt_out
    covered = float(v_chi(s[-1], chi))
    absorbed = cfg.alpha * xi[-1] + cfg.alpha * math.log(x0) < math.log(U_FLOOR) * cfg.alpha
    if t_max is None:
        t_max = covered
    elif t_max > covered and not absorbed:
        raise GridExhausted(f"xi horizon covers OU time {covered:.4g} < {t_max:.4g}")
    t = dt_out * np.arange(int(math.floor(t_max / dt_out + 1e-9)) + 1)
    target = e_chi(t, chi)
    live = target <= s[-1]
    j = np.clip(np.searchsorted(s, target[live], side="right") - 1, 0, len(s) - 2)
    frac = (target[live] - s[j]) / (s[j + 1] - s[j])
    xi_t = xi[j] + frac * (xi[j + 1] - xi[j])
    u_t = u[j] + frac * cfg.dt
    U = np.zeros_like(t)
    U[live] = x0 * np.exp(xi_t) * np.exp(-cfg.lam * t[live])
    xt = np.full_like(t, np.nan)
    xt[live] = u_t
    node_t = v_chi(s, chi)
    node_U = x0 * np.exp(xi) * np.exp(-cfg.lam * node_t)
    return OUPath(t, U, covered if absorbed else math.inf, xt, node_t, node_U)


def delta_clock(path: OUPath, alpha: float) -> np.ndarray:
    """``Delta_t = int_0^t U^{-alpha}`` on the OU grid (NaN after absorption).

    The trapezoid runs over the path's own nodes (the OU times of the xi grid), where
    each panel spans about one xi step, and is then interpolated to ``path.t``.
    """
    tn, Un = (path.node_t, path.node_U) if path.node_t.size else (path.t, path.U)
    g = Un ** (-alpha)
    cum = np.zeros_like(tn)
    cum[1:] = np.cumsum(0.5 * np.diff(tn) * (g[1:] + g[:-1]))
    out = np.interp(path.t, tn, cum)
    return np.where(path.U > 0, out, np.nan)


def simulate_Y(cfg: PathConfig, x0: float, beta: float, paths: Optional[LevyPaths] = None):
    """``Y_t = e^{alpha xi_t}(x0 + beta int_0^t e^{-alpha xi})`` on the xi grid."""
    if paths is None:
        paths = simulate_levy(cfg, 1)
    inner = exponential_functional(paths.xi, cfg.alpha, cfg.dt, sign=-1.0)
    return paths.t, np.exp(cfg.alpha * paths.xi) * (x0 + beta * inner)


def simulate_Z(cfg: PathConfig, x0: float, beta: float, paths: Optional[LevyPaths] = None):
    """``Z_t = e^{alpha xi_t}(x0 + beta int_0^t e^{alpha xi})^{-1}`` on the xi grid."""
    if x0 == 0:
        raise DomainError("Z needs x0 != 0")
    if paths is None:
        paths = simulate_levy(cfg, 1)
    inner = exponential_functional(paths.xi, cfg.alpha, cfg.dt)
    return paths.t, np.exp(cfg.alpha * paths.xi) / (x0 + beta * inner)


def nabla_clock(t: np.ndarray, Z: np.ndarray, x0: float) -> np.ndarray:
    """``nabla_t = x0 int_0^t Z`` (OU time reached at xi-time ``t``; equals ``int Z`` when ``x0 = 1``)."""
    out = np.zeros_like(Z)
    out[..., 1:] = x0 * np.cumsum(0.5 * np.diff(t) * (Z[..., 1:] + Z[..., :-1]), axis=-1)
    return out


# samples and estimates --------------------------------------------------------


@dataclass
class FptSamples:
    hit_time: np.ndarray
    overshoot: np.ndarray
    killed: np.ndarray

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["hit_time", "overshoot", "killed"])
            for h, o, k in zip(self.hit_time, self.overshoot, self.killed):
                w.writerow([repr(float(h)), repr(float(o)), int(k)])


@dataclass(frozen=True)
class FptEstimate:
    estimate: float
    std_error: float
    n_paths: int
    n_hit: int
    samples: Optional[FptSamples] = field(default=None, repr=False)


def _mean_se(vals: np.ndarray) -> tuple[float, float]:
    n = vals.size
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


# xi-clock streaming engine ----------------------------------------------------


@dataclass(frozen=True)
class _Level:
    """Crossing happens when ``g(xi, V) = c_xi xi - c_v log1p(chi_v V) + offset >= 0``."""

    c_xi: float
    c_v: float
    chi_v: float
    offset: float

    def __call__(self, xi, V):
        return self.c_xi * xi - self.c_v * np.log1p(self.chi_v * V) + self.offset


class _PassageState:
    """Per-path ``(xi, V)``; finished paths are dropped from ``alive``."""

    def __init__(self, n: int, level: _Level, alpha: float, var_rate: Optional[float], kill_g: float, horizon: float, clock: Callable):
        self.level = level
        self.clock = clock
        self.alpha = alpha
        self.var_rate = var_rate
        self.kill_g = kill_g
        self.horizon = horizon
        self.xi = np.zeros(n)
        self.V = np.zeros(n)
        self.g = level(self.xi, self.V)
        self.hit_u = np.full(n, np.nan)
        self.hit_V = np.full(n, np.nan)
        self.killed = np.zeros(n, dtype=bool)
        self.alive = np.flatnonzero(self.g < 0)
        self.hit_u[self.g >= 0] = 0.0
        self.hit_V[self.g >= 0] = 0.0
        self.u = np.zeros(n)

    def steps(self, dt: float, ou_scale: Optional[tuple[float, float]]) -> Union[float, np.ndarray]:
        """xi steps for the alive paths: ``dt`` or, with ``ou_scale``, about ``dt`` of OU time."""
        if ou_scale is None:
            return dt
        idx = self.alive
        return _ou_steps(dt, ou_scale, self.alpha, self.xi[idx], self.V[idx])

    def advance(self, dxi: np.ndarray, unif: Optional[np.ndarray], dt) -> None:
        idx = self.alive
        xi0, V0, g0 = self.xi[idx], self.V[idx], self.g[idx]
        xi1 = xi0 + dxi
        V1 = V0 + 0.5 * dt * (np.exp(self.alpha * xi0) + np.exp(self.alpha * xi1))
        g1 = self.level(xi1, V1)
        hit = g1 >= 0
        frac = np.where(hit, g0 / np.where(hit, g0 - g1, 1.0), 0.5)
        if self.var_rate is not None and unif is not None:
            with np.errstate(over="ignore"):
                p = np.exp(-2.0 * g0 * g1 / (self.var_rate * dt))
            bridge = (~hit) & (unif < p)
            # crossing inside the step: place it where the straight line is closest
            frac = np.where(bridge, np.abs(g0) / (np.abs(g0) + np.abs(g1)), frac)
            hit = hit | bridge
        self.xi[idx], self.V[idx], self.g[idx] = xi1, V1, g1
        h = idx[hit]
        u0 = self.u[idx]
        u1 = u0 + dt
        self.u[idx] = u1
        self.hit_u[h] = (u0 + frac * dt)[hit]
        self.hit_V[h] = V0[hit] + frac[hit] * (V1[hit] - V0[hit])
        dead = (~hit) & ((g1 < self.kill_g) | (self.clock(u1, V1) >= self.horizon))
        self.killed[idx[dead]] = True
        self.alive = idx[~(hit | dead)]


H_MAX = 0.25  # largest xi step taken by OU-time stepping


def _ou_steps(dt: float, ou_scale: tuple[float, float], alpha: float, xi: np.ndarray, V: np.ndarray) -> np.ndarray:
    """xi step ``dt (1 + chi x^alpha V) / (x^alpha e^{alpha xi})`` clipped to ``[dt, H_MAX]``.

    ``ou_scale = (x^alpha, chi)``; the OU time advanced is then about ``dt`` while
    ``U^alpha >= dt / H_MAX`` and paths close to 0 move at ``H_MAX`` per step.
    """
    xa, chi = ou_scale
    with np.errstate(over="ignore"):
        h = dt * (1.0 + chi * xa * V) * np.exp(-alpha * xi) / xa
    return np.clip(h, dt, max(dt, H_MAX))


def _xi_level(process: str, cfg: PathConfig, start: float, barrier: float) -> tuple[_Level, float]:
    """Level function and the multiplier of ``xi`` (for the bridge variance)."""
    al, chi = cfg.alpha, cfg.chi
    if process in ("U", "X_moving_boundary"):
        if not 0 < start <= barrier:
            raise DomainError("need 0 < start <= barrier")
        lev = _Level(1.0, 1.0 / al, chi * start**al, math.log(start / barrier))
        return lev, 1.0
    if process == "Z":
        # Z_0 = start = 1/x0, beta = alpha lambda x0
        if not 0 < start <= barrier:
            raise DomainError("Z passage needs 0 < start <= barrier")
        return _Level(al, 1.0, chi, math.log(start / barrier)), al
    if process == "Yhat":
        # Yhat = 1/Z with Yhat_0 = start; passage down to barrier
        if not 0 < barrier <= start:
            raise DomainError("Yhat passage needs 0 < barrier <= start")
        return _Level(al, 1.0, chi, math.log(barrier / start)), al
    raise DomainError(f"xi-clock engine has no process {process!r}")


def _clock(process: str, functional: str, cfg: PathConfig, start: float, hit_u, hit_V):
    """The clock passage times are reported in (also the clock ``horizon`` is measured in)."""
    if functional == "delta" or process in ("Z", "Yhat"):
        return hit_u
    s = start**cfg.alpha * hit_V
    if process == "X_moving_boundary":
        return s
    return v_chi(s, cfg.chi)


def _clock_fn(process: str, functional: str, cfg: PathConfig, start: float) -> Callable:
    return lambda u, V: _clock(process, functional, cfg, start, u, V)


def _xi_clock_fpt(cfg: PathConfig, process: str, start: float, barrier: float, n_paths: int, functional: str, kill_log: float) -> tuple[np.ndarray, np.ndarray]:
    lev, cx = _xi_level(process, cfg, start, barrier)
    sampler = increment_sampler(cfg)
    bridge = None if _has_jumps(cfg) else sampler.var_rate * cx * cx
    # OU-clock passages step in OU time; xi-clock ones (Z, Yhat, Delta) in xi time
    ou_clock = functional == "time" and process in ("U", "X_moving_boundary")
    scale = (start**cfg.alpha, cfg.chi) if ou_clock else None
    times, killed = [], []
    for bi, rng in enumerate(cfg.generators(n_paths)):
        m = min(BLOCK, n_paths - bi * BLOCK)
        st = _PassageState(m, lev, cfg.alpha, bridge, kill_log, cfg.horizon, _clock_fn(process, functional, cfg, start))
        while st.alive.size:
            k = st.alive.size
            h = st.steps(cfg.dt, scale)
            dxi = sampler.sample(rng, k, h)
            unif = rng.random(k) if bridge is not None else None
            st.advance(dxi, unif, h)
        times.append(_clock(process, functional, cfg, start, st.hit_u, st.hit_V))
        killed.append(st.killed)
    return np.concatenate(times), np.concatenate(killed)


# exact squared-Bessel OU engine -------------------------------------------------


def _bessel_params(cfg: PathConfig) -> tuple[float, float]:
    b, sigma, _ = triplet(cfg.psi)
    return 2.0 + 2.0 * b / sigma, sigma


def besq_ou_step(rng: np.random.Generator, W: np.ndarray, h: float, dim: float, sigma: float, lam: float) -> np.ndarray:
    """Exact transition of ``dW = (sigma dim - 2 lam W) dt + 2 sqrt(sigma W) dB`` over ``h``.

    ``W' = c chi2'(dim, W e^{-2 lam h} / c)`` with ``c = sigma (1 - e^{-2 lam h}) / (2 lam)``;
    the noncentral chi-square is the Poisson mixture ``2 Gamma(dim/2 + N)``,
    ``N ~ Poisson(noncentrality / 2)``.
    """
    if lam == 0:
        c, shrink = sigma * h, 1.0
    else:
        shrink = math.exp(-2.0 * lam * h)
        c = sigma * (1.0 - shrink) / (2.0 * lam)
    nc = W * shrink / c
    n = rng.poisson(0.5 * nc)
    return c * 2.0 * rng.standard_gamma(0.5 * dim + n)


def _bessel_fpt(cfg: PathConfig, process: str, start: float, barrier: float, n_paths: int, functional: str) -> tuple[np.ndarray, np.ndarray]:
    """Upward passage of ``U`` (OU time or Delta clock) or of ``X`` over ``a(1 + chi s)^(1/2)``.

    Both step on the OU grid ``t_k = k dt``; the ``X`` route uses the X-time
    grid ``e_chi(t_k)`` and the moving boundary.  A crossing between grid points
    is detected with the Brownian-bridge probability ``exp(-2 d0 d1 / (sigma h))``.
    """
    if not 0 < start <= barrier:
        raise DomainError("need 0 < start <= barrier")
    dim, sigma = _bessel_params(cfg)
    chi, lam, h = cfg.chi, cfg.lam, cfg.dt
    moving = process == "X_moving_boundary"
    n_steps = int(math.ceil(cfg.horizon / h))
    s_grid = e_chi(h * np.arange(n_steps + 1), chi)
    times, killed = [], []
    for bi, rng in enumerate(cfg.generators(n_paths)):
        m = min(BLOCK, n_paths - bi * BLOCK)
        W = np.full(m, start * start)
        out = np.full(m, np.nan)
        acc = np.zeros(m)  # Delta clock
        if start >= barrier:
            out[:] = 0.0
        alive = np.flatnonzero(np.isnan(out))
        for k in range(n_steps):
            if alive.size == 0:
                break
            w0 = W[alive]
            if moving:
                ds = s_grid[k + 1] - s_grid[k]
                w1 = besq_ou_step(rng, w0, ds, dim, sigma, 0.0)
                b0 = barrier * math.sqrt(1.0 + chi * s_grid[k])
                b1 = barrier * math.sqrt(1.0 + chi * s_grid[k + 1])
                t0, step, var_h = s_grid[k], ds, sigma * ds
            else:
                w1 = besq_ou_step(rng, w0, h, dim, sigma, lam)
                b0 = b1 = barrier
                t0, step, var_h = k * h, h, sigma * h
            r0, r1 = np.sqrt(w0), np.sqrt(w1)
            d0, d1 = b0 - r0, b1 - r1
            hit = d1 <= 0
            with np.errstate(over="ignore"):
                p = np.exp(-2.0 * d0 * d1 / var_h)
            bridge = (~hit) & (rng.random(alive.size) < p)
            frac = np.where(hit, d0 / np.where(hit, d0 - d1, 1.0), np.abs(d0) / (np.abs(d0) + np.abs(d1)))
            crossed = hit | bridge
            if functional == "delta":
                g0, g1 = 1.0 / w0, 1.0 / np.where(crossed, barrier * barrier, w1)
                acc[alive] += 0.5 * np.where(crossed, frac, 1.0) * step * (g0 + g1)
            W[alive] = w1
            done = alive[crossed]
            out[done] = acc[done] if functional == "delta" else t0 + frac[crossed] * step
            alive = alive[~crossed]
        times.append(out)
        killed.append(np.isnan(out))
    return np.concatenate(times), np.concatenate(killed)


# public estimators ------------------------------------------------------------


def sample_fpt(cfg: PathConfig, process: str, start: float, barrier: float, n_paths: int, functional: str = "time") -> FptSamples:
    """Passage samples for ``U`` (OU time or ``functional="delta"``), ``X_moving_boundary`` (X time),
    ``Z`` and ``Yhat`` (their own clock).

    ``cfg.horizon`` is measured in the reported clock, so a censored path changes a
    Laplace estimate by at most ``e^{-q horizon}``.  Paths absorbed at 0 or censored
    are flagged ``killed``; spectrally negative drivers cross upward continuously so
    the overshoot is 0.
    """
    if functional not in ("time", "delta"):
        raise DomainError("functional is 'time' or 'delta'")
    if cfg.scheme == "exact_bessel":
        if process not in ("U", "X_moving_boundary") or (functional == "delta" and process != "U"):
            raise ConfigError("exact_bessel covers U (time or delta) and X_moving_boundary")
        t, killed = _bessel_fpt(cfg, process, start, barrier, n_paths, functional)
    else:
        kill_log = math.log(U_FLOOR)
        t, killed = _xi_clock_fpt(cfg, process, start, barrier, n_paths, functional, kill_log)
    t = np.where(killed, np.inf, t)
    return FptSamples(t, np.zeros_like(t), killed)


def estimate_fpt_laplace(cfg: PathConfig, process: str, start: float, barrier: float, q: float, n_paths: int, functional: str = "time") -> FptEstimate:
    """Mean of ``e^{-q T}`` (``(1 + chi T)^{-q/chi}`` for ``X_moving_boundary``);
    killed paths contribute 0."""
    if n_paths < 1000:
        raise ConfigError("n_paths must be at least 1000")
    if process == "U_to_zero":
        return estimate_T0_laplace(cfg, start, q, n_paths)
    smp = sample_fpt(cfg, process, start, barrier, n_paths, functional)
    n_hit = int((~smp.killed).sum())
    if n_hit < MIN_HITS:
        raise InsufficientHits(f"only {n_hit} of {n_paths} paths reached the barrier")
    T = np.where(smp.killed, 0.0, smp.hit_time)
    if process == "X_moving_boundary":
        vals = (1.0 + cfg.chi * T) ** (-q / cfg.chi)
    else:
        vals = np.exp(-q * T)
    vals = np.where(smp.killed, 0.0, vals)
    est, se = _mean_se(vals)
    return FptEstimate(est, se, n_paths, n_hit, smp)


def sample_exp_functional(cfg: PathConfig, n_paths: int) -> np.ndarray:
    """``V_inf = int_0^inf e^{alpha xi}`` for a driver with negative mean.

    Each path runs until ``alpha xi < -EXP_FUNCTIONAL_CUT``, with xi steps of about
    ``dt e^{-alpha xi}`` (capped at ``H_MAX``) so late, negligible stretches are crossed
    quickly; reaching the xi horizon first raises :class:`GridExhausted`.
    """
    if cfg.psi.mean() >= 0:
        raise DomainError("V_inf is finite only for a negative mean")
    sampler = increment_sampler(cfg)
    al, dt = cfg.alpha, cfg.dt
    out = []
    for bi, rng in enumerate(cfg.generators(n_paths)):
        m = min(BLOCK, n_paths - bi * BLOCK)
        xi = np.zeros(m)
        V = np.zeros(m)
        u = np.zeros(m)
        alive = np.arange(m)
        while alive.size:
            if np.any(u[alive] >= cfg.horizon):
                raise GridExhausted(f"paths still active at xi-time {cfg.horizon}")
            x0 = xi[alive]
            h = _ou_steps(dt, (1.0, 0.0), al, x0, V[alive])
            x1 = x0 + sampler.sample(rng, alive.size, h)
            V[alive] += 0.5 * h * (np.exp(al * x0) + np.exp(al * x1))
            xi[alive] = x1
            u[alive] += h
            alive = alive[al * x1 >= -EXP_FUNCTIONAL_CUT]
        out.append(V)
    return np.concatenate(out)


def estimate_T0_laplace(cfg: PathConfig, x: float, q: float, n_paths: int, V: Optional[np.ndarray] = None) -> FptEstimate:
    """``E_x[e^{-q T_0}]`` with ``T_0 = v_chi(x^alpha V_inf)``."""
    if V is None:
        V = sample_exp_functional(cfg, n_paths)
    chi = cfg.chi
    if chi == 0:
        vals = np.exp(-q * x**cfg.alpha * V)
    else:
        vals = (1.0 + chi * x**cfg.alpha * V) ** (-q / chi)
    est, se = _mean_se(vals)
    T = v_chi(x**cfg.alpha * V, chi)
    return FptEstimate(est, se, V.size, V.size, FptSamples(T, np.zeros_like(T), np.zeros(V.size, dtype=bool)))


# validation experiments ---------------------------------------------------------


def martingale_samples(cfg: PathConfig, x: float, t: float, n_paths: int) -> np.ndarray:
    """Exact samples of the reflected Bessel ``X_t`` (``alpha = 2``, Brownian driver) from ``x``."""
    if cfg.scheme != "exact_bessel":
        raise ConfigError("martingale sampling uses the exact_bessel scheme")
    dim, sigma = _bessel_params(cfg)
    out = []
    for bi, rng in enumerate(cfg.generators(n_paths)):
        m = min(BLOCK, n_paths - bi * BLOCK)
        out.append(np.sqrt(besq_ou_step(rng, np.full(m, x * x), t, dim, sigma, 0.0)))
    return np.concatenate(out)


def stationary_U2(cfg: PathConfig, x: float, t: float, n_paths: int) -> np.ndarray:
    """``U_t^2`` from the exact OU transition (one step to time ``t``)."""
    if cfg.scheme != "exact_bessel":
        raise ConfigError("stationary sampling uses the exact_bessel scheme")
    dim, sigma = _bessel_params(cfg)
    out = []
    for bi, rng in enumerate(cfg.generators(n_paths)):
        m = min(BLOCK, n_paths - bi * BLOCK)
        W = np.full(m, x * x)
        steps = max(1, int(round(t / cfg.dt)))
        for _ in range(steps):
            W = besq_ou_step(rng, W, t / steps, dim, sigma, cfg.lam)
        out.append(W)
    return np.concatenate(out)


def sample_U_at(cfg: PathConfig, x: float, t: float, n_paths: int, max_steps: int = 10**7) -> tuple[np.ndarray, np.ndarray]:
    """``U_t`` of the minimal process by the xi clock; returns ``(U_t, alive)`` (``U_t = 0`` if absorbed).

    Steps are about ``dt`` of OU time (see :func:`_ou_steps`).
    """
    sampler = increment_sampler(cfg)
    al, dt = cfg.alpha, cfg.dt
    xa = x**al
    target = float(e_chi(t, cfg.chi)) / xa
    U_out, alive_out = [], []
    for bi, rng in enumerate(cfg.generators(n_paths)):
        m = min(BLOCK, n_paths - bi * BLOCK)
        xi = np.zeros(m)
        V = np.zeros(m)
        res = np.zeros(m)
        ok = np.zeros(m, dtype=bool)
        act = np.arange(m)
        for _ in range(max_steps):
            if not act.size:
                break
            x0, V0 = xi[act], V[act]
            h = _ou_steps(dt, (xa, cfg.chi), al, x0, V0)
            x1 = x0 + sampler.sample(rng, act.size, h)
            V1 = V0 + 0.5 * h * (np.exp(al * x0) + np.exp(al * x1))
            reach = V1 >= target
            frac = (target - V0[reach]) / (V1[reach] - V0[reach])
            xs = x0[reach] + frac * (x1[reach] - x0[reach])
            res[act[reach]] = x * np.exp(xs - cfg.lam * t)
            ok[act[reach]] = True
            xi[act], V[act] = x1, V1
            gone = (~reach) & (al * x1 < -EXP_FUNCTIONAL_CUT)
            act = act[~(reach | gone)]
        else:
            raise GridExhausted(f"{act.size} paths neither reached OU time t nor were absorbed")
        U_out.append(res)
        alive_out.append(ok)
    return np.concatenate(U_out), np.concatenate(alive_out)


def girsanov_pair(cfg: PathConfig, x: float, t: float, f: Callable[[np.ndarray], np.ndarray], n_paths: int, theta: Optional[float] = None):
    """Both sides of ``E^(theta)[f(U_t)] = E[f(U_t) (U_t/x)^theta e^{lambda theta t}; t < T_0]``.

    Returns ``((lhs, se), (rhs, se))``.
    """
    from .levy_model import cramer_theta

    if theta is None:
        theta = cramer_theta(cfg.psi)
        if theta is None:
            raise DomainError("no Cramér root; pass theta")
    shifted = PathConfig(cfg.psi.esscher(theta), cfg.alpha, cfg.lam, cfg.dt, cfg.horizon, cfg.seed + 1, cfg.scheme)
    U1, ok1 = sample_U_at(shifted, x, t, n_paths)
    lhs = np.where(ok1, f(U1), 0.0)
    U0, ok0 = sample_U_at(cfg, x, t, n_paths)
    w = np.where(ok0, (U0 / x) ** theta * math.exp(cfg.lam * theta * t), 0.0)
    rhs = np.where(ok0, f(U0), 0.0) * w
    return _mean_se(lhs), _mean_se(rhs)


def coupled_refinement(cfg: PathConfig, process: str, start: float, barrier: float, q: float, n_paths: int, functional: str = "time"):
    """Passage estimates on grids ``dt`` and ``dt/2`` driven by the same Brownian path.

    Returns ``((coarse, se), (fine, se))``.  Brownian drivers only.
    """
    b, sigma, dens = triplet(cfg.psi)
    if dens is not None:
        raise UnsupportedExponent("coupled refinement is implemented for Brownian drivers")
    lev, cx = _xi_level(process, cfg, start, barrier)
    kill = math.log(U_FLOOR)
    h = 0.5 * cfg.dt
    vr = sigma * cx * cx
    res = {"coarse": [], "fine": []}
    for bi, rng in enumerate(cfg.generators(n_paths)):
        m = min(BLOCK, n_paths - bi * BLOCK)
        clk = _clock_fn(process, functional, cfg, start)
        coarse = _PassageState(m, lev, cfg.alpha, vr, kill, cfg.horizon, clk)
        fine = _PassageState(m, lev, cfg.alpha, vr, kill, cfg.horizon, clk)
        while coarse.alive.size or fine.alive.size:
            z = rng.standard_normal((2, m))
            u = rng.random((3, m))
            inc = b * h + math.sqrt(sigma * h) * z
            for j in range(2):
                if fine.alive.size:
                    fine.advance(inc[j, fine.alive], u[j, fine.alive], h)
            if coarse.alive.size:
                coarse.advance((inc[0] + inc[1])[coarse.alive], u[2, coarse.alive], cfg.dt)
        for key, st in (("coarse", coarse), ("fine", fine)):
            T = _clock(process, functional, cfg, start, st.hit_u, st.hit_V)
            res[key].append(np.where(st.killed, 0.0, np.exp(-q * np.where(st.killed, 0.0, T))))
    return _mean_se(np.concatenate(res["coarse"])), _mean_se(np.concatenate(res["fine"]))


def time_space_samples(cfg: PathConfig, q: float, x: float, t: float, n_paths: int, truncation=None) -> np.ndarray:
    """Samples of ``(1 + chi t)^(-q/chi) chi^(q/chi) I(q/chi; chi X_t^alpha / (1 + chi t))`` from ``X_0 = x``.

    This is the Gamma transform of the 1-invariant ``y -> I(y^alpha)`` composed with
    the dilation ``(1 + chi t)^(-1/alpha)``, evaluated by the series; its mean is
    constant in ``t``.  Uses exact Bessel samples of ``X_t``.
    """
    from .series_engine import SeriesSpec, Truncation, series_function

    chi, al = cfg.chi, cfg.alpha
    spec = SeriesSpec(al, cfg.psi, q / chi, truncation or Truncation())
    f = series_function(spec)
    X = martingale_samples(cfg, x, t, n_paths) if t > 0 else np.full(n_paths, float(x))
    s = 1.0 + chi * t
    return s ** (-q / chi) * chi ** (q / chi) * f((chi / s) ** (1.0 / al) * X)
