"""Command-line front end.

    qinvariant eval-series     --config run.json
    qinvariant gamma-transform --config run.json
    qinvariant wiener-hopf     --config run.json
    qinvariant fpt             --config run.json
    qinvariant simulate        --config run.json --paths 20000 --seed 1
    qinvariant validate        --suite kummer

List-valued entries of the config form a grid (cartesian product, in the order
listed); rows come out in grid order.  Exit codes: 0 ok, 1 validation failure,
2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import gamma_transform as gt
from .errors import ConfigError, DomainError, InsufficientHits, NumericalFailure, UnsupportedExponent, ValidationFailure
from .fpt_formulas import FptQuery, laplace_fpt
from .levy_model import exponent_from_json
from .series_engine import SeriesSpec, Truncation, eval_I, eval_Iq, series_function
from .simulator import MIN_HITS, JumpAdapted, PathConfig, estimate_T0_laplace, sample_exp_functional, sample_fpt
from .stable_wh import StableParams, WienerHopfFactor, factorization_residual, loglog_slope, ou_fpt_double_laplace
from .validation import SUITES, run_suite

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


# config helpers ----------------------------------------------------------------


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _grid(cfg: dict, keys: Sequence[str]) -> Iterable[dict]:
    lists = [_as_list(cfg[k]) for k in keys]
    if any(len(v) == 0 for v in lists):
        raise ConfigError("parameter grid is empty")
    for combo in itertools.product(*lists):
        yield dict(zip(keys, combo))


def _need(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"config is missing {', '.join(missing)}")


def _scheme(v) -> Any:
    if v is None or v in ("euler", "exact_bessel"):
        return v or "euler"
    if isinstance(v, dict) and "jump_cutoff" in v:
        return JumpAdapted(float(v["jump_cutoff"]))
    raise ConfigError(f"unknown scheme {v!r}")


def _truncation(cfg: dict) -> Truncation:
    t = cfg.get("truncation", {})
    return Truncation(float(t.get("rtol", 1e-10)), int(t.get("max_terms", 400)))


# commands ----------------------------------------------------------------------


def cmd_eval_series(cfg: dict, args) -> list[dict]:
    _need(cfg, "exponent", "alpha", "z")
    psi = exponent_from_json(cfg["exponent"])
    alpha = float(cfg["alpha"])
    trunc = _truncation(cfg)
    q = cfg.get("q")
    rows = []
    for qv in _as_list(q):
        spec = SeriesSpec(alpha, psi, None if qv is None else float(qv), trunc)
        for z in _as_list(cfg["z"]):
            val = eval_I(spec, float(z)) if qv is None else eval_Iq(spec, float(z))
            rows.append({"q": "" if qv is None else qv, "z": z, "value": val.value, "terms_used": val.terms_used, "tail_bound": val.tail_bound})
    return rows


def cmd_gamma_transform(cfg: dict, args) -> list[dict]:
    _need(cfg, "exponent", "alpha", "lam", "q", "x")
    psi = exponent_from_json(cfg["exponent"])
    alpha, lam = float(cfg["alpha"]), float(cfg["lam"])
    chi = alpha * lam
    f_inv = series_function(SeriesSpec(alpha, psi, None, _truncation(cfg)))
    order = int(cfg.get("order", gt.DEFAULT_ORDER))
    rows = []
    for p in _grid(cfg, ("q", "x")):
        q, x = float(p["q"]), float(p["x"])
        spec = gt.GammaTransformSpec(q, chi, alpha, gt.default_rule(q, chi, order))
        quad = gt.apply(spec, f_inv, x)
        series = chi ** (q / chi) * eval_Iq(SeriesSpec(alpha, psi, q / chi), chi * x**alpha).value
        rows.append({"q": p["q"], "x": p["x"], "quadrature": quad, "series": series, "rel_diff": abs(quad - series) / abs(series)})
    return rows


def cmd_wiener_hopf(cfg: dict, args) -> list[dict]:
    _need(cfg, "alpha", "k", "l")
    params = StableParams.from_class(float(cfg["alpha"]), int(cfg["k"]), int(cfg["l"]))
    mode = cfg.get("mode", "factors")
    if mode == "factors":
        _need(cfg, "points")
        pts = np.array([complex(*pt) for pt in cfg["points"]])
        plus = WienerHopfFactor("+", params)(pts)
        minus = WienerHopfFactor("-", params)(pts)
        res = factorization_residual(params, pts)
        return [
            {"re": z.real, "im": z.imag, "plus_re": a.real, "plus_im": a.imag, "minus_re": b.real, "minus_im": b.imag, "residual": r}
            for z, a, b, r in zip(pts, np.atleast_1d(plus), np.atleast_1d(minus), res)
        ]
    if mode == "slope":
        s = loglog_slope(params, float(cfg.get("x_lo", 1e2)), float(cfg.get("x_hi", 1e4)))
        return [{"alpha": params.alpha, "k": params.k, "l": params.l, "slope": s, "rho": params.rho, "rel_err": abs(s + params.rho) / params.rho}]
    if mode == "double_laplace":
        _need(cfg, "side", "q", "delta", "p", "chi")
        rows = []
        for g in _grid(cfg, ("side", "q", "delta", "p", "chi")):
            v = ou_fpt_double_laplace(
                params, g["side"], float(g["q"]), float(g["delta"]), float(g["p"]), float(g["chi"]), variant=cfg.get("variant", "verbatim")
            )
            rows.append({**g, "value": v})
        return rows
    raise ConfigError(f"unknown wiener-hopf mode {mode!r}")


def cmd_fpt(cfg: dict, args) -> list[dict]:
    _need(cfg, "process", "exponent", "alpha", "lam", "q", "x")
    psi = exponent_from_json(cfg["exponent"])
    cfg = {**cfg, "a": cfg.get("a")}
    variant = cfg.get("variant", "derived")
    rows = []
    for g in _grid(cfg, ("process", "q", "x", "a")):
        a = None if g["a"] is None else float(g["a"])
        qr = FptQuery(g["process"], psi, float(cfg["alpha"]), float(cfg["lam"]), float(g["q"]), float(g["x"]), a)
        rows.append({**g, "a": "" if a is None else g["a"], "value": laplace_fpt(qr, _truncation(cfg), variant=variant)})
    return rows


def cmd_simulate(cfg: dict, args) -> list[dict]:
    _need(cfg, "process", "exponent", "alpha", "lam", "dt", "horizon", "start", "q")
    psi = exponent_from_json(cfg["exponent"])
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    n_paths = args.paths if args.paths is not None else int(cfg.get("paths", 10_000))
    if n_paths < 1000:
        raise ConfigError("at least 1000 paths are needed")
    pc = PathConfig(psi, float(cfg["alpha"]), float(cfg["lam"]), float(cfg["dt"]), float(cfg["horizon"]), seed, _scheme(cfg.get("scheme")))
    process, start = cfg["process"], float(cfg["start"])
    qs = [float(q) for q in _as_list(cfg["q"])]
    rows = []
    if process == "U_to_zero":
        V = sample_exp_functional(pc, n_paths)
        for q in qs:
            e = estimate_T0_laplace(pc, start, q, n_paths, V=V)
            rows.append({"process": process, "q": q, "start": start, "barrier": 0.0, "estimate": e.estimate, "n_hit": e.n_hit, "std_error": e.std_error})
        smp = e.samples
    else:
        _need(cfg, "barrier")
        barrier = float(cfg["barrier"])
        functional = cfg.get("functional", "time")
        smp = sample_fpt(pc, process, start, barrier, n_paths, functional)
        T = np.where(smp.killed, 0.0, smp.hit_time)
        n_hit = int((~smp.killed).sum())
        if n_hit < MIN_HITS:
            raise InsufficientHits(f"only {n_hit} of {n_paths} paths reached the barrier")
        for q in qs:
            if process == "X_moving_boundary":
                vals = (1.0 + pc.chi * T) ** (-q / pc.chi)
            else:
                vals = np.exp(-q * T)
            vals = np.where(smp.killed, 0.0, vals)
            rows.append(
                {"process": process, "q": q, "start": start, "barrier": barrier, "estimate": float(vals.mean()), "n_hit": n_hit, "std_error": float(vals.std(ddof=1) / np.sqrt(vals.size))}
            )
    if cfg.get("samples_csv"):
        smp.to_csv(cfg["samples_csv"])
    return rows


COMMANDS = {
    "eval-series": cmd_eval_series,
    "gamma-transform": cmd_gamma_transform,
    "wiener-hopf": cmd_wiener_hopf,
    "fpt": cmd_fpt,
    "simulate": cmd_simulate,
}


# output -------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, default=_json_default) + "\n"
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {out}: {exc}") from None
    else:
        sys.stdout.write(text)


def _load(path: Optional[str]) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def run_validate(args) -> int:
    names = list(SUITES) if not args.suite else [s for part in args.suite for s in part.split(",")]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    rows, ok = [], True
    for n in names:
        res = run_suite(n, seed=args.seed or 0, n_paths=args.paths)
        ok &= res.passed
        rows.extend(c.row() for c in res.checks)
    if args.out or args.format == "json":
        _emit(render(rows, args.format), args.out)
    if args.out or args.format != "json":
        _print_table(rows)
    return EXIT_OK if ok else EXIT_VALIDATION


def _print_table(rows: list[dict]) -> None:
    print(f"{'status':6}  {'suite':16}  {'check':38}  {'residual':>10}  {'tol':>8}  formula")
    for r in rows:
        print(f"{r['status']:6}  {r['suite']:16}  {r['check'][:38]:38}  {r['residual']:10.3g}  {r['tolerance']:8.2g}  {r['formula']}")
    n_fail = sum(r["status"] == "FAIL" for r in rows)
    print(f"{len(rows) - n_fail} passed, {n_fail} failed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qinvariant", description="q-invariant functions of OU images of self-similar Markov processes")
    ap.add_argument("command", choices=[*COMMANDS, "validate"])
    ap.add_argument("--config")
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--paths", type=int)
    ap.add_argument("--suite", action="append", help="validation suite (repeatable or comma separated)")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return run_validate(args)
        rows = COMMANDS[args.command](_load(args.config), args)
        _emit(render(rows, args.format), args.out)
        return EXIT_OK
    except (ConfigError, DomainError, UnsupportedExponent, KeyError, TypeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
