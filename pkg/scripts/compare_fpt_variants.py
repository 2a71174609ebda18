"""Derived vs typeset closed forms for the Z and Yhat passage transforms, against Monte Carlo.

Brownian driver with drift 0.5, alpha = 2, lambda = 1; prints one row per (process, q).
"""

import argparse

from qinvariant.fpt_formulas import FptQuery, laplace_fpt
from qinvariant.levy_model import BrownianDrift
from qinvariant.simulator import PathConfig, estimate_fpt_laplace

CASES = (("Z", 1.25, 1.0, 0.8, 1.0), ("Yhat", 0.7, 1.0, 1.0, 0.7))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--q", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    args = ap.parse_args()
    psi, alpha, lam = BrownianDrift(0.5), 2.0, 1.0
    print(f"{'process':8} {'q':>5} {'MC':>9} {'SE':>8} {'derived':>9} {'z':>6} {'typeset':>9} {'z':>6}")
    for i, (proc, x, a, start, barrier) in enumerate(CASES):
        cfg = PathConfig(psi, alpha, lam, 1e-3, 40.0, args.seed + i)
        for q in args.q:
            qr = FptQuery(proc, psi, alpha, lam, q, x, a)
            est = estimate_fpt_laplace(cfg, proc, start, barrier, q, args.paths)
            d, p = laplace_fpt(qr), laplace_fpt(qr, variant="printed")
            zd, zp = (est.estimate - d) / est.std_error, (est.estimate - p) / est.std_error
            print(f"{proc:8} {q:5.2f} {est.estimate:9.5f} {est.std_error:8.5f} {d:9.5f} {zd:6.1f} {p:9.5f} {zp:6.1f}")


if __name__ == "__main__":
    main()
