"""Finite-difference sign pattern in q of the stable-OU double Laplace transform.

A completely monotone function has (-1)^k Delta^k f >= 0 for every k; the script
reports the smallest such value up to order 3 for both the verbatim and the
rescaled-argument variants.
"""

import numpy as np

from qinvariant.stable_wh import StableParams, ou_fpt_double_laplace


def worst_differences(f, qs):
    vals = np.array([f(q) for q in qs])
    return [float(np.min((-1) ** k * np.diff(vals, k))) for k in (1, 2, 3)]


def main():
    params = StableParams.from_class(1.5, 1, 2)
    qs = np.linspace(0.25, 4.0, 16)
    print(f"{'variant':10} {'side':6} {'chi':>5}  min (-1)^k diff^k, k = 1, 2, 3")
    for variant in ("verbatim", "rescaled"):
        for side in ("below", "above"):
            for chi in (0.5, 2.0):
                w = worst_differences(lambda q: ou_fpt_double_laplace(params, side, q, 1.5, 0.5, chi, variant=variant), qs)
                print(f"{variant:10} {side:6} {chi:5.1f}  " + "  ".join(f"{v:+.3e}" for v in w))


if __name__ == "__main__":
    main()
