"""One-time calibration of the KM2 slope threshold.

Computes full distance curves for source PU samples drawn from the default
synthetic generator with pi in {0.1, ..., 0.5}, then scores every candidate
threshold by the mean absolute error of the resulting prior estimates.
The winner is frozen as ``baseline_km.DEFAULT_SLOPE_THRESHOLD``.

    python scripts/calibrate_km2.py --seeds 10
"""

import argparse
import json
import logging

import numpy as np

from puprior.baseline_km import KMConfig, km2_fit, select_lambda
from puprior.datagen import SyntheticConfig, gen_synthetic
from puprior.kernel import KernelConfig


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--c", type=float, default=0.5)
    ap.add_argument("--seed-offset", type=int, default=10_000)
    ap.add_argument("--fw-variant", choices=("pairwise", "vanilla", "open_loop"), default="pairwise")
    args = ap.parse_args(argv)
    logging.disable(logging.WARNING)

    pis = [0.1, 0.2, 0.3, 0.4, 0.5]
    nus = np.round(np.arange(0.02, 0.3001, 0.005), 4)
    kcfg = KernelConfig.gaussian(p=10)
    km = KMConfig(slope_threshold=1e9, fw_variant=args.fw_variant)
    curves = []
    for pi in pis:
        for s in range(args.seeds):
            ds = gen_synthetic(SyntheticConfig(pi=pi, pi_prime=pi, n_source=args.n,
                                               n_target=10, c=args.c,
                                               seed=args.seed_offset + s))
            res = km2_fit(kcfg, km, ds.unlabeled, ds.positives, full_curve=True)
            curves.append((pi, res.curve))

    table = {}
    for nu in nus:
        errs = {pi: [] for pi in pis}
        for pi, curve in curves:
            lam, _ = select_lambda(curve.lambdas, curve.distances, nu)
            errs[pi].append(abs(1.0 - 1.0 / lam - pi))
        table[float(nu)] = {
            "mean_abs_error": float(np.mean([e for v in errs.values() for e in v])),
            "per_pi": {str(pi): float(np.mean(v)) for pi, v in errs.items()},
        }
    best = min(table, key=lambda nu: table[nu]["mean_abs_error"])
    for nu, row in table.items():
        mark = " <- best" if nu == best else ""
        per = " ".join(f"{v:.3f}" for v in row["per_pi"].values())
        print(f"nu={nu:.3f}  mae={row['mean_abs_error']:.4f}  per-pi {per}{mark}")
    print(json.dumps({"best_slope_threshold": best, **table[best]}, indent=2))


if __name__ == "__main__":
    main()
