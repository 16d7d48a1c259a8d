"""Time the compiled kernels against the numpy fallback and check they agree.

    python3 benchmarks/bench_backends.py --sizes 500 2000 4000 --repeat 3

Reports the best-of-``repeat`` wall time for the three embedding
statistics and for a full KM2 fit, per backend, plus the largest relative
difference between backend outputs.
"""

import argparse
import time

from puprior import _backend
from puprior.baseline_km import KMConfig, km2_fit
from puprior.datagen import SyntheticConfig, gen_synthetic
from puprior.kernel import KernelConfig, embedding_stats


def best_time(fn, repeat):
    best, value = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value


def rel_diff(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 2000, 4000])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    if _backend.BACKEND_NAME != "cython":
        print("compiled backend not built; only timing the numpy fallback")
    backends = ["python"] + (["cython"] if _backend.BACKEND_NAME == "cython" else [])
    cfg = KernelConfig.gaussian(p=10)
    km = KMConfig()

    print(f"{'n':>6} {'task':<6} " + " ".join(f"{b:>9}" for b in backends) + "  speedup  max rel diff")
    for n in args.sizes:
        ds = gen_synthetic(SyntheticConfig(n_source=n, n_target=n, seed=n))
        rows = {"stats": {}, "km2": {}}
        for b in backends:
            rows["stats"][b] = best_time(
                lambda: embedding_stats(cfg, ds.unlabeled, ds.positives, ds.target,
                                        backend=b, num_threads=args.threads),
                args.repeat,
            )
            rows["km2"][b] = best_time(
                lambda: km2_fit(cfg, km, ds.unlabeled, ds.positives, backend=b), args.repeat
            )
        for task, res in rows.items():
            times = " ".join(f"{res[b][0]:>8.3f}s" for b in backends)
            if len(backends) == 2:
                speedup = f"{res['python'][0] / res['cython'][0]:>7.1f}x"
                if task == "stats":
                    a, c = res["python"][1], res["cython"][1]
                    diff = max(rel_diff(getattr(a, k), getattr(c, k))
                               for k in ("s_uu", "s_pp", "s_tt", "s_up", "s_ut", "s_pt"))
                else:
                    diff = rel_diff(res["python"][1].estimate, res["cython"][1].estimate)
                print(f"{n:>6} {task:<6} {times} {speedup}  {diff:.1e}")
            else:
                print(f"{n:>6} {task:<6} {times}")


if __name__ == "__main__":
    main()
