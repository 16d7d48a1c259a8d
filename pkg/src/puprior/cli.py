"""Command-line entry point: ``puprior {estimate,bound,simulate,bench}``.

Exit codes: 0 success, 1 bad input (unparsable files, invalid flags or
delta), 2 degenerate embedding (positive and unlabeled samples
indistinguishable).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from . import _backend
from .baseline_km import KMConfig
from .bounds import DEFAULT_DELTA, check_delta, empirical_bound, empirical_bound_from_norm
from .datagen import SyntheticConfig, gen_synthetic, load_features_csv, standardize, write_features_csv
from .errors import DegenerateEmbeddingError, PluginFailureError, PUPriorError
from .estimator import estimate_target_prior
from .harness import ExperimentConfig, run_experiment, summary_json, write_outputs
from .kernel import KernelConfig, Sample, SampleTag, embedding_stats, median_heuristic_tau, squared_norm_diff

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # Usage problems share exit code 1 with other input errors; 2 is reserved
    # for degenerate embeddings.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _load(path, tag) -> Sample:
    return Sample(load_features_csv(path), tag)


def _kernel(args, *samples) -> KernelConfig:
    if args.tau is not None:
        return KernelConfig.gaussian(tau=args.tau)
    if args.median_tau:
        return KernelConfig.gaussian(tau=median_heuristic_tau(*samples))
    return KernelConfig.gaussian(p=samples[0].p)


def _emit(args, doc: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


def cmd_estimate(args) -> int:
    delta = check_delta(args.delta)
    t0 = time.perf_counter()
    pos = _load(args.positives, SampleTag.SOURCE_POSITIVE)
    unl = _load(args.unlabeled, SampleTag.SOURCE_UNLABELED)
    tgt = _load(args.target, SampleTag.TARGET)
    if args.standardize:
        u, p, t = standardize(unl.values, pos.values, tgt.values)
        pos = Sample(p, SampleTag.SOURCE_POSITIVE)
        unl = Sample(u, SampleTag.SOURCE_UNLABELED)
        tgt = Sample(t, SampleTag.TARGET)
    cfg = _kernel(args, unl, pos, tgt)
    pi = "plugin" if args.estimate_pi else args.pi
    est = estimate_target_prior(cfg, unl, pos, tgt, pi, km_config=KMConfig(),
                                num_threads=args.threads)
    stats = embedding_stats(cfg, unl, pos, tgt, num_threads=args.threads)
    bound = empirical_bound(stats, cfg, delta)
    elapsed = time.perf_counter() - t0
    doc = {
        "estimate_raw": est.raw,
        "estimate_clipped": est.clipped,
        "pi_used": est.pi_used,
        "pi_source": est.pi_source.value,
        "denominator": est.denominator,
        "tau": cfg.tau,
        "bound": bound.bound_value,
        "delta": bound.delta,
        "coverage": bound.coverage,
        "N": bound.N,
        "n": stats.n,
        "m": stats.m,
        "n_prime": stats.n_prime,
        "elapsed_s": elapsed,
        "backend": _backend.BACKEND_NAME,
    }
    lines = [
        f"target prior (raw)      {est.raw:.6f}",
        f"target prior (clipped)  {est.clipped:.6f}",
        f"source prior used       {est.pi_used:.6f} ({est.pi_source.value})",
        f"denominator norm        {est.denominator:.6g}",
        f"bound at delta={bound.delta:g}     {bound.bound_value:.6g} "
        f"(holds with prob >= {bound.coverage:g}, N={bound.N})",
        f"tau                     {cfg.tau:.6g}",
        f"elapsed                 {elapsed:.3f} s",
    ]
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_bound(args) -> int:
    delta = check_delta(args.delta)
    if args.denominator is not None:
        missing = [f"--{k.replace('_', '-')}" for k in ("n", "m", "n_prime")
                   if getattr(args, k) is None]
        if missing:
            raise UsageError(f"--denominator needs {', '.join(missing)}")
        n, m, n_prime = args.n, args.m, args.n_prime
        denominator = args.denominator
    elif args.positives and args.unlabeled:
        pos = _load(args.positives, SampleTag.SOURCE_POSITIVE)
        unl = _load(args.unlabeled, SampleTag.SOURCE_UNLABELED)
        if args.target:
            n_prime = _load(args.target, SampleTag.TARGET).n
        elif args.n_prime is not None:
            n_prime = args.n_prime
        else:
            raise UsageError("give --target or --n-prime together with the sample files")
        cfg = _kernel(args, unl, pos)
        # The bound only needs the unlabeled/positive statistics; the target
        # sample enters through its size.
        stats = embedding_stats(cfg, unl, pos, pos)
        d2 = squared_norm_diff(stats)
        if d2 <= 0.0:
            raise DegenerateEmbeddingError("positive and unlabeled mean maps indistinguishable")
        n, m, denominator = unl.n, pos.n, math.sqrt(d2)
    else:
        raise UsageError("give --denominator (with --n, --m, --n-prime) "
                         "or --positives and --unlabeled files")
    for name, v in (("n", n), ("m", m), ("n_prime", n_prime)):
        if v < 1:
            raise UsageError(f"{name} must be positive, got {v}")
    report = empirical_bound_from_norm(denominator, min(n, m, n_prime), delta)
    doc = {**report.as_dict(), "denominator": denominator, "n": n, "m": m, "n_prime": n_prime}
    lines = [
        f"bound     {report.bound_value:.6g}",
        f"delta     {report.delta:g}",
        f"coverage  {report.coverage:g}",
        f"N         {report.N}",
        f"denominator {denominator:.6g}",
    ]
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = SyntheticConfig(
        p=args.p, disturbance_g=args.g, pi=args.pi, pi_prime=args.pi_prime,
        n_source=args.n_source, n_target=args.n_target, c=args.c, seed=args.seed,
        pu_mode=args.pu_mode,
    )
    ds = gen_synthetic(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "positives": out / "positives.csv",
        "unlabeled": out / "unlabeled.csv",
        "target": out / "target.csv",
    }
    write_features_csv(files["positives"], ds.positives.values)
    write_features_csv(files["unlabeled"], ds.unlabeled.values)
    write_features_csv(files["target"], ds.target.values)
    meta = {
        "pi": cfg.pi, "pi_prime": cfg.pi_prime, "c": cfg.c, "p": cfg.p,
        "disturbance_g": cfg.disturbance_g, "seed": cfg.seed, "pu_mode": cfg.pu_mode,
        "n_positives": ds.positives.n, "n_unlabeled": ds.unlabeled.n, "n_target": ds.target.n,
        **ds.meta,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
    doc = {"files": {k: str(v) for k, v in files.items()}, **meta}
    lines = [f"{k:<10} {v}" for k, v in doc["files"].items()]
    lines.append(f"sizes      positives={ds.positives.n} unlabeled={ds.unlabeled.n} "
                 f"target={ds.target.n}")
    _emit(args, doc, lines)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["output_path"] = args.out
    if args.summary is not None:
        overrides["summary_path"] = args.summary
    if overrides:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **overrides})
    if not cfg.output_path:
        raise UsageError("no results path: set output_path in the config or pass --out")
    out = run_experiment(cfg)
    write_outputs(out)
    if args.json:
        sys.stdout.write(summary_json(out))
        return EXIT_OK
    print(f"{len(out.results)} rows -> {cfg.output_path}")
    print(f"uncertainty: {out.summary['uncertainty']}")
    sweep = cfg.sweep_param
    for g in out.summary["groups"]:
        label = f"{sweep}={g[sweep]} " if sweep else ""
        print(f"{label}{g['method']:<15} abs error {g['mean_abs_error']:.4f} "
              f"+/- {g['se_abs_error']:.4f}  estimate {g['mean_estimate']:.4f}  "
              f"failed {g['n_failed']}/{g['n_runs']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="puprior", description="Target class-prior estimation from PU source data.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def kernel_flags(p):
        p.add_argument("--tau", type=float, help="Gaussian kernel parameter (default 1/p)")
        p.add_argument("--median-tau", action="store_true",
                       help="pick tau by the median heuristic on the pooled samples")

    def json_flag(p):
        p.add_argument("--json", action="store_true", help="emit one JSON document")

    p = sub.add_parser("estimate", help="estimate the target prior")
    p.add_argument("positives")
    p.add_argument("unlabeled")
    p.add_argument("target")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--pi", type=float, help="known source prior")
    g.add_argument("--estimate-pi", action="store_true", help="estimate the source prior with KM2")
    kernel_flags(p)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--standardize", action="store_true", help="pooled z-scoring of features")
    p.add_argument("--threads", type=int, default=1)
    json_flag(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bound", help="finite-sample bound on the estimation error")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--n-prime", type=int)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--denominator", type=float, help="norm of the mean-map difference")
    p.add_argument("--positives")
    p.add_argument("--unlabeled")
    p.add_argument("--target")
    kernel_flags(p)
    json_flag(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="write a synthetic PU dataset to CSV files")
    p.add_argument("out_dir")
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--pi", type=float, default=0.2)
    p.add_argument("--pi-prime", type=float, default=0.8)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--g", type=float, default=0.0, help="disturbance of the target positives")
    p.add_argument("--n-source", type=int, default=2000)
    p.add_argument("--n-target", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pu-mode", choices=("iid", "pool"), default="iid")
    json_flag(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="results CSV (overrides output_path)")
    p.add_argument("--summary", help="summary JSON (overrides summary_path)")
    json_flag(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except DegenerateEmbeddingError as exc:
        print(f"error: degenerate embedding: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except PluginFailureError as exc:
        if isinstance(exc.__cause__, DegenerateEmbeddingError):
            print(f"error: degenerate embedding: {exc}", file=sys.stderr)
            return EXIT_DEGENERATE
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PUPriorError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
