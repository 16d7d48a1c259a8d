"""Monte Carlo experiment runner.

An experiment is a flat JSON document mirroring :class:`ExperimentConfig`.
Each repetition draws fresh data from a seed derived from ``(seed, rep)``,
runs every requested method and records one :class:`RunResult` per method.
An optional one-parameter sweep (``sweep_param`` / ``sweep_values``) repeats
this for every value; the same repetition seeds are reused across sweep
points so that curves are paired.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .baseline_km import KMConfig, km2_fit
from .bounds import check_delta, empirical_bound
from .datagen import (
    LabeledDataset,
    PUDataset,
    SyntheticConfig,
    downsample_to_prior,
    gen_synthetic,
    load_csv,
    make_pu_sample,
    standardize,
)
from .errors import InputError
from .estimator import PiSource, tcpu_closed_form
from .kernel import KernelConfig, Sample, SampleTag, embedding_stats, median_heuristic_tau

METHODS = ("tcpu_known_pi", "tcpu_plugin_pi", "km2_ls")
TCPU_METHODS = ("tcpu_known_pi", "tcpu_plugin_pi")
CSV_COLUMNS = ("method", "rep", "pi", "pi_prime", "estimate_raw", "estimate_clipped",
               "abs_error", "bound", "elapsed_s", "error_msg")
# Parameters a sweep may vary. ``supplied_pi`` changes only the prior handed to
# tcpu_known_pi, not the data.
SWEEPABLE = ("pi", "pi_prime", "disturbance_g", "c", "n_source", "n_target", "supplied_pi")
UNCERTAINTY_LABEL = "standard error of the mean over repetitions"


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "synthetic"
    methods: tuple = ("tcpu_known_pi",)
    repetitions: int = 20
    delta: float = 0.05
    seed: int = 0
    output_path: str | None = None
    summary_path: str | None = None
    # synthetic scenario
    p: int = 10
    shift: tuple | None = None
    disturbance_g: float = 0.0
    pu_mode: str = "iid"
    # both scenarios
    pi: float = 0.2
    pi_prime: float = 0.8
    c: float = 0.5
    n_source: int = 2000
    n_target: int = 2000
    supplied_pi: float | None = None
    # csv scenario
    csv_path: str | None = None
    label_column: str = "label"
    positive_value: str = "1"
    # estimation
    tau: float | None = None
    tau_mode: str = "default"
    standardize: bool = False
    slope_threshold: float | None = None
    fw_variant: str = "pairwise"
    # sweep
    sweep_param: str | None = None
    sweep_values: tuple = ()
    # execution
    workers: int = 1
    record_timing: bool = False

    def __post_init__(self):
        methods = tuple(self.methods)
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if self.shift is not None:
            object.__setattr__(self, "shift", tuple(self.shift))
        if self.scenario not in ("synthetic", "csv"):
            raise InputError(f"scenario must be 'synthetic' or 'csv', got {self.scenario!r}")
        if not methods:
            raise InputError("methods must be nonempty")
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise InputError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if len(set(methods)) != len(methods):
            raise InputError("methods contain duplicates")
        if self.repetitions < 1:
            raise InputError(f"repetitions must be >= 1, got {self.repetitions}")
        check_delta(self.delta)
        if not (0 <= int(self.seed) < 2 ** 64):
            raise InputError("seed must be a 64-bit unsigned integer")
        if self.scenario == "csv" and not self.csv_path:
            raise InputError("csv scenario needs csv_path")
        if self.tau_mode not in ("default", "median"):
            raise InputError(f"tau_mode must be 'default' or 'median', got {self.tau_mode!r}")
        if self.tau is not None and not self.tau > 0:
            raise InputError(f"tau must be positive, got {self.tau}")
        if self.workers < 1:
            raise InputError("workers must be >= 1")
        KMConfig(fw_variant=self.fw_variant, slope_threshold=self.slope_threshold)
        if self.sweep_param is not None:
            if self.sweep_param not in SWEEPABLE:
                raise InputError(
                    f"cannot sweep {self.sweep_param!r}; sweepable: {list(SWEEPABLE)}"
                )
            if not self.sweep_values:
                raise InputError("sweep_param given without sweep_values")
        elif self.sweep_values:
            raise InputError("sweep_values given without sweep_param")
        for point in self.points():
            point._check_point()

    def _check_point(self):
        if not (0.0 <= self.pi < 1.0):
            raise InputError(f"pi must lie in [0, 1), got {self.pi}")
        if not (0.0 <= self.pi_prime <= 1.0):
            raise InputError(f"pi_prime must lie in [0, 1], got {self.pi_prime}")
        if self.supplied_pi is not None and not (0.0 <= self.supplied_pi < 1.0):
            raise InputError(f"supplied_pi must lie in [0, 1), got {self.supplied_pi}")
        if self.scenario == "synthetic":
            self.synthetic_config(0)

    def points(self) -> list[ExperimentConfig]:
        """One config per sweep value (just ``[self]`` without a sweep)."""
        if self.sweep_param is None:
            return [self]
        return [
            replace(self, sweep_param=None, sweep_values=(), **{self.sweep_param: v})
            for v in self.sweep_values
        ]

    def synthetic_config(self, seed: int) -> SyntheticConfig:
        return SyntheticConfig(
            p=self.p, shift=self.shift, disturbance_g=self.disturbance_g,
            pi=self.pi, pi_prime=self.pi_prime, n_source=self.n_source,
            n_target=self.n_target, c=self.c, seed=seed, pu_mode=self.pu_mode,
        )

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        names = {f.name for f in fields(cls)}
        extra = sorted(set(data) - names)
        if extra:
            raise InputError(f"unknown config fields: {extra}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InputError(f"{path}: top level must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("methods", "sweep_values", "shift"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


@dataclass(frozen=True)
class RunResult:
    method: str
    rep_index: int
    pi: float
    pi_prime_true: float
    estimate_raw: float = math.nan
    estimate_clipped: float = math.nan
    abs_error: float = math.nan
    bound_value: float | None = None
    elapsed_seconds: float = 0.0
    error_msg: str = ""
    sweep_index: int = 0
    sweep_value: float | None = None

    @property
    def ok(self) -> bool:
        return not self.error_msg


@dataclass
class ExperimentOutput:
    config: ExperimentConfig
    results: list
    summary: dict = field(default_factory=dict)


def rep_seed(seed: int, rep: int) -> int:
    """64-bit data seed for one repetition."""
    state = np.random.SeedSequence([int(seed), int(rep)]).generate_state(1, np.uint64)
    return int(state[0])


def _split_csv_data(data: LabeledDataset, point: ExperimentConfig, rng):
    """Random disjoint source/target split, each downsampled to its prior."""
    idx = rng.permutation(data.n)
    n_src = min(point.n_source, data.n // 2)
    n_tgt = min(point.n_target, data.n - n_src)
    src_rows, tgt_rows = np.sort(idx[:n_src]), np.sort(idx[n_src:n_src + n_tgt])
    src = LabeledDataset(data.features[src_rows], data.labels[src_rows])
    tgt = LabeledDataset(data.features[tgt_rows], data.labels[tgt_rows])
    src = downsample_to_prior(src, point.pi, rng)
    if 0.0 < point.pi_prime < 1.0:
        tgt = downsample_to_prior(tgt, point.pi_prime, rng)
    pos, unl = make_pu_sample(src, point.pi, point.c, src.n, rng)
    if pos.shape[0] == 0 or unl.shape[0] == 0:
        raise InputError("PU split left an empty sample")
    return PUDataset(
        positives=Sample(pos, SampleTag.SOURCE_POSITIVE),
        unlabeled=Sample(unl, SampleTag.SOURCE_UNLABELED),
        target=Sample(tgt.features, SampleTag.TARGET),
        true_pi=point.pi,
        true_pi_prime=tgt.positive_fraction,
    )


def _make_data(point: ExperimentConfig, seed: int, csv_data: LabeledDataset | None) -> PUDataset:
    if point.scenario == "synthetic":
        ds = gen_synthetic(point.synthetic_config(seed))
    else:
        ds = _split_csv_data(csv_data, point, np.random.default_rng(seed))
    if point.standardize:
        u, pos, tgt = standardize(ds.unlabeled.values, ds.positives.values, ds.target.values)
        ds = PUDataset(
            positives=Sample(pos, SampleTag.SOURCE_POSITIVE),
            unlabeled=Sample(u, SampleTag.SOURCE_UNLABELED),
            target=Sample(tgt, SampleTag.TARGET),
            true_pi=ds.true_pi, true_pi_prime=ds.true_pi_prime, meta=ds.meta,
        )
    return ds


def _kernel_config(point: ExperimentConfig, ds: PUDataset) -> KernelConfig:
    if point.tau is not None:
        return KernelConfig.gaussian(tau=point.tau)
    if point.tau_mode == "median":
        return KernelConfig.gaussian(
            tau=median_heuristic_tau(ds.unlabeled, ds.positives, ds.target)
        )
    return KernelConfig.gaussian(p=ds.target.p)


def _km_config(point: ExperimentConfig, seed: int) -> KMConfig:
    kw = {"seed": seed % (2 ** 32), "fw_variant": point.fw_variant}
    if point.slope_threshold is not None:
        kw["slope_threshold"] = point.slope_threshold
    return KMConfig(**kw)


def _run_one(point: ExperimentConfig, sweep_index: int, rep: int,
             csv_data: LabeledDataset | None) -> list[RunResult]:
    seed = rep_seed(point.seed, rep)
    base = {"rep_index": rep, "sweep_index": sweep_index}
    try:
        ds = _make_data(point, seed, csv_data)
    except Exception as exc:
        msg = f"data generation failed: {type(exc).__name__}: {exc}"
        return [RunResult(method=m, pi=point.pi, pi_prime_true=point.pi_prime,
                          error_msg=msg, **base) for m in point.methods]
    truth = ds.true_pi_prime
    cfg_k = _kernel_config(point, ds)
    cfg_km = _km_config(point, seed)

    stats = None
    out = []
    for method in point.methods:
        t0 = time.perf_counter()
        pi_used = point.pi
        try:
            if method in TCPU_METHODS:
                if stats is None:
                    stats = embedding_stats(cfg_k, ds.unlabeled, ds.positives, ds.target)
                if method == "tcpu_known_pi":
                    if point.supplied_pi is not None:
                        pi_used = point.supplied_pi
                    est = tcpu_closed_form(stats, pi_used, PiSource.KNOWN)
                else:
                    pi_used = km2_fit(cfg_k, cfg_km, ds.unlabeled, ds.positives).estimate
                    est = tcpu_closed_form(stats, pi_used, PiSource.KM2_PLUGIN)
                bound = empirical_bound(stats, cfg_k, point.delta).bound_value
                raw, clipped = est.raw, est.clipped
            else:
                raw = km2_fit(cfg_k, cfg_km, ds.target, ds.positives).estimate
                clipped, bound = raw, None
            out.append(RunResult(
                method=method, pi=pi_used, pi_prime_true=truth,
                estimate_raw=raw, estimate_clipped=clipped,
                abs_error=abs(truth - raw), bound_value=bound,
                elapsed_seconds=time.perf_counter() - t0, **base,
            ))
        except Exception as exc:
            out.append(RunResult(
                method=method, pi=pi_used, pi_prime_true=truth,
                elapsed_seconds=time.perf_counter() - t0,
                error_msg=f"{type(exc).__name__}: {exc}", **base,
            ))
    return out


def _mean_se(values: list[float]) -> tuple[float, float]:
    n = len(values)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(values) / n
    if n == 1:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def summarize(cfg: ExperimentConfig, results: list[RunResult]) -> dict:
    """Per (sweep point, method) mean and standard error of abs_error and of
    the raw estimate, plus failure counts."""
    groups = []
    points = cfg.points()
    for si, point in enumerate(points):
        for method in cfg.methods:
            rows = [r for r in results if r.sweep_index == si and r.method == method]
            good = [r for r in rows if r.ok]
            err_mean, err_se = _mean_se([r.abs_error for r in good])
            est_mean, est_se = _mean_se([r.estimate_raw for r in good])
            entry = {
                "method": method,
                "n_runs": len(rows),
                "n_failed": len(rows) - len(good),
                "mean_abs_error": err_mean,
                "se_abs_error": err_se,
                "mean_estimate": est_mean,
                "se_estimate": est_se,
                "pi": point.pi,
                "pi_prime": point.pi_prime,
            }
            if cfg.sweep_param is not None:
                entry[cfg.sweep_param] = getattr(point, cfg.sweep_param)
            groups.append(entry)
    return {
        "uncertainty": UNCERTAINTY_LABEL,
        "repetitions": cfg.repetitions,
        "sweep_param": cfg.sweep_param,
        "groups": groups,
    }


def run_experiment(cfg: ExperimentConfig) -> ExperimentOutput:
    """Run every (sweep point, repetition) and return sorted results plus a summary."""
    csv_data = None
    if cfg.scenario == "csv":
        csv_data = load_csv(cfg.csv_path, cfg.label_column, cfg.positive_value)
    jobs = [(point, si, rep) for si, point in enumerate(cfg.points())
            for rep in range(cfg.repetitions)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(lambda j: _run_one(*j, csv_data), jobs))
    else:
        chunks = [_run_one(*j, csv_data) for j in jobs]
    order = {m: k for k, m in enumerate(cfg.methods)}
    results = sorted((r for chunk in chunks for r in chunk),
                     key=lambda r: (r.sweep_index, order[r.method], r.rep_index))
    if cfg.sweep_param is not None:
        values = cfg.sweep_values
        results = [replace(r, sweep_value=values[r.sweep_index]) for r in results]
    return ExperimentOutput(cfg, results, summarize(cfg, results))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def results_csv(cfg: ExperimentConfig, results: list[RunResult]) -> str:
    """Render results as CSV text. A sweep adds one trailing column named
    after the swept parameter unless it is already a standard column.

    ``elapsed_s`` is left blank unless ``record_timing`` is set, so that the
    file is reproducible byte for byte.
    """
    extra = cfg.sweep_param if cfg.sweep_param not in (None, "pi", "pi_prime") else None
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + ((extra,) if extra else ()))
    for r in results:
        row = [
            r.method, r.rep_index, _fmt(r.pi), _fmt(r.pi_prime_true),
            _fmt(r.estimate_raw), _fmt(r.estimate_clipped), _fmt(r.abs_error),
            _fmt(r.bound_value),
            _fmt(r.elapsed_seconds) if cfg.record_timing else "",
            r.error_msg,
        ]
        if extra:
            row.append(_fmt(r.sweep_value))
        writer.writerow(row)
    return buf.getvalue()


def write_outputs(out: ExperimentOutput, csv_path=None, summary_path=None) -> None:
    csv_path = csv_path or out.config.output_path
    summary_path = summary_path or out.config.summary_path
    if csv_path:
        Path(csv_path).write_text(results_csv(out.config, out.results), encoding="utf-8")
    if summary_path:
        Path(summary_path).write_text(summary_json(out), encoding="utf-8")


def _nan_to_none(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_nan_to_none(v) for v in obj]
    return obj


def summary_json(out: ExperimentOutput) -> str:
    """Summary plus the config as strict JSON (NaN becomes null)."""
    doc = _nan_to_none({"config": out.config.to_dict(), **out.summary})
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
