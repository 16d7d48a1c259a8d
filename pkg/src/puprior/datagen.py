"""Synthetic label-shift PU data, SCAR sampling, prior downsampling, CSV I/O."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .kernel import Sample, SampleTag


@dataclass(frozen=True)
class SyntheticConfig:
    """Two-Gaussian source/target generator.

    Negatives are ``N(0, I)``; source positives ``N(a, I)``; target
    positives ``N(a + g, I)`` with the disturbance ``g`` added to every
    coordinate (``g = 0`` means the label-shift assumption holds).

    ``pu_mode="iid"`` draws the labeled positives and the unlabeled sample
    independently from their distributions with the SCAR sizes of
    :func:`pu_sizes`; ``pu_mode="pool"`` first draws a labeled pool of
    ``n_source`` rows and subsamples it with :func:`make_pu_sample`.
    """

    p: int = 10
    shift: tuple | None = None
    disturbance_g: float = 0.0
    pi: float = 0.2
    pi_prime: float = 0.8
    n_source: int = 2000
    n_target: int = 2000
    c: float = 0.5
    seed: int = 0
    pu_mode: str = "iid"

    def __post_init__(self):
        if self.p < 1:
            raise InputError(f"p must be positive, got {self.p}")
        if not (0.0 <= self.pi < 1.0):
            raise InputError(f"pi must lie in [0, 1), got {self.pi}")
        if not (0.0 <= self.pi_prime <= 1.0):
            raise InputError(f"pi_prime must lie in [0, 1], got {self.pi_prime}")
        if not (0.0 < self.c <= 1.0):
            raise InputError(f"c must lie in (0, 1], got {self.c}")
        if self.n_source < 1 or self.n_target < 1:
            raise InputError("sample sizes must be positive")
        if self.shift is not None and len(self.shift) != self.p:
            raise InputError(f"shift has length {len(self.shift)}, expected {self.p}")
        if self.pu_mode not in ("iid", "pool"):
            raise InputError(f"unknown pu_mode {self.pu_mode!r}")

    @property
    def mean_shift(self) -> np.ndarray:
        if self.shift is None:
            return np.ones(self.p)
        return np.asarray(self.shift, dtype=np.float64)


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int8).ravel()
        if self.labels.shape[0] != self.features.shape[0]:
            raise InputError(
                f"{self.labels.shape[0]} labels for {self.features.shape[0]} rows"
            )
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise InputError("labels must be +1 or -1")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.labels == 1))

    @property
    def positive_fraction(self) -> float:
        return self.n_positive / self.n if self.n else float("nan")


@dataclass
class PUDataset:
    positives: Sample
    unlabeled: Sample
    target: Sample
    true_pi: float | None = None
    true_pi_prime: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ps = {self.positives.p, self.unlabeled.p, self.target.p}
        if len(ps) != 1:
            raise InputError(f"samples disagree on dimension: {sorted(ps)}")


def pu_scaling(pi: float, c: float) -> float:
    """``A = 1 / (1 - c (1 - pi))``: inflation that keeps the expected PU
    sample size at ``n``."""
    if not (0.0 <= pi < 1.0 and 0.0 < c <= 1.0):
        raise InputError(f"need pi in [0, 1) and c in (0, 1], got pi={pi}, c={c}")
    if pi == 0.0 and c == 1.0:
        raise InputError("pi = 0 with c = 1 leaves nothing to sample")
    return 1.0 / (1.0 - c * (1.0 - pi))


def pu_sizes(pi: float, c: float, n: int) -> tuple[int, int]:
    """Sizes ``(labeled positives, unlabeled)`` for a PU sample of nominal
    size ``n``. Fractional sizes round half to even."""
    a = pu_scaling(pi, c)
    return int(round(a * c * pi * n)), int(round(a * (1.0 - c) * n))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def make_pu_sample(data: LabeledDataset, pi: float, c: float, n: int, seed):
    """SCAR case-control PU sample from a labeled pool.

    Draws ``round(A c pi n)`` labeled positives uniformly (without
    replacement) from the positive rows, and independently
    ``round(A (1 - c) n)`` unlabeled rows uniformly from all rows. The two
    draws may share rows. Returns ``(positives, unlabeled)`` arrays; either
    may be empty (e.g. ``c = 1``).
    """
    if not (0.0 <= pi < 1.0):
        raise InputError(f"pi must lie in [0, 1), got {pi}")
    if not (0.0 < c <= 1.0):
        raise InputError(f"c must lie in (0, 1], got {c}")
    m, n_u = pu_sizes(pi, c, n)
    pos_idx = np.flatnonzero(data.labels == 1)
    if m > pos_idx.size:
        raise InputError(
            f"need {m} positive rows but only {pos_idx.size} available "
            f"(deficit {m - pos_idx.size})"
        )
    if n_u > data.n:
        raise InputError(
            f"need {n_u} unlabeled rows but only {data.n} available (deficit {n_u - data.n})"
        )
    rng = _rng(seed)
    chosen_pos = np.sort(rng.choice(pos_idx, size=m, replace=False))
    chosen_unl = np.sort(rng.choice(data.n, size=n_u, replace=False))
    return data.features[chosen_pos], data.features[chosen_unl]


def downsample_to_prior(data: LabeledDataset, target_pi: float, seed) -> LabeledDataset:
    """Drop rows of the over-represented class until the positive fraction
    equals ``target_pi`` (to within one row). The other class is kept whole.
    """
    if not (0.0 < target_pi < 1.0):
        raise InputError(f"target_pi must lie in (0, 1), got {target_pi}")
    pos_idx = np.flatnonzero(data.labels == 1)
    neg_idx = np.flatnonzero(data.labels == -1)
    n_pos, n_neg = pos_idx.size, neg_idx.size
    if n_pos == 0 or n_neg == 0:
        raise InputError("both classes must be present to downsample")
    if n_pos / (n_pos + n_neg) > target_pi:
        keep = int(round(target_pi * n_neg / (1.0 - target_pi)))
        shrink, fixed, have = pos_idx, neg_idx, n_pos
    else:
        keep = int(round(n_pos * (1.0 - target_pi) / target_pi))
        shrink, fixed, have = neg_idx, pos_idx, n_neg
    if keep >= have:
        return data
    if keep < 1:
        raise InputError(
            f"target_pi={target_pi} unreachable: it would remove a whole class"
        )
    rng = _rng(seed)
    kept = rng.choice(shrink, size=keep, replace=False)
    rows = np.sort(np.concatenate([fixed, kept]))
    return LabeledDataset(data.features[rows], data.labels[rows])


def _draw_labeled(rng, n, prior, pos_mean, p):
    labels = np.where(rng.random(n) < prior, 1, -1).astype(np.int8)
    x = rng.standard_normal((n, p))
    x[labels == 1] += pos_mean
    return x, labels


def gen_synthetic(cfg: SyntheticConfig) -> PUDataset:
    """Draw a source PU dataset and an unlabeled target sample.

    Source and target use separate child streams of ``SeedSequence(seed)``,
    so the output is a pure function of the config.
    """
    src_seq, tgt_seq, pu_seq = np.random.SeedSequence(cfg.seed).spawn(3)
    src_rng, tgt_rng = np.random.default_rng(src_seq), np.random.default_rng(tgt_seq)
    a = cfg.mean_shift
    p = cfg.p

    if cfg.pu_mode == "pool":
        x, y = _draw_labeled(src_rng, cfg.n_source, cfg.pi, a, p)
        positives, unlabeled = make_pu_sample(
            LabeledDataset(x, y), cfg.pi, cfg.c, cfg.n_source, np.random.default_rng(pu_seq)
        )
    else:
        m, n_u = pu_sizes(cfg.pi, cfg.c, cfg.n_source)
        positives = src_rng.standard_normal((m, p)) + a
        unlabeled, _ = _draw_labeled(src_rng, n_u, cfg.pi, a, p)

    target, target_labels = _draw_labeled(
        tgt_rng, cfg.n_target, cfg.pi_prime, a + cfg.disturbance_g, p
    )
    if positives.shape[0] == 0 or unlabeled.shape[0] == 0:
        raise InputError(
            f"PU sizes degenerate for pi={cfg.pi}, c={cfg.c}, n={cfg.n_source}: "
            f"{positives.shape[0]} positives, {unlabeled.shape[0]} unlabeled"
        )
    return PUDataset(
        positives=Sample(positives, SampleTag.SOURCE_POSITIVE),
        unlabeled=Sample(unlabeled, SampleTag.SOURCE_UNLABELED),
        target=Sample(target, SampleTag.TARGET),
        true_pi=cfg.pi,
        true_pi_prime=cfg.pi_prime,
        meta={"target_positive_count": int(np.count_nonzero(target_labels == 1))},
    )


def load_csv(path, label_column: str, positive_value: str) -> LabeledDataset:
    """Read a headed, comma-separated file of numeric features plus one
    label column. Rows whose label equals ``positive_value`` become +1,
    everything else -1."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file, header row required") from None
        if label_column not in header:
            raise InputError(
                f"{path}: no column {label_column!r}; available columns: {', '.join(header)}"
            )
        li = header.index(label_column)
        feats, labels = [], []
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            values = []
            for k, cell in enumerate(row):
                if k == li:
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}:{reader.line_num}: non-numeric value {cell!r} "
                        f"in column {header[k]!r}"
                    ) from None
            feats.append(values)
            labels.append(1 if row[li].strip() == str(positive_value) else -1)
    if not feats:
        raise InputError(f"{path}: no data rows")
    return LabeledDataset(np.asarray(feats), np.asarray(labels))


def load_features_csv(path) -> np.ndarray:
    """Read a headed CSV whose columns are all numeric features."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file, header row required") from None
        rows = []
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise InputError(f"{path}:{reader.line_num}: non-numeric value") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.asarray(rows)


def write_features_csv(path, values: np.ndarray, prefix: str = "x") -> None:
    values = np.atleast_2d(values)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{prefix}{k + 1}" for k in range(values.shape[1])])
        for row in values:
            writer.writerow([repr(float(v)) for v in row])


def standardize(*arrays):
    """Z-score every array with the mean and std of all rows pooled.

    Constant columns are left centred but unscaled.
    """
    pooled = np.vstack(arrays)
    mu = pooled.mean(axis=0)
    sd = pooled.std(axis=0)
    sd[sd == 0] = 1.0
    return tuple((a - mu) / sd for a in arrays)
