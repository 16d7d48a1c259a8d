"""Gaussian kernel evaluation and empirical mean-embedding statistics.

Every estimator and bound in the package reduces to inner products of
empirical mean maps, which in turn are averaged Gram sums

    S(A, B) = <Phi(A), Phi(B)> = (|A| |B|)^-1 sum_i sum_j K(a_i, b_j).

Gram values are accumulated block by block and never stored as a full
``|A| x |B|`` matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _backend
from .errors import InputError, NumericalInconsistencyError

EPS_NUM = 1e-12


class SampleTag(str, Enum):
    SOURCE_UNLABELED = "source_unlabeled"
    SOURCE_POSITIVE = "source_positive"
    TARGET = "target"


@dataclass(frozen=True)
class Sample:
    """An ``n x p`` block of finite float64 observations from one distribution."""

    values: np.ndarray
    tag: SampleTag = SampleTag.SOURCE_UNLABELED

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise InputError(f"sample must be 2-D, got shape {values.shape}")
        if values.shape[0] < 1:
            raise InputError("sample must contain at least one observation")
        if not np.all(np.isfinite(values)):
            raise InputError("sample contains NaN or infinite entries")
        values = np.ascontiguousarray(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "tag", SampleTag(self.tag))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def as_sample(x, tag=SampleTag.SOURCE_UNLABELED) -> Sample:
    """Wrap arrays as :class:`Sample`; samples pass through unchanged."""
    if isinstance(x, Sample):
        return x
    return Sample(x, tag)


@dataclass(frozen=True)
class KernelConfig:
    """Kernel choice.

    Only ``kind="gaussian"``, ``K(x, y) = exp(-tau |x - y|^2)``, ships.
    ``sup_bound_M`` is ``sup_x K(x, x)``, which the deviation bounds need.
    """

    kind: str = "gaussian"
    tau: float = 1.0
    sup_bound_M: float = 1.0

    def __post_init__(self):
        if self.kind != "gaussian":
            raise InputError(f"unsupported kernel kind {self.kind!r}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise InputError(f"tau must be positive and finite, got {self.tau}")
        if self.sup_bound_M != 1.0:
            raise InputError("gaussian kernel has sup_bound_M = 1")

    @classmethod
    def gaussian(cls, tau: float | None = None, p: int | None = None) -> KernelConfig:
        """Gaussian kernel with ``tau``, defaulting to ``1/p``."""
        if tau is None:
            if p is None or p < 1:
                raise InputError("need either tau or a positive dimension p")
            tau = 1.0 / p
        return cls(kind="gaussian", tau=float(tau), sup_bound_M=1.0)


def default_tau(p: int) -> float:
    return 1.0 / p


def median_heuristic_tau(*samples, max_points: int = 1000, seed: int = 0) -> float:
    """``1 / median`` of pairwise squared distances over pooled points.

    At most ``max_points`` pooled rows are used (uniform subsample, seeded).
    """
    pooled = np.vstack([as_sample(s).values for s in samples])
    if pooled.shape[0] > max_points:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(pooled.shape[0], size=max_points, replace=False))
        pooled = pooled[idx]
    if pooled.shape[0] < 2:
        raise InputError("median heuristic needs at least two points")
    sq = np.einsum("ij,ij->i", pooled, pooled)
    d2 = sq[:, None] + sq[None, :] - 2.0 * pooled @ pooled.T
    iu = np.triu_indices(pooled.shape[0], k=1)
    med = float(np.median(np.maximum(d2[iu], 0.0)))
    if med <= 0.0:
        raise InputError("all pooled points coincide; median heuristic undefined")
    return 1.0 / med


def eval_kernel(cfg: KernelConfig, x, y) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    d = x - y
    return math.exp(-cfg.tau * float(d @ d))


def _check_dims(*samples: Sample) -> None:
    ps = {s.p for s in samples}
    if len(ps) != 1:
        raise InputError(f"dimension mismatch between samples: {sorted(ps)}")


def mean_cross_kernel(cfg: KernelConfig, a, b, *, backend: str | None = None,
                      num_threads: int = 1) -> float:
    """Average kernel value ``S(A, B)`` over all pairs of rows."""
    a, b = as_sample(a), as_sample(b)
    _check_dims(a, b)
    k = _backend.get_kernels(backend)
    # Order the arguments so the result is exactly symmetric.
    x, y = a.values, b.values
    if (y.shape[0], y.tobytes()) < (x.shape[0], x.tobytes()):
        x, y = y, x
    total = k.cross_kernel_sum(x, y, cfg.tau, num_threads=num_threads)
    return total / (a.n * b.n)


@dataclass(frozen=True)
class EmbeddingStats:
    """The six mean cross-kernel values among unlabeled (u), positive (p)
    and target (t) samples, plus the sample sizes."""

    s_uu: float
    s_pp: float
    s_tt: float
    s_up: float
    s_ut: float
    s_pt: float
    n: int
    m: int
    n_prime: int

    @property
    def N(self) -> int:
        return min(self.n, self.m, self.n_prime)

    def scaled(self, c: float) -> EmbeddingStats:
        """Statistics of the kernel ``c * K``."""
        return EmbeddingStats(
            self.s_uu * c, self.s_pp * c, self.s_tt * c,
            self.s_up * c, self.s_ut * c, self.s_pt * c,
            self.n, self.m, self.n_prime,
        )


def embedding_stats(cfg: KernelConfig, u, pos, tgt, *, backend: str | None = None,
                    num_threads: int = 1) -> EmbeddingStats:
    u = as_sample(u, SampleTag.SOURCE_UNLABELED)
    pos = as_sample(pos, SampleTag.SOURCE_POSITIVE)
    tgt = as_sample(tgt, SampleTag.TARGET)
    _check_dims(u, pos, tgt)

    def s(a, b):
        return mean_cross_kernel(cfg, a, b, backend=backend, num_threads=num_threads)

    return EmbeddingStats(
        s_uu=s(u, u), s_pp=s(pos, pos), s_tt=s(tgt, tgt),
        s_up=s(u, pos), s_ut=s(u, tgt), s_pt=s(pos, tgt),
        n=u.n, m=pos.n, n_prime=tgt.n,
    )


def squared_norm_diff(stats: EmbeddingStats) -> float:
    """``|Phi(P_hat) - Phi(P_hat_+)|^2`` from the cached statistics.

    Values within ``EPS_NUM`` (relative) below zero are rounding noise and
    clamp to 0; anything more negative means the statistics are inconsistent.
    """
    d = stats.s_uu - 2.0 * stats.s_up + stats.s_pp
    scale = max(abs(stats.s_uu), abs(stats.s_pp), abs(stats.s_up), 1.0)
    if d < -EPS_NUM * scale:
        raise NumericalInconsistencyError(
            f"squared RKHS distance is negative ({d:.3e}); statistics are inconsistent"
        )
    return max(d, 0.0)
