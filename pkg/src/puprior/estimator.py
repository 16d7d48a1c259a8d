"""Closed-form target class-prior estimator for PU source data.

With ``Phi_u, Phi_p, Phi_t`` the empirical mean maps of the unlabeled source,
labeled positives and target samples, the empirical objective is

    L(g) = | (1 - g)(Phi_u - pi Phi_p) - (1 - pi)(Phi_t - g Phi_p) |^2
         = g^2 D - 2 g C + E

where ``D = |Phi_u - Phi_p|^2``, ``C = <Phi_u - Phi_p, Delta>``,
``E = |Delta|^2`` and ``Delta = Phi_u - pi Phi_p - (1 - pi) Phi_t``. Its
minimizer ``C / D`` is the estimate of the target prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateEmbeddingError, InputError, PluginFailureError
from .kernel import EmbeddingStats, KernelConfig, as_sample, embedding_stats, squared_norm_diff

EPS_DEN = 1e-12


class PiSource(str, Enum):
    KNOWN = "known"
    KM2_PLUGIN = "km2_plugin"


@dataclass(frozen=True)
class PriorEstimate:
    raw: float
    clipped: float
    denominator: float
    pi_used: float
    pi_source: PiSource

    def __post_init__(self):
        if not self.denominator > 0:
            raise DegenerateEmbeddingError("denominator norm must be positive")


def _check_pi(pi: float) -> float:
    pi = float(pi)
    if not (0.0 <= pi < 1.0):
        raise InputError(f"source prior must lie in [0, 1), got {pi}")
    return pi


def _quadratic_coeffs(stats: EmbeddingStats, pi: float):
    s = stats
    q = 1.0 - pi
    d = squared_norm_diff(s)
    c = (s.s_uu - pi * s.s_up - q * s.s_ut
         - s.s_up + pi * s.s_pp + q * s.s_pt)
    e = (s.s_uu + pi * pi * s.s_pp + q * q * s.s_tt
         - 2.0 * pi * s.s_up - 2.0 * q * s.s_ut + 2.0 * pi * q * s.s_pt)
    return d, c, e


def objective(stats: EmbeddingStats, pi: float, gamma: float) -> float:
    """Empirical objective ``L(gamma)`` from the six cached statistics."""
    pi = _check_pi(pi)
    d, c, e = _quadratic_coeffs(stats, pi)
    return gamma * gamma * d - 2.0 * gamma * c + e


def projection_form(stats: EmbeddingStats, pi: float) -> float:
    """Estimate as the projection coefficient ``C / D``."""
    d, c, _ = _quadratic_coeffs(stats, _check_pi(pi))
    if d <= EPS_DEN:
        raise DegenerateEmbeddingError(
            "positive and unlabeled mean maps indistinguishable"
        )
    return c / d


def complement_form(stats: EmbeddingStats, pi: float) -> float:
    """Same estimate written as ``1 - (1 - pi) <Phi_u - Phi_p, Phi_t - Phi_p> / D``."""
    pi = _check_pi(pi)
    s = stats
    d = squared_norm_diff(s)
    if d <= EPS_DEN:
        raise DegenerateEmbeddingError(
            "positive and unlabeled mean maps indistinguishable"
        )
    inner = s.s_ut - s.s_up - s.s_pt + s.s_pp
    return 1.0 - (1.0 - pi) * inner / d


def tcpu_closed_form(stats: EmbeddingStats, pi: float,
                     pi_source: PiSource | str = PiSource.KNOWN,
                     eps_den: float = EPS_DEN) -> PriorEstimate:
    """Exact minimizer of the empirical objective.

    Raises :class:`DegenerateEmbeddingError` when ``D <= eps_den``, i.e. the
    unlabeled and positive samples have (numerically) the same mean map.
    """
    pi = _check_pi(pi)
    d, c, _ = _quadratic_coeffs(stats, pi)
    if d <= eps_den:
        raise DegenerateEmbeddingError(
            f"positive and unlabeled mean maps indistinguishable (D = {d:.3e})"
        )
    raw = c / d
    return PriorEstimate(
        raw=raw,
        clipped=min(1.0, max(0.0, raw)),
        denominator=math.sqrt(d),
        pi_used=pi,
        pi_source=PiSource(pi_source),
    )


def tcpu_grid_oracle(stats: EmbeddingStats, pi: float, lo: float = -1.0,
                     hi: float = 2.0, step: float = 1e-4) -> float:
    """Brute-force argmin of the objective on ``lo, lo + step, ..., <= hi``.

    Ties go to the smaller grid point.
    """
    if not (step > 0 and lo < hi):
        raise InputError(f"empty grid: lo={lo}, hi={hi}, step={step}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    grid = lo + step * np.arange(count)
    pi = _check_pi(pi)
    d, c, e = _quadratic_coeffs(stats, pi)
    values = grid * grid * d - 2.0 * grid * c + e
    return float(grid[int(np.argmin(values))])


def estimate_target_prior(cfg: KernelConfig, u, pos, tgt, pi=None, *,
                          km_config=None, backend: str | None = None,
                          num_threads: int = 1) -> PriorEstimate:
    """Estimate the target prior from unlabeled source, positives and target.

    ``pi`` is the known source prior; pass ``None`` (or ``"plugin"``) to
    estimate it with KM2 on (unlabeled, positives) first.
    """
    u, pos, tgt = as_sample(u), as_sample(pos), as_sample(tgt)
    if pi is None or pi == "plugin":
        from .baseline_km import KMConfig, km2_prior

        try:
            pi_val = km2_prior(cfg, km_config or KMConfig(), u, pos)
        except Exception as exc:
            raise PluginFailureError(f"KM2 plug-in for the source prior failed: {exc}") from exc
        source = PiSource.KM2_PLUGIN
    else:
        pi_val = _check_pi(pi)
        source = PiSource.KNOWN
    stats = embedding_stats(cfg, u, pos, tgt, backend=backend, num_threads=num_threads)
    return tcpu_closed_form(stats, pi_val, source)
