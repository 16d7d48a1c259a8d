"""Finite-sample deviation bounds for the closed-form estimator.

All bounds hold with probability at least ``1 - 3 delta`` and require
``delta <= DELTA_MAX = exp(-(sqrt(2) + 1)^2 / 2)``, the regime where
``1 + sqrt(2 log(1/delta)) <= 2 sqrt(log(1/delta))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DegenerateEmbeddingError, InputError, InsufficientSampleError, InvalidDeltaError
from .kernel import EmbeddingStats, KernelConfig, squared_norm_diff

DELTA_MAX = math.exp(-((math.sqrt(2.0) + 1.0) ** 2) / 2.0)
DEFAULT_DELTA = 0.05


class BoundKind(str, Enum):
    EMPIRICAL = "empirical_thm2"
    POPULATION = "population_thm1"


@dataclass(frozen=True)
class BoundReport:
    delta: float
    coverage: float
    N: int
    M: float
    bound_value: float
    kind: BoundKind
    minimal_N: int | None = None

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "delta": self.delta,
            "coverage": self.coverage,
            "N": self.N,
            "M": self.M,
            "bound": self.bound_value,
            "minimal_N": self.minimal_N,
        }


def check_delta(delta: float) -> float:
    delta = float(delta)
    if not (0.0 < delta <= DELTA_MAX):
        raise InvalidDeltaError(
            f"delta must lie in (0, {DELTA_MAX:.6f}], got {delta}"
        )
    return delta


def _numerator(M: float, N: int, delta: float) -> float:
    return 4.0 * math.sqrt(M / N * math.log(1.0 / delta))


def empirical_bound_from_norm(denominator: float, N: int, delta: float = DEFAULT_DELTA,
                              M: float = 1.0) -> BoundReport:
    """Data-dependent bound given ``|Phi(P_hat) - Phi(P_hat_+)|`` directly."""
    delta = check_delta(delta)
    if N < 1:
        raise InputError(f"N must be positive, got {N}")
    if M <= 0:
        raise InputError(f"M must be positive, got {M}")
    if not denominator > 0:
        raise DegenerateEmbeddingError("denominator norm is zero; bound undefined")
    return BoundReport(
        delta=delta,
        coverage=1.0 - 3.0 * delta,
        N=int(N),
        M=float(M),
        bound_value=_numerator(M, N, delta) / denominator,
        kind=BoundKind.EMPIRICAL,
    )


def empirical_bound(stats: EmbeddingStats, cfg: KernelConfig,
                    delta: float = DEFAULT_DELTA) -> BoundReport:
    """``4 sqrt(M/N log(1/delta)) / |Phi(P_hat) - Phi(P_hat_+)|`` with
    ``N = min(n, m, n')``. Computable from data alone."""
    check_delta(delta)
    d2 = squared_norm_diff(stats)
    if d2 <= 0.0:
        raise DegenerateEmbeddingError(
            "positive and unlabeled mean maps indistinguishable; bound undefined"
        )
    return empirical_bound_from_norm(math.sqrt(d2), stats.N, delta, cfg.sup_bound_M)


def minimal_sample_size(pi: float, alpha: float, delta: float, M: float,
                        mmd_pm: float) -> int:
    """Smallest integer N meeting the sample-size condition of the population bound."""
    need = 16.0 * M * math.log(1.0 / delta) / (
        (1.0 - alpha) ** 2 * (1.0 - pi) ** 2 * mmd_pm ** 2
    )
    return int(math.ceil(need - 1e-9))


def population_bound_value(pi: float, alpha: float, delta: float, M: float, N: int,
                           mmd_pm: float) -> float:
    """Right-hand side of the population bound without the sample-size check.

    ``alpha = 1`` is accepted here: with the plug-in ``mmd_pm`` it reduces to
    the data-dependent bound.
    """
    return _numerator(M, N, delta) / (alpha * (1.0 - pi) * mmd_pm)


def population_bound(pi: float, alpha: float, delta: float, M: float, N: int,
                     mmd_pm: float) -> BoundReport:
    """Non-random bound ``4 sqrt(M/N log(1/delta)) / (alpha (1-pi) mmd_pm)``.

    ``mmd_pm`` is ``|Phi(P_-) - Phi(P_+)|``. Raises
    :class:`InsufficientSampleError` (carrying the minimal N) when N is too
    small for the bound to apply.
    """
    delta = check_delta(delta)
    if not (0.0 <= pi < 1.0):
        raise InputError(f"pi must lie in [0, 1), got {pi}")
    if not (0.0 < alpha < 1.0):
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    if not mmd_pm > 0:
        raise DegenerateEmbeddingError("mmd_pm must be positive")
    if M <= 0:
        raise InputError(f"M must be positive, got {M}")
    n_min = minimal_sample_size(pi, alpha, delta, M, mmd_pm)
    if N < n_min:
        raise InsufficientSampleError(
            f"N={N} is below the minimal admissible sample size {n_min}", n_min
        )
    return BoundReport(
        delta=delta,
        coverage=1.0 - 3.0 * delta,
        N=int(N),
        M=float(M),
        bound_value=population_bound_value(pi, alpha, delta, M, N, mmd_pm),
        kind=BoundKind.POPULATION,
        minimal_N=n_min,
    )


def concentration_radius(n: int, delta: float, M: float = 1.0) -> float:
    """High-probability radius ``2 sqrt(M/n log(1/delta))`` of one empirical
    mean map around its population counterpart."""
    delta = check_delta(delta)
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    if M <= 0:
        raise InputError(f"M must be positive, got {M}")
    return 2.0 * math.sqrt(M / n * math.log(1.0 / delta))


def estimate_mmd_pm(stats: EmbeddingStats, pi: float) -> float:
    """Plug-in estimate of ``|Phi(P_-) - Phi(P_+)|``.

    No finite-sample guarantee; intended for reporting the population bound.
    """
    if not (0.0 <= pi < 1.0):
        raise InputError(f"pi must lie in [0, 1), got {pi}")
    d2 = squared_norm_diff(stats)
    if d2 <= 0.0:
        raise DegenerateEmbeddingError("positive and unlabeled mean maps coincide")
    return math.sqrt(d2) / (1.0 - pi)
