"""KM2-style mixture proportion estimation by convex-hull projection in the RKHS.

For a mixture sample ``mix`` containing a component sample ``comp`` with
unknown weight, the curve

    d(lam) = min_{w in simplex} | lam Phi(mix) + (1 - lam) Phi(comp) - sum_i w_i phi(z_i) |

over the pooled points ``z`` is (near) zero while ``lam Phi(mix) + (1 - lam)
Phi(comp)`` is still a mixture of what the samples contain and grows
linearly once ``lam`` passes ``1 / (1 - weight)``. The kink is located by the
first forward-difference slope exceeding ``slope_threshold``.

Used twice: on (unlabeled, positives) it estimates the source prior for the
plug-in; on (target, positives) it is the KM2-LS baseline for the target prior.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import InputError
from .kernel import KernelConfig, as_sample

log = logging.getLogger(__name__)

# Frank-Wolfe variants, mapped to the backend's integer mode.
FW_MODES = {"vanilla": 0, "pairwise": 1, "open_loop": 2}

# Slope thresholds chosen per variant by scripts/calibrate_km2.py; see README.
CALIBRATED_SLOPE_THRESHOLD = {"pairwise": 0.065, "vanilla": 0.08, "open_loop": 0.075}
DEFAULT_SLOPE_THRESHOLD = CALIBRATED_SLOPE_THRESHOLD["pairwise"]


def _default_grid():
    return tuple(float(x) for x in np.round(np.arange(1.0, 10.0 + 1e-9, 0.05), 10))


@dataclass(frozen=True)
class KMConfig:
    lambda_grid: tuple = field(default_factory=_default_grid)
    fw_max_iter: int = 500
    fw_tol: float = 1e-6
    slope_threshold: float | None = None
    max_pooled: int = 2000
    seed: int = 0
    fw_variant: str = "pairwise"
    warm_start: bool = True

    def __post_init__(self):
        if self.fw_variant not in FW_MODES:
            raise InputError(f"unknown fw_variant {self.fw_variant!r}")
        if self.slope_threshold is None:
            object.__setattr__(self, "slope_threshold",
                               CALIBRATED_SLOPE_THRESHOLD[self.fw_variant])
        grid = np.asarray(self.lambda_grid, dtype=np.float64)
        if grid.ndim != 1 or grid.size < 2:
            raise InputError("lambda_grid needs at least two points")
        if grid[0] != 1.0:
            raise InputError("lambda_grid must start at 1")
        if np.any(np.diff(grid) <= 0):
            raise InputError("lambda_grid must be strictly increasing")
        if self.fw_max_iter < 1 or self.fw_tol <= 0 or self.slope_threshold <= 0:
            raise InputError("iteration count and tolerances must be positive")
        if self.max_pooled < 2:
            raise InputError("max_pooled must be at least 2")
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in grid))


@dataclass(frozen=True)
class DistanceCurve:
    lambdas: tuple
    distances: tuple
    weights_converged: tuple


@dataclass(frozen=True)
class KMResult:
    estimate: float
    lam: float
    low_confidence: bool
    curve: DistanceCurve


class HullProjector:
    """Distances from ``lam Phi(mix) + (1 - lam) Phi(comp)`` to the convex
    hull of the pooled feature maps, sharing Gram columns across calls.

    Pooled sets larger than ``max_pooled`` are subsampled uniformly (seeded)
    before anything else, so the mean maps and the hull vertices refer to the
    same points.
    """

    def __init__(self, cfg_k: KernelConfig, cfg_km: KMConfig, mix, comp, *,
                 backend: str | None = None):
        mix, comp = as_sample(mix).values, as_sample(comp).values
        if mix.shape[1] != comp.shape[1]:
            raise InputError(f"dimension mismatch: {mix.shape[1]} vs {comp.shape[1]}")
        total = mix.shape[0] + comp.shape[0]
        if total > cfg_km.max_pooled:
            rng = np.random.default_rng(cfg_km.seed)
            keep = np.sort(rng.choice(total, size=cfg_km.max_pooled, replace=False))
            keep_mix = keep[keep < mix.shape[0]]
            keep_comp = keep[keep >= mix.shape[0]] - mix.shape[0]
            if keep_mix.size == 0 or keep_comp.size == 0:
                raise InputError("subsampling removed one of the samples entirely")
            mix, comp = mix[keep_mix], comp[keep_comp]
        self.cfg_km = cfg_km
        self.tau = cfg_k.tau
        self.kernels = _backend.get_kernels(backend)
        self.z = np.ascontiguousarray(np.vstack([mix, comp]))
        self.n_mix = mix.shape[0]
        nz = self.z.shape[0]
        k = self.kernels
        self.r_mix = k.kernel_row_sums(self.z, np.ascontiguousarray(mix), self.tau) / mix.shape[0]
        self.r_comp = k.kernel_row_sums(self.z, np.ascontiguousarray(comp), self.tau) / comp.shape[0]
        self.s_mm = float(self.r_mix[: self.n_mix].mean())
        self.s_mc = float(self.r_comp[: self.n_mix].mean())
        self.s_cc = float(self.r_comp[self.n_mix:].mean())
        self.cache = np.zeros((nz, nz))
        self.have = np.zeros(nz, dtype=np.uint8)
        self._warm = None

    def _uniform_start(self):
        w = np.zeros(self.z.shape[0])
        w[: self.n_mix] = 1.0 / self.n_mix
        return w, self.r_mix.copy(), self.s_mm

    def distance(self, lam: float, *, warm: bool | None = None, return_history: bool = False):
        """Return ``(distance, converged)`` (plus the objective trace on request)."""
        if lam < 1.0:
            raise InputError(f"lambda must be >= 1, got {lam}")
        b = lam * self.r_mix + (1.0 - lam) * self.r_comp
        mu_sq = (lam * lam * self.s_mm + 2.0 * lam * (1.0 - lam) * self.s_mc
                 + (1.0 - lam) ** 2 * self.s_cc)

        if warm is None:
            warm = self.cfg_km.warm_start
        candidates = [self._uniform_start()]
        if warm and self._warm is not None:
            w, gw, wgw = self._warm
            candidates.append((w.copy(), gw.copy(), wgw))
        best = None
        for w, gw, wgw in candidates:
            wb = float(w @ b)
            f0 = mu_sq - 2.0 * wb + wgw
            if best is None or f0 < best[0]:
                best = (f0, w, gw, wgw, wb)
        f0, w, gw, wgw, wb = best

        history = np.zeros(self.cfg_km.fw_max_iter)
        f, wgw, wb, n_iter, converged = self.kernels.fw_solve(
            self.z, self.tau, b, mu_sq, w, gw, wgw, wb,
            self.cfg_km.fw_max_iter, self.cfg_km.fw_tol,
            self.cache, self.have, history, FW_MODES[self.cfg_km.fw_variant],
        )
        self._warm = (w, gw, wgw)
        dist = math.sqrt(max(f, 0.0))
        if return_history:
            return dist, bool(converged), np.concatenate([[f0], history[:n_iter]])
        return dist, bool(converged)


def hull_distance(cfg_k: KernelConfig, cfg_km: KMConfig, mix, comp, lam: float, *,
                  backend: str | None = None):
    """Distance from ``lam Phi(mix) + (1 - lam) Phi(comp)`` to the hull of the
    pooled feature maps. Returns ``(distance, converged)``."""
    return HullProjector(cfg_k, cfg_km, mix, comp, backend=backend).distance(lam, warm=False)


def distance_curve(cfg_k: KernelConfig, cfg_km: KMConfig, mix, comp, *,
                   backend: str | None = None) -> DistanceCurve:
    proj = HullProjector(cfg_k, cfg_km, mix, comp, backend=backend)
    dists, conv = [], []
    for lam in cfg_km.lambda_grid:
        d, ok = proj.distance(lam)
        dists.append(d)
        conv.append(ok)
    return DistanceCurve(tuple(cfg_km.lambda_grid), tuple(dists), tuple(conv))


def select_lambda(lambdas, distances, slope_threshold: float):
    """Smallest grid ``lam`` whose forward slope exceeds the threshold.

    Returns ``(lam, found)``; falls back to the last grid point.
    """
    for k in range(len(lambdas) - 1):
        slope = (distances[k + 1] - distances[k]) / (lambdas[k + 1] - lambdas[k])
        if slope > slope_threshold:
            return lambdas[k], True
    return lambdas[-1], False


def km2_fit(cfg_k: KernelConfig, cfg_km: KMConfig, mix, comp, *,
            backend: str | None = None, full_curve: bool = False) -> KMResult:
    """Estimate the weight of ``comp`` inside ``mix``.

    The curve is evaluated left to right and, unless ``full_curve``, stops at
    the first slope above the threshold.
    """
    mix, comp = as_sample(mix), as_sample(comp)
    proj = HullProjector(cfg_k, cfg_km, mix, comp, backend=backend)
    grid = cfg_km.lambda_grid
    lams, dists, conv = [], [], []
    lam_hat, found = grid[-1], False
    for k, lam in enumerate(grid):
        d, ok = proj.distance(lam)
        lams.append(lam)
        dists.append(d)
        conv.append(ok)
        if k >= 1 and not found:
            slope = (dists[k] - dists[k - 1]) / (lams[k] - lams[k - 1])
            if slope > cfg_km.slope_threshold:
                lam_hat, found = lams[k - 1], True
                if not full_curve:
                    break
    if not found:
        log.warning("KM2: no slope above %.3g on the lambda grid; estimate is low-confidence",
                    cfg_km.slope_threshold)
    estimate = min(max(1.0 - 1.0 / lam_hat, 0.0), math.nextafter(1.0, 0.0))
    return KMResult(
        estimate=estimate,
        lam=lam_hat,
        low_confidence=not found,
        curve=DistanceCurve(tuple(lams), tuple(dists), tuple(conv)),
    )


def km2_prior(cfg_k: KernelConfig, cfg_km: KMConfig, unlabeled, positives, *,
              backend: str | None = None) -> float:
    """Source class prior from unlabeled and labeled-positive samples."""
    return km2_fit(cfg_k, cfg_km, unlabeled, positives, backend=backend).estimate


def km2_ls_target_prior(cfg_k: KernelConfig, cfg_km: KMConfig, target, positives, *,
                        backend: str | None = None) -> float:
    """KM2-LS baseline: the same procedure run on (target, positives)."""
    return km2_fit(cfg_k, cfg_km, target, positives, backend=backend).estimate
