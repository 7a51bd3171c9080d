"""Huber location estimate by IRLS, used to turn LOOCV residuals into a tolerance."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgumentError

MAD_CONSISTENCY = 1.4826


def huber_loss(r, threshold):
    """Quadratic inside ``|r| <= threshold``, linear outside."""
    if not threshold > 0:
        raise InvalidArgumentError("Huber threshold must be positive")
    r = np.asarray(r, dtype=float)
    a = np.abs(r)
    return np.where(a <= threshold, 0.5 * r * r, threshold * (a - 0.5 * threshold))


def huber_objective(values, center, threshold) -> float:
    return float(np.sum(huber_loss(np.asarray(values, dtype=float) - center, threshold)))


def mad(values) -> float:
    """Median absolute deviation from the median (no consistency factor)."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise InvalidArgumentError("MAD of an empty list")
    return float(np.median(np.abs(x - np.median(x))))


@dataclass(frozen=True)
class HuberConfig:
    threshold: float | str = "auto-mad"
    max_iters: int = 100
    tol: float = 1e-8

    def __post_init__(self):
        if isinstance(self.threshold, str):
            if self.threshold != "auto-mad":
                raise InvalidArgumentError(f"unknown threshold rule {self.threshold!r}")
        elif not self.threshold > 0:
            raise InvalidArgumentError("threshold must be positive")
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be >= 1")
        if not self.tol > 0:
            raise InvalidArgumentError("tol must be positive")


@dataclass
class HuberResult:
    center: float
    threshold: float
    iterations: int
    converged: bool
    objective_trace: list = field(default_factory=list)

    def diagnostics(self) -> dict:
        return {
            "threshold": self.threshold,
            "iterations": self.iterations,
            "converged": self.converged,
            "center": self.center,
        }


def resolve_threshold(values, cfg: HuberConfig) -> float:
    """Threshold from ``cfg``; ``"auto-mad"`` uses the MAD with a mean-deviation floor.

    Returns 0.0 when the data carry no spread at all.
    """
    if not isinstance(cfg.threshold, str):
        return float(cfg.threshold)
    x = np.asarray(values, dtype=float)
    s = mad(x)
    if s > 0:
        return s
    mean_dev = float(np.mean(np.abs(x - np.median(x))))
    if mean_dev == 0:
        return 0.0
    return 1e-6 + MAD_CONSISTENCY * mean_dev


def huber_estimate(values, cfg: HuberConfig | None = None) -> HuberResult:
    """Minimise ``sum_k huber(e_k - mu)`` over ``mu`` by reweighted averaging.

    Starts from the median.  Weights are 1 inside the threshold and
    ``threshold / |e_k - mu|`` outside.  When the iteration cap is reached the
    last iterate comes back with ``converged=False``.
    """
    cfg = cfg or HuberConfig()
    e = np.asarray(values, dtype=float).ravel()
    if e.size == 0:
        raise InvalidArgumentError("Huber estimate of an empty list")
    if not np.all(np.isfinite(e)):
        raise InvalidArgumentError("non-finite residuals")
    thr = resolve_threshold(e, cfg)
    mu = float(np.median(e))
    if thr <= 0:
        # every value equals the median
        return HuberResult(mu, 0.0, 0, True, [0.0])

    trace = [huber_objective(e, mu, thr)]
    for it in range(1, cfg.max_iters + 1):
        dev = np.abs(e - mu)
        w = np.ones_like(e)
        out = dev > thr
        w[out] = thr / dev[out]
        new = float(np.dot(w, e) / w.sum())
        trace.append(huber_objective(e, new, thr))
        step = abs(new - mu)
        mu = new
        if step <= cfg.tol:
            return HuberResult(mu, thr, it, True, trace)
    return HuberResult(mu, thr, cfg.max_iters, False, trace)


def select_delta(pooled_residuals, cfg: HuberConfig | None = None) -> tuple[float, HuberResult]:
    """Tolerance = Huber centre of the absolute pooled residuals."""
    a = np.abs(np.asarray(pooled_residuals, dtype=float).ravel())
    if a.size == 0:
        raise InvalidArgumentError("no residuals to select a tolerance from")
    res = huber_estimate(np.sort(a), cfg)
    return max(res.center, 0.0), res
