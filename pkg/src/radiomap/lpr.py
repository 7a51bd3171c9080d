"""First-order local polynomial regression baseline and its completion variant."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import GridSpec
from .exceptions import InvalidArgumentError
from .lowrank import CompletionResult, SolverConfig, solve_box_nnm
from .rbf import SliceMeasurements, slice_measurements
from .robust import HuberConfig, select_delta
from .sampling import SampleMask

DEFAULT_BANDWIDTHS = (0.1, 0.2, 0.4, 0.8, 1.6)
MIN_WEIGHT = 1e-12


@dataclass(frozen=True)
class LprConfig:
    """``bandwidth`` in metres, or ``"auto"`` for per-slice LOOCV over ``candidates``."""

    bandwidth: float | str = "auto"
    candidates: tuple = DEFAULT_BANDWIDTHS

    def __post_init__(self):
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "auto":
                raise InvalidArgumentError(f"unknown bandwidth rule {self.bandwidth!r}")
            if not self.candidates or min(self.candidates) <= 0:
                raise InvalidArgumentError("candidate bandwidths must be positive and nonempty")
        elif not self.bandwidth > 0:
            raise InvalidArgumentError("bandwidth must be positive")


def _local_linear(x, y, q, h, exclude_self=False):
    """Intercepts of Gaussian-weighted linear fits centred at each query.

    ``x, y`` have length K, ``q`` length Q.  With ``exclude_self`` the queries
    are the nodes themselves and node ``k`` gets zero weight at query ``k``.
    """
    h = np.full(q.shape, float(h))
    dx = x[None, :] - q[:, None]
    widened = False
    while True:
        w = np.exp(-0.5 * (dx / h[:, None]) ** 2)
        if exclude_self:
            np.fill_diagonal(w, 0.0)
        thin = np.count_nonzero(w > MIN_WEIGHT, axis=1) < 2
        if not thin.any():
            break
        h[thin] *= 2.0
        widened = True
    if widened:
        warnings.warn("LPR bandwidth widened where fewer than two samples carried weight", RuntimeWarning, stacklevel=3)
    # centred form of the 2x2 normal equations; avoids the s0*s2 - s1**2 cancellation
    w = w / w.sum(axis=1, keepdims=True)
    xbar = (w * dx).sum(axis=1)
    ybar = w @ y
    xc = dx - xbar[:, None]
    slope = (w * xc) @ y / (w * xc * xc).sum(axis=1)
    return ybar - slope * xbar


def lpr_loocv(meas: SliceMeasurements, bandwidth: float) -> np.ndarray:
    """Leave-one-out residuals of the local linear fit at a fixed bandwidth."""
    if len(meas) < 3:
        raise InvalidArgumentError("LPR leave-one-out needs at least 3 samples")
    pred = _local_linear(meas.radii, meas.values, meas.radii, bandwidth, exclude_self=True)
    return meas.values - pred


def resolve_bandwidth(meas: SliceMeasurements, cfg: LprConfig) -> float:
    """Bandwidth from ``cfg``; in auto mode the candidate with least mean squared LOO residual."""
    if not isinstance(cfg.bandwidth, str):
        return float(cfg.bandwidth)
    if len(meas) < 3:
        return float(max(cfg.candidates))
    scores = [np.mean(lpr_loocv(meas, h) ** 2) for h in cfg.candidates]
    return float(cfg.candidates[int(np.argmin(scores))])


def lpr_predict(meas: SliceMeasurements, query, cfg: LprConfig = LprConfig()):
    """Local linear estimate at ``query`` (scalar or array)."""
    if len(meas) < 2:
        raise InvalidArgumentError("LPR needs at least 2 samples")
    h = resolve_bandwidth(meas, cfg)
    q = np.asarray(query, dtype=float)
    out = _local_linear(meas.radii, meas.values, q.ravel(), h)
    return out.reshape(q.shape) if q.ndim else float(out[0])


def lpr_map(mask: SampleMask, values, grid: GridSpec, cfg: LprConfig = LprConfig()):
    """Prior matrix from per-slice LPR.  Returns ``(prior, bandwidths)``."""
    radii = grid.radii
    prior = np.empty(grid.shape)
    bws = np.empty(grid.n_theta)
    for i in range(grid.n_theta):
        meas = slice_measurements(mask, values, grid, i)
        h = resolve_bandwidth(meas, cfg)
        bws[i] = h
        prior[i] = _local_linear(meas.radii, meas.values, radii, h)
    return prior, bws


def lpr_map_residuals(mask: SampleMask, values, grid: GridSpec, bandwidths) -> np.ndarray:
    pooled = []
    for i in range(grid.n_theta):
        meas = slice_measurements(mask, values, grid, i)
        if len(meas) >= 3:
            pooled.append(lpr_loocv(meas, bandwidths[i]))
    return np.concatenate(pooled) if pooled else np.empty(0)


def lpr_mc(
    mask: SampleMask,
    values,
    grid: GridSpec,
    lpr_cfg: LprConfig = LprConfig(),
    delta="huber",
    solver_cfg: SolverConfig | None = None,
    huber_cfg: HuberConfig | None = None,
) -> CompletionResult:
    """Box-constrained nuclear-norm refinement of the LPR prior.

    With ``delta="huber"`` the tolerance comes from the Huber centre of the
    absolute LPR leave-one-out residuals.
    """
    prior, bws = lpr_map(mask, values, grid, lpr_cfg)
    if isinstance(delta, str):
        if delta != "huber":
            raise InvalidArgumentError(f"unknown delta rule {delta!r}")
        res = lpr_map_residuals(mask, values, grid, bws)
        delta, _ = select_delta(res, huber_cfg)
    return solve_box_nnm(prior, float(delta), solver_cfg)
