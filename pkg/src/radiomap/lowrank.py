"""Nuclear-norm minimisation under entrywise constraints.

Both problems are solved by Douglas-Rachford splitting between the nuclear
norm (proximal step = singular value soft-thresholding) and the indicator of
the constraint set (Euclidean projection):

    X = svt(Y, t);  W = proj(2X - Y);  Y += W - X

The governing sequence ``Y`` converges and ``X`` tends to a minimiser.  The
step ``t`` is ``penalty`` times the RMS magnitude of the data, which makes the
iteration equivariant to rescaling the problem.  The returned matrix is
``proj(X)``, so it is always feasible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgumentError

BOX_PENALTY = 0.1
OBSERVED_PENALTY = 1.0


def _finite(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return m


def nuclear_norm(m) -> float:
    """Sum of singular values."""
    m = _finite(m)
    return float(np.linalg.svd(m, compute_uv=False).sum())


def _svt(m, tau):
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    k = int(np.count_nonzero(s))
    return (u[:, :k] * s[:k]) @ vt[:k], float(s.sum())


def sv_threshold(m, tau: float) -> np.ndarray:
    """Proximal map of ``tau * ||.||_*``: shrink every singular value by ``tau``."""
    if tau < 0:
        raise InvalidArgumentError("tau must be non-negative")
    m = _finite(m)
    if tau == 0:
        return m.copy()
    return _svt(m, tau)[0]


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 2000
    rel_change_tol: float = 1e-5
    feasibility_tol: float | None = None  # None: 1e-6 * (1 + max|data|)
    penalty: float | None = None  # None: mode default
    keep_trace: bool = True

    def __post_init__(self):
        if self.max_iters < 1 or not self.rel_change_tol > 0:
            raise InvalidArgumentError("max_iters and rel_change_tol must be positive")
        if self.feasibility_tol is not None and not self.feasibility_tol > 0:
            raise InvalidArgumentError("feasibility_tol must be positive")
        if self.penalty is not None and not self.penalty > 0:
            raise InvalidArgumentError("penalty must be positive")


@dataclass
class CompletionResult:
    solution: np.ndarray
    iterations: int
    final_nuclear_norm: float
    max_violation: float
    converged: bool
    delta: float | None = None
    residual_trace: list = field(default_factory=list, repr=False)
    objective_trace: list = field(default_factory=list, repr=False)

    def diagnostics(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_nuclear_norm": self.final_nuclear_norm,
            "max_violation": self.max_violation,
            "converged": self.converged,
            "delta": self.delta,
        }


def _douglas_rachford(y, project, step, cfg: SolverConfig):
    res_trace, obj_trace = [], []
    x = y
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        x, nuc = _svt(y, step)
        w = project(2.0 * x - y)
        diff = w - x
        y_norm = np.linalg.norm(y)
        y = y + diff
        change = np.linalg.norm(diff) / y_norm if y_norm > 0 else np.linalg.norm(diff)
        if cfg.keep_trace:
            res_trace.append(float(np.linalg.norm(diff)))
            obj_trace.append(nuc)
        if change <= cfg.rel_change_tol:
            converged = True
            break
    return x, it, converged, res_trace, obj_trace


def _rms(m):
    v = float(np.linalg.norm(m)) / np.sqrt(m.size)
    return v if v > 0 else 1.0


def solve_box_nnm(prior, delta: float, cfg: SolverConfig | None = None) -> CompletionResult:
    """Minimise ``||Z||_*`` subject to ``|Z_ij - prior_ij| <= delta`` for every cell."""
    cfg = cfg or SolverConfig()
    prior = _finite(prior, "prior")
    if not delta >= 0:
        raise InvalidArgumentError("delta must be non-negative")
    feas_tol = cfg.feasibility_tol or 1e-6 * (1.0 + float(np.abs(prior).max()))
    if delta == 0:
        return CompletionResult(prior.copy(), 0, nuclear_norm(prior), 0.0, True, 0.0)

    lo, hi = prior - delta, prior + delta

    def project(m):
        return np.clip(m, lo, hi)

    step = (cfg.penalty or BOX_PENALTY) * _rms(prior)
    x, it, conv, rt, ot = _douglas_rachford(prior.copy(), project, step, cfg)
    z = project(x)
    viol = float(np.max(np.abs(z - prior)) - delta)
    return CompletionResult(
        solution=z,
        iterations=it,
        final_nuclear_norm=nuclear_norm(z),
        max_violation=viol,
        converged=conv and viol <= feas_tol,
        delta=float(delta),
        residual_trace=rt,
        objective_trace=ot,
    )


def solve_observed_nnm(mask, observed_values, shape=None, cfg: SolverConfig | None = None) -> CompletionResult:
    """Minimise ``||Z||_*`` subject to ``Z_ij = observed_ij`` on the mask.

    ``mask`` is a boolean matrix or a :class:`~radiomap.sampling.SampleMask`;
    ``observed_values`` is a full matrix of which only masked cells are read.
    """
    cfg = cfg or SolverConfig()
    if hasattr(mask, "to_boolean"):
        mask = mask.to_boolean()
    mask = np.asarray(mask, dtype=bool)
    if shape is not None and tuple(shape) != mask.shape:
        raise InvalidArgumentError("mask shape does not match requested shape")
    if not mask.any():
        raise InvalidArgumentError("mask is empty")
    vals = np.asarray(observed_values, dtype=float)
    if vals.shape != mask.shape:
        raise InvalidArgumentError("observed_values must be a full matrix of the mask's shape")
    obs = _finite(vals[mask], "observed values")
    feas_tol = cfg.feasibility_tol or 1e-6 * (1.0 + float(np.abs(obs).max()))

    def project(m):
        m = m.copy()
        m[mask] = obs
        return m

    y0 = np.zeros(mask.shape)
    y0[mask] = obs
    step = (cfg.penalty or OBSERVED_PENALTY) * _rms(y0)
    x, it, conv, rt, ot = _douglas_rachford(y0, project, step, cfg)
    z = project(x)
    viol = float(np.max(np.abs(z[mask] - obs)))
    return CompletionResult(
        solution=z,
        iterations=it,
        final_nuclear_norm=nuclear_norm(z),
        max_violation=viol,
        converged=conv and viol <= feas_tol,
        residual_trace=rt,
        objective_trace=ot,
    )
