"""Radial interpolation with a constant-augmented RBF model, one angle at a time.

For a slice with sample radii ``r_1..r_K`` and values ``g`` the model is

    rho(d) = sum_j lam_j * phi(|d - r_j|) + c,   with sum_j lam_j = 0,

and ``(lam, c)`` solve the bordered system ``[[Phi, 1], [1^T, 0]] [lam; c] = [g; 0]``.

Distances are divided by ``length_scale`` before the kernel is applied; the
map-level helpers default it to the radial grid step so ``epsilon`` is expressed
per grid cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import GridSpec
from .exceptions import DegenerateSliceError, IllConditionedError, InvalidArgumentError
from .sampling import SampleMask

MAX_CONDITION = 1e14


def kernel_multiquadric(distance, epsilon=1.0):
    """``sqrt(1 + epsilon * d**2)``."""
    d = np.asarray(distance, dtype=float)
    return np.sqrt(1.0 + epsilon * d * d)


def kernel_gaussian(distance, epsilon=1.0):
    d = np.asarray(distance, dtype=float)
    return np.exp(-epsilon * d * d)


def kernel_thin_plate(distance, epsilon=1.0):
    """``d**2 log d`` with the removable singularity at 0 set to 0; ``epsilon`` is unused."""
    d = np.abs(np.asarray(distance, dtype=float))
    out = np.zeros_like(d)
    nz = d > 0
    out[nz] = d[nz] ** 2 * np.log(d[nz])
    return out


KERNELS = {
    "multiquadric": kernel_multiquadric,
    "gaussian": kernel_gaussian,
    "thin_plate": kernel_thin_plate,
}


def _kernel(name):
    try:
        return KERNELS[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown kernel {name!r}") from None


@dataclass(frozen=True)
class SliceMeasurements:
    theta_index: int
    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if r.size != v.size:
            raise InvalidArgumentError("radii and values differ in length")
        order = np.argsort(r, kind="stable")
        object.__setattr__(self, "radii", r[order])
        object.__setattr__(self, "values", v[order])

    def __len__(self):
        return self.radii.size

    def without(self, k: int) -> "SliceMeasurements":
        keep = np.arange(len(self)) != k
        return SliceMeasurements(self.theta_index, self.radii[keep], self.values[keep])


@dataclass(frozen=True)
class RbfSliceModel:
    centers: np.ndarray
    weights: np.ndarray
    constant: float
    epsilon: float
    length_scale: float = 1.0
    kernel: str = "multiquadric"
    theta_index: int | None = None
    condition: float = float("nan")

    def __call__(self, d):
        return evaluate(self, d)


def kernel_matrix(a, b, epsilon=1.0, kernel="multiquadric", length_scale=1.0):
    a = np.asarray(a, dtype=float) / length_scale
    b = np.asarray(b, dtype=float) / length_scale
    return _kernel(kernel)(np.abs(a[:, None] - b[None, :]), epsilon)


def fit_slice(
    meas: SliceMeasurements,
    epsilon: float = 1.0,
    *,
    kernel: str = "multiquadric",
    length_scale: float = 1.0,
    constant: bool = True,
) -> RbfSliceModel:
    """Fit the interpolant to one slice.

    With ``constant=False`` the plain interpolant ``Phi lam = g`` is fitted
    instead (no constant term, no zero-sum condition).

    Raises
    ------
    InvalidArgumentError
        Fewer than two samples or repeated radii.
    IllConditionedError
        The system's 2-norm condition number exceeds ``1e14``.
    """
    r, g = meas.radii, meas.values
    k = r.size
    if k < 2:
        raise InvalidArgumentError(f"slice {meas.theta_index}: need at least 2 samples, got {k}")
    if np.any(np.diff(r) <= 0):
        raise InvalidArgumentError(f"slice {meas.theta_index}: duplicate radii")
    if not np.all(np.isfinite(g)):
        raise InvalidArgumentError(f"slice {meas.theta_index}: non-finite sample values")

    phi = kernel_matrix(r, r, epsilon, kernel, length_scale)
    if constant:
        a = np.zeros((k + 1, k + 1))
        a[:k, :k] = phi
        a[:k, k] = 1.0
        a[k, :k] = 1.0
        rhs = np.append(g, 0.0)
    else:
        a, rhs = phi, g
    cond = np.linalg.cond(a)
    if not cond <= MAX_CONDITION:
        raise IllConditionedError(
            f"slice {meas.theta_index}: interpolation system condition {cond:.3g} exceeds {MAX_CONDITION:g}",
            slice_index=meas.theta_index,
            condition=cond,
        )
    sol = np.linalg.solve(a, rhs)
    lam = sol[:k]
    c = float(sol[k]) if constant else 0.0
    return RbfSliceModel(
        centers=r.copy(),
        weights=lam,
        constant=c,
        epsilon=float(epsilon),
        length_scale=float(length_scale),
        kernel=kernel,
        theta_index=meas.theta_index,
        condition=float(cond),
    )


def evaluate(model: RbfSliceModel, d):
    """``sum_j lam_j phi(|d - r_j|) + c`` at one or many radii."""
    d = np.asarray(d, dtype=float)
    flat = d.ravel()
    phi = kernel_matrix(flat, model.centers, model.epsilon, model.kernel, model.length_scale)
    return (phi @ model.weights + model.constant).reshape(d.shape)


def slice_measurements(mask: SampleMask, values, grid: GridSpec, i: int) -> SliceMeasurements:
    """Samples of angle ``i``; ``values`` is a full matrix of which only observed cells are read."""
    idx = mask.per_angle[i]
    return SliceMeasurements(i, grid.radii[idx], np.asarray(values)[i, idx])


def fit_map(mask: SampleMask, values, grid: GridSpec, epsilon=1.0, *, kernel="multiquadric", length_scale=None, constant=True):
    if tuple(mask.shape) != grid.shape:
        raise InvalidArgumentError("mask shape does not match grid")
    if length_scale is None:
        length_scale = grid.r_step
    return [
        fit_slice(slice_measurements(mask, values, grid, i), epsilon, kernel=kernel, length_scale=length_scale, constant=constant)
        for i in range(grid.n_theta)
    ]


def interpolate_map(
    mask: SampleMask,
    values,
    grid: GridSpec,
    epsilon: float = 1.0,
    *,
    kernel: str = "multiquadric",
    length_scale: float | None = None,
    constant: bool = True,
) -> np.ndarray:
    """Prior matrix: row ``i`` is the slice-``i`` interpolant on every grid radius."""
    models = fit_map(mask, values, grid, epsilon, kernel=kernel, length_scale=length_scale, constant=constant)
    radii = grid.radii
    return np.vstack([evaluate(m, radii) for m in models])


def loocv_residuals(
    meas: SliceMeasurements,
    epsilon: float = 1.0,
    *,
    kernel: str = "multiquadric",
    length_scale: float = 1.0,
    constant: bool = True,
) -> np.ndarray:
    """Leave-one-out errors ``g_k - rho_{-k}(r_k)``, refitting on each reduced set."""
    k = len(meas)
    if k < 3:
        raise DegenerateSliceError(f"slice {meas.theta_index}: LOOCV needs at least 3 samples, got {k}")
    out = np.empty(k)
    for j in range(k):
        model = fit_slice(meas.without(j), epsilon, kernel=kernel, length_scale=length_scale, constant=constant)
        out[j] = meas.values[j] - evaluate(model, meas.radii[j])
    return out


def map_loocv_residuals(mask: SampleMask, values, grid: GridSpec, epsilon=1.0, *, kernel="multiquadric", length_scale=None, constant=True):
    """Pool LOOCV residuals over all slices.

    Returns ``(residuals, skipped)`` where ``skipped`` lists slices with fewer
    than three samples, which contribute nothing.
    """
    if length_scale is None:
        length_scale = grid.r_step
    pooled, skipped = [], []
    for i in range(grid.n_theta):
        meas = slice_measurements(mask, values, grid, i)
        if len(meas) < 3:
            skipped.append(i)
            continue
        pooled.append(loocv_residuals(meas, epsilon, kernel=kernel, length_scale=length_scale, constant=constant))
    res = np.concatenate(pooled) if pooled else np.empty(0)
    return res, skipped
