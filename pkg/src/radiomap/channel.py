"""Near-field line-of-sight channel model for a uniform linear array.

The transmitter is a ULA of ``N`` elements along the y axis, element ``n``
sitting at ``(0, delta_n * wavelength / 2)``.  A receiver at distance ``d``
from the array centre and spatial angle ``theta`` (measured from the array
axis, so ``cos(theta)`` multiplies the element offset) sees the spherical
wavefront distances

    d_n = sqrt(d**2 + delta_n**2 * wavelength**2 / 4 - d * cos(theta) * delta_n * wavelength)

All public functions take angles in degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgumentError

SPEED_OF_LIGHT = 2.99792458e8

# Cells whose linear power falls below this are clamped to NULL_FLOOR_DB.
NULL_POWER = 1e-300
NULL_FLOOR_DB = -400.0


def element_offsets(n_elements: int) -> np.ndarray:
    """Dimensionless element offsets ``(2n - N - 1) / 2`` for ``n = 1..N``."""
    if int(n_elements) != n_elements or n_elements < 1:
        raise InvalidArgumentError(f"n_elements must be a positive integer, got {n_elements!r}")
    n = np.arange(1, int(n_elements) + 1, dtype=float)
    return (2.0 * n - n_elements - 1.0) / 2.0


@dataclass(frozen=True)
class ArrayGeometry:
    n_elements: int
    carrier_freq: float
    wavelength: float = field(init=False)
    element_offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.carrier_freq <= 0:
            raise InvalidArgumentError("carrier_freq must be positive")
        object.__setattr__(self, "wavelength", SPEED_OF_LIGHT / self.carrier_freq)
        object.__setattr__(self, "element_offsets", element_offsets(self.n_elements))

    @property
    def aperture(self) -> float:
        return self.n_elements * self.wavelength / 2.0

    @property
    def rayleigh_distance(self) -> float:
        return 2.0 * self.aperture**2 / self.wavelength


@dataclass(frozen=True)
class Beamformer:
    """Unit-norm transmit weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex).ravel()
        if not np.isclose(np.linalg.norm(w), 1.0, rtol=0, atol=1e-12):
            raise InvalidArgumentError("beamformer weights must have unit Euclidean norm")
        object.__setattr__(self, "weights", w)

    @classmethod
    def omnidirectional(cls, n_elements: int) -> "Beamformer":
        return cls(np.full(n_elements, 1.0 / math.sqrt(n_elements), dtype=complex))


@dataclass(frozen=True)
class GridSpec:
    """Angular-radial grid; row ``i`` is an angle, column ``j`` a radius."""

    theta_min: float
    theta_max: float
    r_min: float
    r_max: float
    n_theta: int
    n_r: int

    def __post_init__(self):
        if not self.theta_min < self.theta_max:
            raise InvalidArgumentError("theta_min must be < theta_max")
        if not 0 < self.r_min < self.r_max:
            raise InvalidArgumentError("need 0 < r_min < r_max")
        if self.n_theta < 2 or self.n_r < 2:
            raise InvalidArgumentError("grid needs at least 2 points per axis")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_r)

    @property
    def thetas(self) -> np.ndarray:
        i = np.arange(self.n_theta)
        return self.theta_min + i * (self.theta_max - self.theta_min) / (self.n_theta - 1)

    @property
    def radii(self) -> np.ndarray:
        j = np.arange(self.n_r)
        return self.r_min + j * (self.r_max - self.r_min) / (self.n_r - 1)

    @property
    def r_step(self) -> float:
        return (self.r_max - self.r_min) / (self.n_r - 1)

    def to_dict(self) -> dict:
        return {
            "theta_min": self.theta_min,
            "theta_max": self.theta_max,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "n_theta": self.n_theta,
            "n_r": self.n_r,
        }


@dataclass
class RadioMap:
    grid: GridSpec
    values: np.ndarray
    seed: int | None = None
    sigma_shadow: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise InvalidArgumentError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidArgumentError("radio map contains non-finite cells")


def _check_distance(d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise InvalidArgumentError("distance must be positive")
    return d


def element_distance(d, theta, delta_n, wavelength):
    """Distance from a receiver at ``(d, theta)`` to the element with offset ``delta_n``."""
    d = _check_distance(d)
    c = np.cos(np.deg2rad(theta))
    sq = d * d + (delta_n * wavelength) ** 2 / 4.0 - d * c * delta_n * wavelength
    return np.sqrt(np.maximum(sq, 0.0))


def _element_distances(d, theta, geom):
    # trailing axis runs over elements
    d = np.asarray(d, dtype=float)[..., None]
    c = np.cos(np.deg2rad(np.asarray(theta, dtype=float)))[..., None]
    off = geom.element_offsets * geom.wavelength
    return np.sqrt(np.maximum(d * d + off * off / 4.0 - d * c * off, 0.0))


def array_factor(d, theta, geom: ArrayGeometry, bf: Beamformer | None = None):
    """Near-field array factor ``lambda/(4 pi d) * sum_n v_n exp(-2j pi d_n / lambda)``.

    Broadcasts over ``d`` and ``theta``.
    """
    d = _check_distance(d)
    if bf is None:
        bf = Beamformer.omnidirectional(geom.n_elements)
    dn = _element_distances(d, theta, geom)
    phase = np.exp(-2j * np.pi * dn / geom.wavelength)
    s = phase @ bf.weights
    return geom.wavelength / (4.0 * np.pi * d) * s


def rss_db(d, theta, geom: ArrayGeometry, bf: Beamformer | None = None, power=1.0, shadow_db=0.0):
    """Received signal strength in dB for a unit-power symbol.

    Uses the ``sqrt(P/N)`` prefactor literally.  An exact null returns ``-inf``.
    """
    if power <= 0:
        raise InvalidArgumentError("power must be positive")
    s = array_factor(d, theta, geom, bf)
    p = (power / geom.n_elements) * np.abs(s) ** 2
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(p) + shadow_db


def shadowing_rng(seed) -> np.random.Generator:
    """Philox-4x64 generator keyed through :class:`numpy.random.SeedSequence`."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def noiseless_map(grid: GridSpec, geom: ArrayGeometry, bf: Beamformer | None = None, power=1.0):
    """Deterministic RSS matrix (dB) with nulls clamped to ``NULL_FLOOR_DB``."""
    if power <= 0:
        raise InvalidArgumentError("power must be positive")
    radii = grid.radii
    out = np.empty(grid.shape)
    for i, th in enumerate(grid.thetas):
        s = array_factor(radii, th, geom, bf)
        p = (power / geom.n_elements) * np.abs(s) ** 2
        row = np.full(radii.shape, NULL_FLOOR_DB)
        ok = p >= NULL_POWER
        row[ok] = 10.0 * np.log10(p[ok])
        out[i] = row
    return out


def generate_map(
    grid: GridSpec,
    geom: ArrayGeometry,
    bf: Beamformer | None = None,
    power: float = 1.0,
    sigma: float = 0.0,
    seed: int = 0,
) -> RadioMap:
    """Ground-truth radio map with i.i.d. log-normal shadowing per cell.

    Shadowing draws come from :func:`shadowing_rng` in row-major cell order,
    so the map is a pure function of the arguments.
    """
    if sigma < 0:
        raise InvalidArgumentError("sigma must be non-negative")
    values = noiseless_map(grid, geom, bf, power)
    eps = shadowing_rng(seed).standard_normal(grid.shape)
    if sigma > 0:
        values = values + sigma * eps
    return RadioMap(grid=grid, values=values, seed=seed, sigma_shadow=float(sigma))


def sensitivity_bounds(d, theta, geom: ArrayGeometry):
    """Envelopes on ``|d|S|/dtheta|`` (per radian) and ``|d|S|/dd|`` (per metre).

    Returns ``(5 lambda |sin theta| N**2 / (16 d_min), (lambda/(4 pi d**2) + 1/(2d)) N)``
    where ``d_min`` is the smallest element-to-receiver distance.
    """
    d = _check_distance(d)
    lam = geom.wavelength
    n = geom.n_elements
    d_min = _element_distances(d, theta, geom).min(axis=-1)
    if np.any(d_min <= 0):
        raise InvalidArgumentError("receiver coincides with an array element")
    s = np.abs(np.sin(np.deg2rad(theta)))
    angular = 5.0 * lam * s / (16.0 * d_min) * n**2
    radial = (lam / (4.0 * np.pi * d * d) + 1.0 / (2.0 * d)) * n
    return angular, radial


def default_scene():
    """Grid and array used throughout the experiments (100x100, N=256 at 100 GHz)."""
    grid = GridSpec(theta_min=-80.0, theta_max=80.0, r_min=0.1, r_max=10.0, n_theta=100, n_r=100)
    geom = ArrayGeometry(n_elements=256, carrier_freq=100e9)
    return grid, geom
