"""Per-angle radial sampling designs and fill distance."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import GridSpec
from .exceptions import InvalidArgumentError

DEFAULT_MU = 15.0


def _check_unit(x, name):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise InvalidArgumentError(f"{name} must lie in [0, 1]")
    return x


def _check_mu(mu):
    if not mu > 0:
        raise InvalidArgumentError("mu must be positive")


def mu_law_forward(x, mu=DEFAULT_MU):
    """Compress ``x`` in [0, 1]: ``ln(1 + mu x) / ln(1 + mu)``."""
    _check_mu(mu)
    x = _check_unit(x, "x")
    return np.log1p(mu * x) / np.log1p(mu)


def mu_law_inverse(y, mu=DEFAULT_MU):
    """Expand ``y`` in [0, 1]: ``((1 + mu)**y - 1) / mu``.

    Written with ``expm1`` so the ``mu -> 0`` limit stays accurate.
    """
    _check_mu(mu)
    y = _check_unit(y, "y")
    return np.expm1(y * np.log1p(mu)) / mu


@dataclass(frozen=True)
class MuLawParams:
    mu: float = DEFAULT_MU
    z0: float = 0.0
    z1: float = 1.0

    def __post_init__(self):
        _check_mu(self.mu)
        if not self.z0 < self.z1:
            raise InvalidArgumentError("need z0 < z1")


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def draw_nonuniform_radii(count: int, params: MuLawParams, seed=0) -> np.ndarray:
    """Draw ``count`` radii in ``[z0, z1]`` concentrated near ``z0``.

    Uniform variates are pushed through :func:`mu_law_inverse` and mapped
    linearly onto the target interval.
    """
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    u = _rng(seed).random(int(count))
    y = mu_law_inverse(u, params.mu)
    return params.z0 + y * (params.z1 - params.z0)


@dataclass(frozen=True)
class SampleMask:
    """Observed cells, stored as one sorted radial index array per angle."""

    shape: tuple[int, int]
    per_angle: tuple[np.ndarray, ...]
    target_ratio: float
    strategy: str = "uniform"
    mu: float | None = None
    seed: int | None = None

    def __post_init__(self):
        n_theta, n_r = self.shape
        if len(self.per_angle) != n_theta:
            raise InvalidArgumentError("per_angle must have one entry per angle")
        fixed = []
        for idx in self.per_angle:
            idx = np.asarray(idx, dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= n_r):
                raise InvalidArgumentError("radial index out of bounds")
            if np.unique(idx).size != idx.size:
                raise InvalidArgumentError("duplicate radial index in a slice")
            fixed.append(np.sort(idx))
        object.__setattr__(self, "per_angle", tuple(fixed))

    @property
    def entries(self) -> np.ndarray:
        """``(M, 2)`` array of ``(i, j)`` pairs in row-major order."""
        if not self.per_angle:
            return np.empty((0, 2), dtype=np.int64)
        rows = [np.column_stack([np.full(idx.size, i), idx]) for i, idx in enumerate(self.per_angle)]
        return np.vstack(rows).astype(np.int64)

    @property
    def size(self) -> int:
        return sum(idx.size for idx in self.per_angle)

    def to_boolean(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        for i, idx in enumerate(self.per_angle):
            m[i, idx] = True
        return m

    @classmethod
    def from_entries(cls, shape, entries, target_ratio=None, **meta):
        entries = np.asarray(entries, dtype=np.int64).reshape(-1, 2)
        per = [np.sort(entries[entries[:, 0] == i, 1]) for i in range(shape[0])]
        if target_ratio is None:
            target_ratio = entries.shape[0] / float(shape[0] * shape[1])
        return cls(shape=tuple(shape), per_angle=tuple(per), target_ratio=target_ratio, **meta)


def samples_per_angle(ratio: float, n_r: int) -> int:
    if not 0 < ratio <= 1:
        raise InvalidArgumentError("ratio must lie in (0, 1]")
    k = int(math.floor(ratio * n_r + 0.5))
    if k < 2:
        raise InvalidArgumentError(f"ratio {ratio} gives {k} samples per angle; need >= 2")
    if k > n_r:
        raise InvalidArgumentError("more samples than radial cells")
    return k


def _fill_gaps(chosen: set, k: int, n_r: int) -> set:
    # greedy: add the free index farthest from every chosen one
    free = np.setdiff1d(np.arange(n_r), np.fromiter(chosen, dtype=np.int64, count=len(chosen)))
    while len(chosen) < k:
        c = np.fromiter(chosen, dtype=np.int64, count=len(chosen))
        if c.size:
            dist = np.abs(free[:, None] - c[None, :]).min(axis=1)
        else:
            dist = np.zeros(free.size)
        pick = int(np.argmax(dist))
        chosen.add(int(free[pick]))
        free = np.delete(free, pick)
    return chosen


def _mulaw_slice(rng, k, grid: GridSpec, params: MuLawParams) -> np.ndarray:
    chosen: set = set()
    budget = 10 * k
    step = grid.r_step
    while len(chosen) < k and budget > 0:
        n = min(k - len(chosen), budget)
        r = draw_nonuniform_radii(n, params, rng)
        j = np.clip(np.rint((r - grid.r_min) / step), 0, grid.n_r - 1).astype(np.int64)
        chosen.update(int(v) for v in j)
        budget -= n
    if len(chosen) < k:
        chosen = _fill_gaps(chosen, k, grid.n_r)
    return np.array(sorted(chosen), dtype=np.int64)


def build_mask(grid: GridSpec, ratio: float, strategy="uniform", seed: int = 0, mu: float = DEFAULT_MU) -> SampleMask:
    """Sample ``round(ratio * n_r)`` distinct radial cells in every angular slice.

    Parameters
    ----------
    strategy : {"uniform", "mulaw"} or MuLawParams
        ``"uniform"`` draws indices without replacement.  ``"mulaw"`` draws
        continuous radii with :func:`draw_nonuniform_radii` over
        ``[r_min, r_max]``, snaps them to the nearest grid cell and redraws on
        collision (at most ``10 K`` draws, then the largest gaps are filled).
    seed : int
        Each angle gets its own stream spawned from ``SeedSequence(seed)``.
    """
    k = samples_per_angle(ratio, grid.n_r)
    if isinstance(strategy, MuLawParams):
        params = strategy
        name = "mulaw"
    elif strategy in ("mulaw", "mu_law"):
        params = MuLawParams(mu=mu, z0=grid.r_min, z1=grid.r_max)
        name = "mulaw"
    elif strategy == "uniform":
        params = None
        name = "uniform"
    else:
        raise InvalidArgumentError(f"unknown sampling strategy {strategy!r}")

    children = np.random.SeedSequence(seed).spawn(grid.n_theta)
    per_angle = []
    for child in children:
        rng = np.random.Generator(np.random.Philox(child))
        if params is None:
            idx = np.sort(rng.choice(grid.n_r, size=k, replace=False))
        else:
            idx = _mulaw_slice(rng, k, grid, params)
        per_angle.append(idx)
    return SampleMask(
        shape=grid.shape,
        per_angle=tuple(per_angle),
        target_ratio=float(ratio),
        strategy=name,
        mu=None if params is None else float(params.mu),
        seed=seed,
    )


def fill_distance(points, domain) -> float:
    """Largest distance from any point of ``domain = (a, b)`` to its nearest sample."""
    pts = np.sort(np.asarray(points, dtype=float).ravel())
    if pts.size == 0:
        raise InvalidArgumentError("fill distance needs at least one point")
    a, b = domain
    if pts[0] < a or pts[-1] > b:
        raise InvalidArgumentError("points must lie inside the domain")
    gaps = np.diff(pts) / 2.0
    interior = gaps.max() if gaps.size else 0.0
    return float(max(pts[0] - a, b - pts[-1], interior))
