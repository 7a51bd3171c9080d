"""Reconstruction error and spectrum summaries."""
from __future__ import annotations

import numpy as np

from .exceptions import InvalidArgumentError


def nmse(truth, estimate) -> float:
    """Normalised squared error of two dB matrices, measured in linear power.

    Both maps are shifted by the truth's peak before exponentiation, which
    leaves the ratio unchanged and keeps the denominator at least 1.  An
    estimate far above the truth can still overflow the numerator, in which
    case the result is ``inf``.
    """
    z = np.asarray(truth, dtype=float)
    zh = np.asarray(estimate, dtype=float)
    if z.shape != zh.shape:
        raise InvalidArgumentError(f"shape mismatch {z.shape} vs {zh.shape}")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(zh))):
        raise InvalidArgumentError("NMSE needs finite inputs")
    ref = z.max()
    with np.errstate(over="ignore"):
        a = 10.0 ** ((z - ref) / 10.0)
        b = 10.0 ** ((zh - ref) / 10.0)
        num = np.sum((a - b) ** 2)
    return float(num / np.sum(a * a))


def singular_energy(m, k: int) -> float:
    """Share of the nuclear norm carried by the ``k`` largest singular values."""
    m = np.asarray(m, dtype=float)
    if not 1 <= k <= min(m.shape):
        raise InvalidArgumentError(f"k must lie in [1, {min(m.shape)}]")
    s = np.linalg.svd(m, compute_uv=False)
    total = s.sum()
    if total == 0:
        raise InvalidArgumentError("zero matrix has no singular-value energy")
    return float(s[:k].sum() / total)
