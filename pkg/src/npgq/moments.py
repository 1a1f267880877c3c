"""Raw moments of data, Gaussians, and Gaussian mixtures.

Everything downstream (Hankel matrices, recurrence coefficients,
quadrature rules) consumes plain sequences of raw moments
``m_0, m_1, ..., m_K`` with ``m_k = E[X^k]``.  Sample moments use the
population divisor ``1/I`` and compensated summation, since high-order
moments feed a Cholesky factorization that is sensitive to cancellation.
Data is standardized (mean 0, std 1) before moments are taken; Gaussian
quadrature commutes with affine maps, so nodes are mapped back afterwards
at no cost in accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, InputError

__all__ = [
    "MomentSequence",
    "AffineTransform",
    "GaussianMixture",
    "sample_moments",
    "standardize",
    "gaussian_moments",
    "mixture_moments",
    "standardized_mixture",
]


@dataclass(frozen=True)
class MomentSequence:
    """Raw moments ``m_0..m_K`` of a (possibly unnormalized) measure.

    ``values[k]`` is the k-th raw moment; ``values[0]`` is the total mass,
    which must be positive (and is exactly 1 for probability data).
    """

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise InputError("moment sequence must contain at least m_0")
        if not all(math.isfinite(v) for v in vals):
            raise InputError("moment sequence contains non-finite entries")
        if vals[0] <= 0.0:
            raise InputError(f"m_0 must be positive, got {vals[0]}")
        object.__setattr__(self, "values", vals)

    @property
    def max_order(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class AffineTransform:
    """Location/scale map between standardized and original data units.

    ``to_original(z) = shift + scale * z`` and ``to_standardized`` is its
    inverse; ``scale`` must be positive.
    """

    shift: float
    scale: float

    def __post_init__(self):
        if not (math.isfinite(self.shift) and math.isfinite(self.scale)):
            raise InputError("affine transform parameters must be finite")
        if self.scale <= 0.0:
            raise InputError(f"scale must be positive, got {self.scale}")

    def to_original(self, z):
        return self.shift + self.scale * np.asarray(z, dtype=float)

    def to_standardized(self, x):
        return (np.asarray(x, dtype=float) - self.shift) / self.scale


@dataclass(frozen=True)
class GaussianMixture:
    """Finite Gaussian mixture: component proportions, means, and stds."""

    proportions: tuple[float, ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.proportions)
        mu = tuple(float(v) for v in self.means)
        sd = tuple(float(v) for v in self.stds)
        if len(p) == 0:
            raise InputError("mixture needs at least one component")
        if not (len(p) == len(mu) == len(sd)):
            raise InputError("mixture parameter arrays must have equal length")
        if any(not math.isfinite(v) for v in p + mu + sd):
            raise InputError("mixture parameters must be finite")
        if any(v <= 0.0 or v > 1.0 for v in p):
            raise InputError("mixture proportions must lie in (0, 1]")
        if abs(sum(p) - 1.0) > 1e-10:
            raise InputError(f"mixture proportions must sum to 1, got {sum(p)}")
        if any(v < 0.0 for v in sd):
            raise InputError("mixture stds must be nonnegative")
        object.__setattr__(self, "proportions", p)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "stds", sd)

    @property
    def n_components(self) -> int:
        return len(self.proportions)

    def mean(self) -> float:
        return math.fsum(p * m for p, m in zip(self.proportions, self.means))

    def variance(self) -> float:
        mu = self.mean()
        second = math.fsum(
            p * (m * m + s * s)
            for p, m, s in zip(self.proportions, self.means, self.stds)
        )
        return second - mu * mu


def _as_clean_array(data, *, name: str = "data") -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim != 1:
        x = x.reshape(-1)
    if x.size == 0:
        raise InputError(f"{name} must be nonempty")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} contains non-finite entries")
    return x


def sample_moments(data, max_order: int) -> MomentSequence:
    """Raw sample moments ``(1/I) * sum_i x_i^k`` for ``k = 0..max_order``.

    Parameters
    ----------
    data : array_like
        Observations ``x_1..x_I``; must be nonempty and finite.
    max_order : int
        Highest moment order K.

    Returns
    -------
    MomentSequence
        ``values[0]`` is exactly 1; each sum is accumulated with
        error-compensated summation.
    """
    if max_order < 0:
        raise InputError(f"max_order must be >= 0, got {max_order}")
    x = _as_clean_array(data)
    n = x.size
    out = [1.0]
    power = np.ones_like(x)
    for _ in range(max_order):
        power = power * x
        out.append(math.fsum(power) / n)
    return MomentSequence(tuple(out))


def standardize(data) -> tuple[AffineTransform, np.ndarray]:
    """Map data to mean 0, std 1 (population divisor ``I``).

    Returns the transform that maps standardized values back to the
    original units, together with the standardized array.  Raises
    :class:`DegenerateDataError` when the sample std is zero.
    """
    x = _as_clean_array(data)
    n = x.size
    mean = math.fsum(x) / n
    var = math.fsum((x - mean) ** 2) / n
    if var <= 0.0:
        raise DegenerateDataError(
            "data has zero sample variance; cannot standardize"
        )
    scale = math.sqrt(var)
    transform = AffineTransform(shift=mean, scale=scale)
    return transform, (x - mean) / scale


def gaussian_moments(mean: float, std: float, max_order: int) -> MomentSequence:
    """Raw moments of ``N(mean, std^2)`` up to ``max_order``.

    Uses the stable recursion
    ``m_k = mean * m_{k-1} + (k - 1) * std^2 * m_{k-2}`` with ``m_0 = 1``;
    ``std = 0`` yields the point-mass moments ``mean^k``.
    """
    if max_order < 0:
        raise InputError(f"max_order must be >= 0, got {max_order}")
    if not (math.isfinite(mean) and math.isfinite(std)):
        raise InputError("mean and std must be finite")
    if std < 0.0:
        raise InputError(f"std must be nonnegative, got {std}")
    out = [1.0]
    if max_order >= 1:
        out.append(mean)
    var = std * std
    for k in range(2, max_order + 1):
        out.append(mean * out[k - 1] + (k - 1) * var * out[k - 2])
    return MomentSequence(tuple(out))


def mixture_moments(mix: GaussianMixture, max_order: int) -> MomentSequence:
    """Raw moments of a Gaussian mixture: proportion-weighted component moments."""
    if max_order < 0:
        raise InputError(f"max_order must be >= 0, got {max_order}")
    per_component = [
        gaussian_moments(m, s, max_order).values
        for m, s in zip(mix.means, mix.stds)
    ]
    out = [
        math.fsum(p * comp[k] for p, comp in zip(mix.proportions, per_component))
        for k in range(max_order + 1)
    ]
    out[0] = 1.0
    return MomentSequence(tuple(out))


def standardized_mixture(mix: GaussianMixture) -> tuple[AffineTransform, GaussianMixture]:
    """Affinely rescale a mixture to mean 0, variance 1.

    If ``X`` follows the mixture then ``(X - shift)/scale`` follows the
    returned one.  Requires positive mixture variance.
    """
    mu = mix.mean()
    var = mix.variance()
    if var <= 0.0:
        raise DegenerateDataError("mixture has zero variance; cannot standardize")
    scale = math.sqrt(var)
    transform = AffineTransform(shift=mu, scale=scale)
    rescaled = GaussianMixture(
        proportions=mix.proportions,
        means=tuple((m - mu) / scale for m in mix.means),
        stds=tuple(s / scale for s in mix.stds),
    )
    return transform, rescaled
