"""Competitor discretizers: Gauss-Hermite on a fitted Gaussian, and
maximum-entropy moment matching on an even grid with a kernel-density prior.

Both serve as comparison points for the moment-fed quadrature method.
The Gauss-Hermite baseline is what one would use under a (log)normality
assumption; the maximum-entropy baseline ("np-me") tilts a kernel density
estimate on a fixed grid until low-order sample moments match.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateDataError, InfeasibleError, InputError, NumericalError
from .moments import gaussian_moments, sample_moments, standardize
from .quadrature import DiscreteDistribution, golub_welsch

__all__ = [
    "KernelDensity",
    "MaxEntSolution",
    "fit_gaussian_mle",
    "gauss_hermite_discretize",
    "kde_pdf",
    "maxent_grid",
    "maxent_dual",
    "maxent_solve",
    "maxent_discretize",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Damped-Newton settings for the tilting dual.
_NEWTON_MAX_ITER = 200
_NEWTON_GRAD_TOL = 1e-10
_LAMBDA_DIVERGENCE = 1e6


def fit_gaussian_mle(data) -> tuple[float, float]:
    """Maximum-likelihood Gaussian fit: sample mean and population std.

    The std uses divisor I (the MLE), consistent with the population
    moment convention used everywhere else in the package.
    """
    x = np.asarray(data, dtype=float).reshape(-1)
    if x.size == 0:
        raise InputError("data must be nonempty")
    if not np.all(np.isfinite(x)):
        raise InputError("data contains non-finite entries")
    mean = math.fsum(x) / x.size
    var = math.fsum((x - mean) ** 2) / x.size
    if var <= 0.0:
        raise DegenerateDataError("data has zero sample variance")
    return mean, math.sqrt(var)


@lru_cache(maxsize=32)
def _standard_normal_rule(n: int) -> DiscreteDistribution:
    return golub_welsch(gaussian_moments(0.0, 1.0, 2 * n), n)


def gauss_hermite_discretize(data, n: int) -> DiscreteDistribution:
    """N-point Gauss-Hermite rule for the MLE Gaussian fit of the data.

    Equivalent to running the moment pipeline on the fitted Gaussian's
    moments; computed as the standard-normal rule scaled to
    ``N(mean, std^2)``, which is the same rule with better conditioning.
    """
    if n < 1:
        raise InputError(f"node count must be >= 1, got {n}")
    mean, std = fit_gaussian_mle(data)
    base = _standard_normal_rule(n)
    nodes = tuple(mean + std * x for x in base.nodes)
    return DiscreteDistribution(nodes=nodes, weights=base.weights)


@dataclass(frozen=True)
class KernelDensity:
    """Gaussian-kernel density estimate with a fixed bandwidth."""

    data: tuple[float, ...]
    bandwidth: float

    def __post_init__(self):
        x = tuple(float(v) for v in np.asarray(self.data, dtype=float).reshape(-1))
        if len(x) == 0:
            raise InputError("data must be nonempty")
        if not all(math.isfinite(v) for v in x):
            raise InputError("data contains non-finite entries")
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0.0):
            raise InputError(f"bandwidth must be positive, got {self.bandwidth}")
        object.__setattr__(self, "data", x)

    @classmethod
    def fit(cls, data) -> "KernelDensity":
        """Bandwidth by Silverman's rule, h = 1.06 * std * I^(-1/5)."""
        x = np.asarray(data, dtype=float).reshape(-1)
        _, std = fit_gaussian_mle(x)
        h = 1.06 * std * x.size ** (-0.2)
        return cls(data=tuple(x), bandwidth=h)


def kde_pdf(kd: KernelDensity, x):
    """Kernel density value(s): ``(1/(I h)) sum_i phi((x - x_i)/h)``."""
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 0
    pts = np.atleast_1d(pts)
    data = np.asarray(kd.data)
    z = (pts[:, None] - data[None, :]) / kd.bandwidth
    vals = np.exp(-0.5 * z * z).sum(axis=1) / (data.size * kd.bandwidth * _SQRT_2PI)
    return float(vals[0]) if scalar else vals


def maxent_grid(data, n: int) -> np.ndarray:
    """Even grid of N points centered at the sample mean.

    The grid spans ``sqrt(2 (N - 1))`` sample standard deviations on each
    side, which is wide enough for the tilting problem to stay feasible
    while keeping interior resolution.
    """
    if n < 2:
        raise InputError(f"grid needs at least 2 points, got {n}")
    mean, std = fit_gaussian_mle(data)
    half_span = math.sqrt(2.0 * (n - 1)) * std
    return np.linspace(mean - half_span, mean + half_span, n)


def maxent_dual(lam, nodes, prior, targets) -> tuple[float, np.ndarray]:
    """Value and gradient of the tilting dual at ``lam``.

    The dual is ``log sum_n q_n exp(lam' (T(x_n) - tbar))`` with
    ``T(x) = (x, x^2, ..., x^L)``; it is smooth and convex, its gradient
    is the moment mismatch of the tilted weights, and its minimizer makes
    the tilted moments hit the targets exactly.
    """
    lam = np.asarray(lam, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    prior = np.asarray(prior, dtype=float)
    targets = np.asarray(targets, dtype=float)
    feat = _features(nodes, targets.size) - targets[:, None]
    logits = np.log(prior) + lam @ feat
    top = float(np.max(logits))
    expo = np.exp(logits - top)
    total = float(expo.sum())
    value = top + math.log(total)
    w = expo / total
    grad = feat @ w
    return value, grad


def _features(nodes: np.ndarray, n_moments: int) -> np.ndarray:
    """Stack of monomials x, x^2, ..., x^L evaluated on the grid (L x N)."""
    return np.vander(nodes, n_moments + 1, increasing=True).T[1:]


@dataclass(frozen=True)
class MaxEntSolution:
    """Result of the grid tilting problem.

    ``weights`` are the tilted probabilities on ``nodes``; ``prior`` is
    the normalized kernel-density prior; ``lam`` solves the dual for the
    ``n_matched`` monomial moments.  ``downgraded`` records a fallback
    from four matched moments to two after an infeasible first attempt.
    """

    nodes: tuple[float, ...]
    prior: tuple[float, ...]
    lam: tuple[float, ...]
    weights: tuple[float, ...]
    n_matched: int
    downgraded: bool
    iterations: int

    def distribution(self) -> DiscreteDistribution:
        return DiscreteDistribution(nodes=self.nodes, weights=self.weights)


def _solve_dual(nodes, prior, targets) -> tuple[np.ndarray, np.ndarray, int]:
    """Damped Newton on the tilting dual from lam = 0.

    Returns (lam, tilted weights, iterations).  Divergence of the iterates
    signals unattainable targets and raises :class:`InfeasibleError`;
    failure to converge within the cap raises :class:`NumericalError`.
    """
    n_mom = len(targets)
    feat = _features(np.asarray(nodes, float), n_mom) - np.asarray(targets)[:, None]
    log_prior = np.log(np.asarray(prior, float))
    lam = np.zeros(n_mom)

    def value_grad_w(l):
        logits = log_prior + l @ feat
        top = float(np.max(logits))
        expo = np.exp(logits - top)
        total = float(expo.sum())
        w = expo / total
        return top + math.log(total), feat @ w, w

    value, grad, w = value_grad_w(lam)
    for iteration in range(_NEWTON_MAX_ITER):
        if float(np.linalg.norm(grad)) <= _NEWTON_GRAD_TOL:
            return lam, w, iteration
        hess = (feat * w) @ feat.T - np.outer(grad, grad)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
        slope = float(grad @ step)
        if slope >= 0.0:  # not a descent direction; fall back to gradient
            step = -grad
            slope = -float(grad @ grad)
        # Sufficient decrease with a machine-precision allowance: near the
        # optimum the true decrease per step falls below the resolution of
        # the dual value, and without the slack the full Newton steps that
        # drive the gradient to zero would be rejected.
        roundoff = 1e-15 * max(1.0, abs(value))
        t = 1.0
        for _ in range(60):
            cand = lam + t * step
            cand_value, cand_grad, cand_w = value_grad_w(cand)
            if cand_value <= value + 1e-4 * t * slope + roundoff:
                break
            t *= 0.5
        else:
            raise NumericalError("tilting dual line search stalled")
        lam, value, grad, w = cand, cand_value, cand_grad, cand_w
        if float(np.linalg.norm(lam)) > _LAMBDA_DIVERGENCE:
            raise InfeasibleError(
                "tilting dual diverged; moment targets are unattainable on the grid"
            )
    raise NumericalError(
        f"tilting dual did not converge within {_NEWTON_MAX_ITER} iterations"
    )


def maxent_solve(data, n: int) -> MaxEntSolution:
    """Tilt a kernel-density prior on an even grid to match sample moments.

    Works in standardized units throughout: the grid and prior come from
    the standardized data, four moments are matched when the grid has at
    least five points (two otherwise), and nodes are mapped back to data
    units at the end.  If four moments are unattainable on the grid the
    solver retries with two and flags the downgrade.
    """
    if n < 2:
        raise InputError(f"node count must be >= 2, got {n}")
    transform, z = standardize(data)
    grid = maxent_grid(z, n)
    prior = kde_pdf(KernelDensity.fit(z), grid)
    prior = prior / prior.sum()
    n_match = 4 if n >= 5 else 2
    targets = np.asarray(sample_moments(z, n_match).values[1:])
    downgraded = False
    try:
        lam, weights, iterations = _solve_dual(grid, prior, targets)
    except (InfeasibleError, NumericalError):
        if n_match == 2:
            raise
        n_match = 2
        downgraded = True
        targets = targets[:2]
        lam, weights, iterations = _solve_dual(grid, prior, targets)
    return MaxEntSolution(
        nodes=tuple(transform.to_original(grid)),
        prior=tuple(prior),
        lam=tuple(lam),
        weights=tuple(weights),
        n_matched=n_match,
        downgraded=downgraded,
        iterations=iterations,
    )


def maxent_discretize(data, n: int) -> DiscreteDistribution:
    """N-point distribution from the maximum-entropy grid method."""
    return maxent_solve(data, n).distribution()
