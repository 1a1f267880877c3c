"""One-period portfolio choice for a CRRA investor under discrete returns.

States are log excess returns; the gross stock return in state n is
``R_n = R_f * exp(x_n)``.  The investor picks the risky share to maximize
expected CRRA utility of portfolio gross return.  The first-order
condition is strictly decreasing on the feasible set, so the optimum is
the unique root of a monotone function and bisection is exact and
deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NotPositiveDefiniteError, NumericalError, UnboundedError
from .moments import GaussianMixture, mixture_moments, standardized_mixture
from .quadrature import DiscreteDistribution, golub_welsch

__all__ = [
    "PortfolioProblem",
    "PortfolioSolution",
    "state_returns",
    "crra_objective",
    "solve_portfolio",
    "theoretical_portfolio",
]

_BISECT_RTOL = 1e-12
_BOUNDARY_MARGIN = 1e-12


def state_returns(dist: DiscreteDistribution, risk_free: float) -> np.ndarray:
    """Gross stock return per state: ``R_f * exp(x_n)``."""
    if not (math.isfinite(risk_free) and risk_free > 0.0):
        raise InputError(f"risk-free rate must be positive, got {risk_free}")
    return risk_free * np.exp(np.asarray(dist.nodes, dtype=float))


@dataclass(frozen=True)
class PortfolioProblem:
    """Discrete log-excess-return distribution plus preferences."""

    dist: DiscreteDistribution
    risk_free: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.risk_free) and self.risk_free > 0.0):
            raise InputError(f"risk-free rate must be positive, got {self.risk_free}")
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise InputError(f"risk aversion must be positive, got {self.gamma}")


@dataclass(frozen=True)
class PortfolioSolution:
    """Optimal risky share with solver diagnostics.

    ``degenerate`` marks the flat-objective case (every state return
    equals the risk-free rate), where the share is fixed at zero by
    convention.  ``foc_residual`` and ``foc_scale`` report the first-order
    condition at the optimum and the sum of its absolute terms.
    """

    theta: float
    degenerate: bool = False
    foc_residual: float = 0.0
    foc_scale: float = 0.0


def _portfolio_terms(problem: PortfolioProblem):
    returns = state_returns(problem.dist, problem.risk_free)
    excess = tuple(float(r - problem.risk_free) for r in returns)
    weights = problem.dist.weights
    return weights, excess


def crra_objective(problem: PortfolioProblem, theta: float) -> float:
    """Expected CRRA utility of gross portfolio return at risky share theta.

    Log utility is the exact limit at unit risk aversion.  Raises
    :class:`InputError` when some state's portfolio return is not positive.
    """
    weights, excess = _portfolio_terms(problem)
    rf, gamma = problem.risk_free, problem.gamma
    wealth = [rf + theta * d for d in excess]
    if min(wealth) <= 0.0:
        raise InputError(
            f"risky share {theta} is infeasible: some state's portfolio return is <= 0"
        )
    if gamma == 1.0:
        return math.fsum(w * math.log(v) for w, v in zip(weights, wealth))
    p = 1.0 - gamma
    return math.fsum(w * v**p for w, v in zip(weights, wealth)) / p


def _make_foc(weights, excess, rf: float, gamma: float):
    """Marginal expected utility of the risky share, as a scalar function.

    Strictly decreasing on the feasible interval; diverges to -inf/+inf
    at the upper/lower feasibility boundary.  Overflow near a boundary is
    resolved by the sign of the binding state's term.
    """
    neg_gamma = -gamma
    pairs = tuple(zip(weights, excess))

    def foc(theta: float) -> float:
        try:
            return math.fsum(
                w * d * (rf + theta * d) ** neg_gamma for w, d in pairs
            )
        except OverflowError:
            _, d_bind = min(pairs, key=lambda p: rf + theta * p[1])
            return math.inf if d_bind > 0.0 else -math.inf

    return foc


def solve_portfolio(problem: PortfolioProblem) -> PortfolioSolution:
    """Unique root of the first-order condition by bracketed bisection.

    The feasible interval keeps every state's portfolio return positive;
    a sign change is verified by exponential bracket growth from zero
    before refinement.  If every excess return has the same sign the
    problem has no finite optimum (:class:`UnboundedError`); if all are
    zero the objective is flat and the zero share is returned with the
    degenerate flag set.
    """
    weights, excess = _portfolio_terms(problem)
    rf, gamma = problem.risk_free, problem.gamma
    d_min, d_max = min(excess), max(excess)
    if max(abs(d_min), abs(d_max)) <= 1e-14 * rf:
        return PortfolioSolution(theta=0.0, degenerate=True)
    if d_min >= 0.0 or d_max <= 0.0:
        raise UnboundedError(
            "all state returns lie on one side of the risk-free rate; "
            "expected utility has no interior maximum"
        )
    upper = -rf / d_min  # > 0: wipe-out leverage against the worst state
    lower = -rf / d_max  # < 0: wipe-out short position against the best state
    margin_up = min(_BOUNDARY_MARGIN * max(1.0, abs(upper)), 0.5 * upper)
    margin_dn = min(_BOUNDARY_MARGIN * max(1.0, abs(lower)), 0.5 * abs(lower))
    foc = _make_foc(weights, excess, rf, gamma)

    f0 = foc(0.0)
    if f0 == 0.0:
        theta = 0.0
    else:
        if f0 > 0.0:
            lo, hi = _expand_bracket(foc, 0.0, upper - margin_up)
        else:
            neg_lo, neg_hi = _expand_bracket(
                lambda t: -foc(-t), 0.0, -(lower + margin_dn)
            )
            lo, hi = -neg_hi, -neg_lo
        theta = _bisect(foc, lo, hi)
    residual = foc(theta)
    scale = math.fsum(
        abs(w * d) * (rf + theta * d) ** -gamma for w, d in zip(weights, excess)
    )
    return PortfolioSolution(
        theta=theta, degenerate=False, foc_residual=residual, foc_scale=scale
    )


def _expand_bracket(func, start: float, limit: float):
    """Grow [start, b] geometrically toward limit until func changes sign.

    Assumes func(start) > 0 and func -> -inf as b -> limit.
    """
    step = min(1.0, 0.5 * (limit - start))
    prev = start
    for k in range(200):
        b = min(limit, start + step * 2.0**k)
        if func(b) <= 0.0:
            return prev, b
        prev = b
        if b >= limit:
            break
    raise NumericalError("failed to bracket the first-order condition root")


def _bisect(func, lo: float, hi: float) -> float:
    """Bisection on a decreasing function with func(lo) > 0 >= func(hi)."""
    while hi - lo > _BISECT_RTOL * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if func(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def theoretical_portfolio(
    mix: GaussianMixture, risk_free: float, gamma: float, *, nodes: int = 11
) -> float:
    """Optimal risky share when log excess returns follow a known mixture.

    The mixture is discretized by an 11-point moment-based quadrature rule
    (standardized first for conditioning, nodes mapped back), and the
    resulting discrete problem is solved exactly.  A mixture supported on
    fewer points than requested is recovered exactly with its own support
    size.
    """
    transform, std_mix = standardized_mixture(mix)
    ms = mixture_moments(std_mix, 2 * nodes)
    n = nodes
    for _ in range(nodes):
        try:
            rule = golub_welsch(ms, n)
            break
        except NotPositiveDefiniteError as exc:
            if exc.pivot <= 1:
                raise
            n = exc.pivot - 1
    dist = DiscreteDistribution(
        nodes=tuple(transform.to_original(np.asarray(rule.nodes))),
        weights=rule.weights,
    )
    solution = solve_portfolio(PortfolioProblem(dist=dist, risk_free=risk_free, gamma=gamma))
    return solution.theta
