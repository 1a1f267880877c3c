"""Monte Carlo accuracy study for the competing discretizers.

For each (sample size, node count) the harness draws samples from a
known Gaussian-mixture law of log excess returns, discretizes them with
each method, solves the portfolio problem for each risk aversion, and
reports the relative bias and mean absolute error of the resulting risky
share against the share computed from the true mixture.

Reproducibility: every replication draws from its own counter-based
substream keyed by (seed, sample size, replication index), and sampling
is inverse-CDF on uniforms, so reports are bit-identical across runs and
across serial/parallel execution on one platform.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from multiprocessing import get_context

import numpy as np
from scipy.special import ndtri

from .baselines import gauss_hermite_discretize, maxent_discretize
from .errors import InputError, NpgqError
from .moments import GaussianMixture
from .portfolio import PortfolioProblem, solve_portfolio, theoretical_portfolio
from .quadrature import discretize_data

__all__ = [
    "DEFAULT_MIXTURE",
    "DEFAULT_RISK_FREE",
    "METHOD_LABELS",
    "ExperimentConfig",
    "CellResult",
    "ExperimentReport",
    "sample_mixture",
    "replication_rng",
    "run_cell",
    "run_experiment",
    "parse_config",
    "format_config",
]

# Two-component mixture calibrated to annual U.S. log excess stock
# returns; the default ground truth for the accuracy study.
DEFAULT_MIXTURE = GaussianMixture(
    proportions=(0.1392, 0.8608),
    means=(-0.2242, 0.1064),
    stds=(0.2164, 0.1453),
)

# Average real gross risk-free rate from the same annual data.
DEFAULT_RISK_FREE = 1.0045

METHOD_LABELS = ("np-gq", "gauss-hermite", "np-me")


def _discretize_np_gq(data, n):
    return discretize_data(data, n)


_DISCRETIZERS = {
    "np-gq": _discretize_np_gq,
    "gauss-hermite": gauss_hermite_discretize,
    "np-me": maxent_discretize,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full specification of one accuracy-study run."""

    mixture: GaussianMixture = DEFAULT_MIXTURE
    risk_free: float = DEFAULT_RISK_FREE
    sample_sizes: tuple[int, ...] = (100, 1000, 10000)
    node_counts: tuple[int, ...] = (3, 5, 7, 9)
    gammas: tuple[float, ...] = (2.0, 4.0, 6.0)
    methods: tuple[str, ...] = METHOD_LABELS
    replications: int = 1000
    seed: int = 20170927

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(t) for t in self.sample_sizes))
        object.__setattr__(self, "node_counts", tuple(int(n) for n in self.node_counts))
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replications < 1:
            raise InputError("replications must be >= 1")
        if any(t < 2 for t in self.sample_sizes):
            raise InputError("sample sizes must be >= 2")
        if any(n < 1 for n in self.node_counts):
            raise InputError("node counts must be >= 1")
        if any(g <= 0 for g in self.gammas):
            raise InputError("risk aversions must be positive")
        unknown = [m for m in self.methods if m not in _DISCRETIZERS]
        if unknown:
            raise InputError(
                f"unknown methods {unknown}; available: {sorted(_DISCRETIZERS)}"
            )
        if len(set(self.methods)) != len(self.methods):
            raise InputError("duplicate method labels")


@dataclass(frozen=True)
class CellResult:
    """Bias/MAE summary of one (method, T, N, gamma) cell."""

    method: str
    sample_size: int
    node_count: int
    gamma: float
    bias: float
    mae: float
    failures: int
    n_used: int
    bias_se: float
    mae_se: float


@dataclass(frozen=True)
class ExperimentReport:
    """All cells of a run plus the configuration that produced them."""

    config: ExperimentConfig
    theta_star: dict[float, float]
    cells: tuple[CellResult, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        idx = {
            (c.method, c.sample_size, c.node_count, c.gamma): c for c in self.cells
        }
        object.__setattr__(self, "_index", idx)

    def cell(self, method: str, sample_size: int, node_count: int, gamma: float) -> CellResult:
        key = (method, int(sample_size), int(node_count), float(gamma))
        if key not in self._index:
            raise KeyError(f"no cell for {key}")
        return self._index[key]

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("method,T,N,gamma,bias,mae,failures\n")
        for c in self.cells:
            out.write(
                f"{c.method},{c.sample_size},{c.node_count},{c.gamma:.12g},"
                f"{c.bias:.12g},{c.mae:.12g},{c.failures}\n"
            )
        return out.getvalue()

    def format_tables(self) -> str:
        lines: list[str] = []
        lines.append(self._one_table("Relative bias of the optimal risky share", "bias"))
        lines.append("")
        lines.append(self._one_table("Mean absolute error of the optimal risky share", "mae"))
        failing = [c for c in self.cells if c.failures]
        if failing:
            lines.append("")
            lines.append("Excluded replications (discretization or solve failed):")
            for c in failing:
                lines.append(
                    f"  {c.method}  T={c.sample_size}  N={c.node_count}  "
                    f"gamma={c.gamma:g}: {c.failures} of {self.config.replications}"
                )
        return "\n".join(lines) + "\n"

    def _one_table(self, title: str, attr: str) -> str:
        cfg = self.config
        width = 8
        lines = [title]
        head1 = " " * 12
        head2 = f"{'T':>6}{'N':>6}"
        for method in cfg.methods:
            block = width * len(cfg.gammas)
            head1 += f"{method:^{block}}"
            head2 += "".join(f"{'g=' + format(g, 'g'):>{width}}" for g in cfg.gammas)
        lines.append(head1.rstrip())
        lines.append(head2)
        for t in cfg.sample_sizes:
            for n in cfg.node_counts:
                row = f"{t:>6}{n:>6}"
                for method in cfg.methods:
                    for g in cfg.gammas:
                        c = self._index.get((method, t, n, g))
                        val = getattr(c, attr) if c is not None else math.nan
                        row += f"{val:>{width}.3f}" if math.isfinite(val) else f"{'--':>{width}}"
                lines.append(row)
        return "\n".join(lines)


def replication_rng(seed: int, sample_size: int, index: int) -> np.random.Generator:
    """Counter-based generator for one replication's substream.

    Keyed by (seed, sample size, replication index) so that every cell
    sharing a sample size sees the same draws, mirroring a design where
    one simulated data set is handed to all methods.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(int(sample_size), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def sample_mixture(mix: GaussianMixture, size: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. draws from a Gaussian mixture by inverse-CDF sampling.

    Consumes exactly two uniform arrays (component picks, then normal
    quantiles) regardless of the mixture, so the draw sequence is stable
    across mixtures and platforms.
    """
    if size < 1:
        raise InputError(f"sample size must be >= 1, got {size}")
    edges = np.cumsum(np.asarray(mix.proportions))
    comp = np.searchsorted(edges, rng.random(size), side="right")
    comp = np.minimum(comp, len(edges) - 1)
    u = np.clip(rng.random(size), 1e-300, None)
    z = ndtri(u)
    means = np.asarray(mix.means)[comp]
    stds = np.asarray(mix.stds)[comp]
    return means + stds * z


def _theta_hat(method: str, data: np.ndarray, node_count: int,
               risk_free: float, gammas: tuple[float, ...]) -> list[float]:
    """Risky share per gamma for one discretization; NaN rows on failure."""
    try:
        dist = _DISCRETIZERS[method](data, node_count)
    except NpgqError:
        return [math.nan] * len(gammas)
    out = []
    for gamma in gammas:
        try:
            sol = solve_portfolio(
                PortfolioProblem(dist=dist, risk_free=risk_free, gamma=gamma)
            )
            out.append(sol.theta)
        except NpgqError:
            out.append(math.nan)
    return out


def _replication_block(cfg: ExperimentConfig, sample_size: int,
                       start: int, stop: int) -> np.ndarray:
    """theta-hat array of shape (stop-start, methods, node counts, gammas)."""
    shape = (stop - start, len(cfg.methods), len(cfg.node_counts), len(cfg.gammas))
    out = np.empty(shape)
    for i, m in enumerate(range(start, stop)):
        data = sample_mixture(cfg.mixture, sample_size, replication_rng(cfg.seed, sample_size, m))
        for j, method in enumerate(cfg.methods):
            for k, n in enumerate(cfg.node_counts):
                out[i, j, k, :] = _theta_hat(method, data, n, cfg.risk_free, cfg.gammas)
    return out


def _theta_star_table(cfg: ExperimentConfig) -> dict[float, float]:
    try:
        table = {
            g: theoretical_portfolio(cfg.mixture, cfg.risk_free, g) for g in cfg.gammas
        }
    except NpgqError as exc:
        raise InputError(
            f"cannot compute the true optimal share for this configuration: {exc}"
        ) from exc
    zeros = [g for g, v in table.items() if v == 0.0]
    if zeros:
        raise InputError(
            f"true optimal share is zero for gamma={zeros}; relative errors undefined"
        )
    return table


def _summarize(ratios_minus_one: np.ndarray) -> tuple[float, float, int, int, float, float]:
    """bias, mae, failures, n_used, and standard errors from one cell's errors."""
    total = ratios_minus_one.size
    good = ratios_minus_one[np.isfinite(ratios_minus_one)]
    failures = total - good.size
    if good.size == 0:
        return math.nan, math.nan, failures, 0, math.nan, math.nan
    bias = float(np.mean(good))
    mae = float(np.mean(np.abs(good)))
    if good.size > 1:
        bias_se = float(np.std(good, ddof=1) / math.sqrt(good.size))
        mae_se = float(np.std(np.abs(good), ddof=1) / math.sqrt(good.size))
    else:
        bias_se = mae_se = math.nan
    return bias, mae, failures, good.size, bias_se, mae_se


def run_cell(cfg: ExperimentConfig, method: str, sample_size: int,
             node_count: int, gamma: float, theta_star: float | None = None) -> CellResult:
    """Bias and MAE of one (method, T, N, gamma) cell over all replications."""
    if method not in _DISCRETIZERS:
        raise InputError(f"unknown method {method!r}")
    if theta_star is None:
        sub = replace(cfg, gammas=(float(gamma),))
        theta_star = _theta_star_table(sub)[float(gamma)]
    thetas = np.empty(cfg.replications)
    for m in range(cfg.replications):
        data = sample_mixture(cfg.mixture, sample_size, replication_rng(cfg.seed, sample_size, m))
        thetas[m] = _theta_hat(method, data, node_count, cfg.risk_free, (float(gamma),))[0]
    bias, mae, failures, n_used, bias_se, mae_se = _summarize(thetas / theta_star - 1.0)
    return CellResult(
        method=method,
        sample_size=int(sample_size),
        node_count=int(node_count),
        gamma=float(gamma),
        bias=bias,
        mae=mae,
        failures=failures,
        n_used=n_used,
        bias_se=bias_se,
        mae_se=mae_se,
    )


def _grid_tasks(cfg: ExperimentConfig, jobs: int):
    block = max(1, math.ceil(cfg.replications / max(8 * jobs, 1)))
    for t in cfg.sample_sizes:
        for start in range(0, cfg.replications, block):
            yield t, start, min(start + block, cfg.replications)


def _run_task(args):
    cfg, sample_size, start, stop = args
    return sample_size, start, _replication_block(cfg, sample_size, start, stop)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Full grid of cells; failures are excluded per cell, never fatal.

    ``jobs`` > 1 distributes replication blocks over worker processes;
    results are reassembled in replication order, so serial and parallel
    runs produce identical reports.
    """
    if jobs < 1:
        raise InputError("jobs must be >= 1")
    theta_star = _theta_star_table(cfg)
    tasks = [(cfg, t, a, b) for (t, a, b) in _grid_tasks(cfg, jobs)]
    if jobs == 1:
        pieces = [_run_task(task) for task in tasks]
    else:
        with get_context("fork").Pool(processes=jobs) as pool:
            pieces = pool.map(_run_task, tasks, chunksize=1)
    by_size: dict[int, np.ndarray] = {
        t: np.empty((cfg.replications, len(cfg.methods), len(cfg.node_counts), len(cfg.gammas)))
        for t in cfg.sample_sizes
    }
    for sample_size, start, block in pieces:
        by_size[sample_size][start : start + block.shape[0]] = block
    cells = []
    for j, method in enumerate(cfg.methods):
        for t in cfg.sample_sizes:
            for k, n in enumerate(cfg.node_counts):
                for g_idx, gamma in enumerate(cfg.gammas):
                    errors = by_size[t][:, j, k, g_idx] / theta_star[gamma] - 1.0
                    bias, mae, failures, n_used, bias_se, mae_se = _summarize(errors)
                    cells.append(
                        CellResult(
                            method=method,
                            sample_size=t,
                            node_count=n,
                            gamma=gamma,
                            bias=bias,
                            mae=mae,
                            failures=failures,
                            n_used=n_used,
                            bias_se=bias_se,
                            mae_se=mae_se,
                        )
                    )
    return ExperimentReport(config=cfg, theta_star=theta_star, cells=tuple(cells))


# --- flat key=value configuration files ---------------------------------

_LIST_KEYS = {
    "sample_sizes": int,
    "node_counts": int,
    "gammas": float,
    "methods": str,
    "mixture_proportions": float,
    "mixture_means": float,
    "mixture_stds": float,
}
_SCALAR_KEYS = {"seed": int, "replications": int, "risk_free": float}


def parse_config(text: str) -> ExperimentConfig:
    """Build a configuration from flat ``key = value`` lines.

    Lists are comma-separated; ``#`` starts a comment; keys not present
    keep their defaults; unknown keys are rejected.
    """
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise InputError(f"config line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key in _SCALAR_KEYS:
                raw[key] = _SCALAR_KEYS[key](value)
            elif key in _LIST_KEYS:
                conv = _LIST_KEYS[key]
                raw[key] = tuple(conv(v.strip()) for v in value.split(",") if v.strip())
            else:
                raise InputError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise InputError(f"config line {lineno}: bad value for {key!r}: {exc}") from exc
    mix_keys = {"mixture_proportions", "mixture_means", "mixture_stds"}
    if mix_keys & raw.keys():
        if not mix_keys <= raw.keys():
            raise InputError("mixture_* keys must be given together")
        mixture = GaussianMixture(
            proportions=raw.pop("mixture_proportions"),
            means=raw.pop("mixture_means"),
            stds=raw.pop("mixture_stds"),
        )
        raw["mixture"] = mixture
    return ExperimentConfig(**raw)


def format_config(cfg: ExperimentConfig) -> str:
    """Render a configuration in the flat file format."""

    def fmt_list(xs):
        return ", ".join(x if isinstance(x, str) else format(x, "g") for x in xs)

    return (
        f"seed = {cfg.seed}\n"
        f"replications = {cfg.replications}\n"
        f"risk_free = {cfg.risk_free:.12g}\n"
        f"sample_sizes = {fmt_list(cfg.sample_sizes)}\n"
        f"node_counts = {fmt_list(cfg.node_counts)}\n"
        f"gammas = {fmt_list(cfg.gammas)}\n"
        f"methods = {fmt_list(cfg.methods)}\n"
        f"mixture_proportions = {fmt_list(cfg.mixture.proportions)}\n"
        f"mixture_means = {fmt_list(cfg.mixture.means)}\n"
        f"mixture_stds = {fmt_list(cfg.mixture.stds)}\n"
    )
