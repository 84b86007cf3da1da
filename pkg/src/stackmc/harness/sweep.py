"""Repeated-trial MSE sweeps comparing MC, fit-to-all and StackMC."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..distributions import DistributionSpec, parse_distribution, sample
from ..errors import ConfigError, NotAvailableError, ParseError
from ..estimators import DEFAULT_C_GUARD, DEFAULT_K, Dataset, StackReport, stackmc_estimate
from ..fitters import FitterSpec, parse_fitter
from ..rng import derive_seed, generator
from ..testfunctions import get_function, reference_truth


@dataclass(frozen=True)
class ExperimentConfig:
    dist: str
    fitter: str = "poly(3)"
    fn: Optional[str] = None
    data: Optional[str] = None  # CSV of x1..xD,f; trials subsample it without replacement
    k: int = DEFAULT_K
    c_guard: float = DEFAULT_C_GUARD
    n_values: tuple = (50,)
    trials: int = 2000
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))


@dataclass(frozen=True)
class ResultRow:
    n: int
    trial: int
    seed: int
    f_hat_mc: float
    f_hat_fit: float
    f_hat_smc: float
    alpha: float
    rho: float
    guard_triggered: bool


ROW_FIELDS = tuple(ResultRow.__dataclass_fields__)


@dataclass(frozen=True)
class SummaryRow:
    n: int
    mse_mc: float
    mse_fit: float
    mse_smc: float
    guard_rate: float
    median_se_mc: float
    median_se_fit: float
    median_se_smc: float
    mean_mc: float
    mean_fit: float
    mean_smc: float
    std_mc: float
    std_fit: float
    std_smc: float
    trials: int
    truth: float


SUMMARY_FIELDS = tuple(SummaryRow.__dataclass_fields__)


@dataclass
class _Problem:
    dist: DistributionSpec
    spec: FitterSpec
    truth: float
    fn: object = None
    pool: Optional[Dataset] = None


def resolve(config: ExperimentConfig) -> _Problem:
    """Parse and check a config; raises ConfigError before any trial runs."""
    from .io import ingest_samples

    if (config.fn is None) == (config.data is None):
        raise ConfigError("give exactly one of a function name or a data file")
    try:
        dist = parse_distribution(config.dist)
        spec = parse_fitter(config.fitter, dist.dims)
    except ParseError as exc:
        raise ConfigError(str(exc)) from exc
    if config.trials < 1:
        raise ConfigError(f"trials must be >= 1, got {config.trials}")
    if config.k < 2:
        raise ConfigError(f"k must be >= 2, got {config.k}")
    if not config.n_values:
        raise ConfigError("no sample counts given")
    P = spec.n_params
    for n in config.n_values:
        if n < config.k or n - math.ceil(n / config.k) < P:
            raise ConfigError(
                f"n={n} with k={config.k} leaves {n - math.ceil(n / config.k)} training points, "
                f"fewer than the {P} parameters of {spec}"
            )

    if config.fn is not None:
        try:
            fn = get_function(config.fn)
            truth = reference_truth(fn, dist).value
        except NotAvailableError as exc:
            raise ConfigError(str(exc)) from exc
        return _Problem(dist, spec, truth, fn=fn)

    try:
        pool = ingest_samples(config.data)
    except (OSError, ParseError) as exc:
        raise ConfigError(str(exc)) from exc
    if pool.dims != dist.dims:
        raise ConfigError(f"data file has {pool.dims} input columns but distribution has {dist.dims}")
    if max(config.n_values) > pool.n:
        raise ConfigError(f"cannot draw {max(config.n_values)} samples from a file of {pool.n} rows")
    # the full file's mean stands in for the unknown truth
    return _Problem(dist, spec, float(np.mean(pool.values)), pool=pool)


def trial_dataset(problem: _Problem, n: int, seed: int) -> Dataset:
    if problem.pool is not None:
        idx = generator(seed, "rows").choice(problem.pool.n, size=n, replace=False)
        return Dataset(problem.pool.points[idx], problem.pool.values[idx])
    x = sample(problem.dist, n, seed).points
    return Dataset(x, problem.fn(x))


def run_trial(config: ExperimentConfig, problem: _Problem, n: int, trial: int) -> ResultRow:
    seed = derive_seed(config.seed, n, trial)
    data = trial_dataset(problem, n, seed)
    rep = stackmc_estimate(data, problem.dist, problem.spec, config.k, config.c_guard, seed)
    return ResultRow(
        n, trial, seed, rep.f_hat_mc, rep.f_hat_fit, rep.f_hat_smc,
        rep.alpha, rep.rho, rep.guard_triggered,
    )


_worker_state = {}


def _init_worker(config):
    _worker_state["config"] = config
    _worker_state["problem"] = resolve(config)


def _worker(job):
    return run_trial(_worker_state["config"], _worker_state["problem"], *job)


def summarize(rows, truth: float) -> list[SummaryRow]:
    by_n = {}
    for r in rows:
        by_n.setdefault(r.n, []).append(r)
    out = []
    for n in sorted(by_n):
        group = by_n[n]
        est = np.array([[r.f_hat_mc, r.f_hat_fit, r.f_hat_smc] for r in group])
        se = (est - truth) ** 2
        mse = se.mean(axis=0)
        med = np.median(se, axis=0)
        mean = est.mean(axis=0)
        std = est.std(axis=0, ddof=1) if len(group) > 1 else np.zeros(3)
        guard = float(np.mean([r.guard_triggered for r in group]))
        out.append(SummaryRow(n, *mse, guard, *med, *mean, *std, len(group), truth))
    return out


def run_sweep(config: ExperimentConfig, workers: int = 1):
    """Run every (n, trial) pair; returns (rows sorted by n then trial, per-n summary).

    Each trial draws from its own child seed of (root seed, n, trial), so
    results do not depend on the worker count or on which n values are swept.
    """
    problem = resolve(config)
    jobs = [(n, t) for n in config.n_values for t in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(config,)) as ex:
            rows = list(ex.map(_worker, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        rows = [run_trial(config, problem, n, t) for n, t in jobs]
    rows.sort(key=lambda r: (r.n, r.trial))
    return rows, summarize(rows, problem.truth)


@dataclass(frozen=True)
class StdEstimate:
    mean: float
    std: float
    clipped: bool  # E[f^2] - E[f]^2 came out negative and was set to 0
    first: StackReport = field(repr=False)
    second: StackReport = field(repr=False)


def estimate_std(dataset: Dataset, dist, spec, k=DEFAULT_K, c_guard=DEFAULT_C_GUARD, seed=0, **kwargs):
    """Mean and standard deviation of f from two StackMC runs, on f and on f**2."""
    first = stackmc_estimate(dataset, dist, spec, k, c_guard, seed, **kwargs)
    second = stackmc_estimate(dataset.with_values(dataset.values ** 2), dist, spec, k, c_guard, seed, **kwargs)
    mean = first.f_hat_smc
    var = second.f_hat_smc - mean * mean
    clipped = var < 0
    if clipped:
        warnings.warn("second-moment estimate below squared mean; reporting std 0", RuntimeWarning)
        var = 0.0
    return StdEstimate(mean, math.sqrt(var), clipped, first, second)
