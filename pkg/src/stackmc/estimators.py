"""Integral estimators: plain MC, importance sampling, fit-to-all, and StackMC.

StackMC uses k-fold cross-validated surrogates as control variates.  Each
fold's surrogate g_i is trained on the other folds and evaluated at its own
held-out points; every sample therefore gets exactly one held-out
prediction.  Those N (prediction, value) pairs set the control-variate weight
``alpha = rho * sigma_f / sigma_g``.  Fold i then contributes

    alpha * E[g_i] + mean over its test points of (f - alpha * g_i)

and the estimate is the unweighted mean over folds.  A guard falls back to
the plain MC mean when some E[g_i] sits more than ``c_guard`` standard errors
from it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import distributions as dists
from .distributions import DistributionSpec
from .errors import (
    DegenerateWeightError,
    InsufficientDataError,
    NumericError,
    ParameterError,
    ShapeError,
    UnsupportedIntegralError,
)
from .fitters import (
    FitModel,
    FitterSpec,
    analytic_expectation,
    default_n_g,
    design_matrix,
    fit,
    fit_design,
    mc_expectation,
)
from .rng import derive_seed, generator

DEFAULT_K = 10
DEFAULT_C_GUARD = 5.0


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray
    values: np.ndarray
    q: Optional[DistributionSpec] = None  # sampling density, when not the target density

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        vals = np.asarray(self.values, dtype=float)
        if pts.ndim != 2 or vals.shape != (pts.shape[0],):
            raise ShapeError(f"points {pts.shape} and values {vals.shape} do not match")
        if not np.all(np.isfinite(vals)):
            raise NumericError("dataset values must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    def with_values(self, values) -> "Dataset":
        return Dataset(self.points, values, self.q)


@dataclass(frozen=True)
class FoldPartition:
    k: int
    test_indices: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "test_indices", tuple(np.asarray(t, dtype=np.intp) for t in self.test_indices)
        )
        if len(self.test_indices) != self.k:
            raise ParameterError(f"partition has {len(self.test_indices)} folds, expected {self.k}")

    def validate(self, n: int):
        allidx = np.concatenate(self.test_indices) if self.k else np.empty(0, np.intp)
        if allidx.size != n or not np.array_equal(np.sort(allidx), np.arange(n)):
            raise ParameterError(f"fold test sets must be disjoint and cover 0..{n - 1}")
        if any(t.size == 0 for t in self.test_indices):
            raise ParameterError("every fold needs at least one test point")

    @property
    def sizes(self):
        return [t.size for t in self.test_indices]


@dataclass(frozen=True)
class AlphaStats:
    mu_f: float
    mu_g: float
    sigma_f: float
    sigma_g: float
    cov_fg: float
    rho: float
    alpha: float
    constant_f: bool = False


@dataclass(frozen=True)
class FoldResult:
    g_hat: float
    correction: float
    corrected: float
    likelihood: float
    beta: np.ndarray = field(repr=False)
    test_indices: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class StackReport:
    f_hat_mc: float
    f_hat_fit: float
    f_hat_smc: float
    alpha_stats: AlphaStats
    per_fold: tuple
    eim: float
    guard_triggered: bool
    k: int
    n: int
    seed: int
    heldout_pred: np.ndarray = field(repr=False)

    @property
    def alpha(self):
        return self.alpha_stats.alpha

    @property
    def rho(self):
        return self.alpha_stats.rho

    def as_dict(self) -> dict:
        s = self.alpha_stats
        out = {
            "n": self.n,
            "k": self.k,
            "seed": self.seed,
            "f_hat_mc": self.f_hat_mc,
            "f_hat_fit": self.f_hat_fit,
            "f_hat_smc": self.f_hat_smc,
            "alpha": s.alpha,
            "rho": s.rho,
            "mu_f": s.mu_f,
            "mu_g": s.mu_g,
            "sigma_f": s.sigma_f,
            "sigma_g": s.sigma_g,
            "cov_fg": s.cov_fg,
            "eim": self.eim,
            "guard_triggered": self.guard_triggered,
        }
        for i, fr in enumerate(self.per_fold, 1):
            out[f"fold{i}_g_hat"] = fr.g_hat
            out[f"fold{i}_correction"] = fr.correction
            out[f"fold{i}_corrected"] = fr.corrected
            out[f"fold{i}_L"] = fr.likelihood
        return out

    def to_text(self) -> str:
        lines = []
        for key, v in self.as_dict().items():
            if isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, float):
                v = format(v, ".17g")
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"


def mc_estimate(values) -> tuple[float, float, float]:
    """(mean, sample std with 1/(N-1), error in the mean sigma/sqrt(N))."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise InsufficientDataError(f"need at least 2 values for a standard deviation, got {v.size}")
    if np.all(v == v[0]):
        return float(v[0]), 0.0, 0.0
    sigma = float(np.std(v, ddof=1))
    return float(np.mean(v)), sigma, sigma / math.sqrt(v.size)


def importance_weights(points, p: DistributionSpec, q: DistributionSpec) -> np.ndarray:
    """p(x)/q(x) at every point; every q(x) must be positive."""
    qx = np.atleast_1d(dists.pdf(q, np.atleast_2d(points)))
    bad = np.flatnonzero(~(qx > 0))
    if bad.size:
        raise DegenerateWeightError(f"sampling density is zero at sample {int(bad[0])}")
    px = np.atleast_1d(dists.pdf(p, np.atleast_2d(points)))
    return px / qx


def is_estimate(dataset: Dataset, p: DistributionSpec, q: DistributionSpec) -> float:
    w = importance_weights(dataset.points, p, q)
    return float(np.mean(dataset.values * w))


def fit_all_estimate(dataset: Dataset, spec: FitterSpec, dist: DistributionSpec) -> float:
    """E[g] of a single surrogate fit to every sample."""
    return analytic_expectation(fit(spec, dataset.points, dataset.values), dist)


def partition_folds(n: int, k: int, seed: int) -> FoldPartition:
    """Random k-fold split; the first n mod k folds get one extra point."""
    if k < 2 or k > n:
        raise ParameterError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = generator(seed, "folds").permutation(n)
    return FoldPartition(k, tuple(np.sort(t) for t in np.array_split(perm, k)))


def compute_alpha(heldout_pred, truths) -> AlphaStats:
    """Control-variate statistics from held-out predictions and true values."""
    g = np.asarray(heldout_pred, dtype=float)
    f = np.asarray(truths, dtype=float)
    if g.shape != f.shape or g.ndim != 1:
        raise ShapeError(f"predictions {g.shape} and truths {f.shape} differ")
    n = f.size
    if n < 2:
        raise InsufficientDataError("need at least 2 held-out pairs")
    mu_f = float(np.mean(f))
    mu_g = float(np.mean(g))
    df = f - mu_f
    dg = g - mu_g
    sigma_f = math.sqrt(float(df @ df) / (n - 1))
    sigma_g = math.sqrt(float(dg @ dg) / (n - 1))
    cov = float(df @ dg) / (n - 1)
    constant_f = bool(np.all(f == f[0]))
    if constant_f:
        sigma_f = 0.0
    if sigma_g > 0 and sigma_f > 0:
        rho = cov / (sigma_f * sigma_g)
        alpha = rho * sigma_f / sigma_g
    else:
        rho = 0.0
        alpha = 0.0
    return AlphaStats(mu_f, mu_g, sigma_f, sigma_g, cov, rho, alpha, constant_f)


def eim_guard(g_hats, f_hat_mc: float, eim: float, c_guard: float = DEFAULT_C_GUARD):
    """Fold likelihoods L_i = |g_hat_i - f_hat_mc| / eim and the fallback decision."""
    g = np.asarray(g_hats, dtype=float)
    dev = np.abs(g - f_hat_mc)
    if eim > 0:
        L = dev / eim
        return bool(np.max(L) > c_guard), L
    L = np.where(dev > 0, np.inf, 0.0)
    return bool(np.any(dev > 0)), L


Expectation = Callable[[FitModel, DistributionSpec], float]


def _run_stack(
    points,
    values,
    integ_dist,
    spec,
    k,
    c_guard,
    seed,
    partition,
    alpha,
    expectation,
    n_g,
    f_hat_mc_and_stats,
):
    n = values.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {n}")
    if spec.dims != points.shape[1] or integ_dist.dims != points.shape[1]:
        raise ShapeError(
            f"data has {points.shape[1]} dims, fitter {spec.dims}, distribution {integ_dist.dims}"
        )
    if partition is None:
        partition = partition_folds(n, k, seed)
    else:
        partition.validate(n)
    k = partition.k
    P = spec.n_params
    smallest_train = n - max(partition.sizes)
    if smallest_train < P:
        raise InsufficientDataError(
            f"fold training set of {smallest_train} points cannot fit {P} parameters of {spec}"
        )

    if expectation is None:
        def expectation(model, dist, _i):
            try:
                return analytic_expectation(model, dist)
            except UnsupportedIntegralError:
                ng = n_g if n_g is not None else default_n_g(n)
                return mc_expectation(model, dist, ng, derive_seed(seed, "g_hat", _i))
    else:
        user = expectation
        expectation = lambda model, dist, _i: user(model, dist)

    A = design_matrix(spec, points)
    pred = np.empty(n)
    models = []
    g_hats = []
    for i, test in enumerate(partition.test_indices):
        train = np.ones(n, dtype=bool)
        train[test] = False
        try:
            model = fit_design(spec, A[train], values[train])
        except NumericError as exc:
            raise NumericError(f"fold {i + 1}: {exc}") from exc
        pred[test] = A[test] @ model.beta
        g_hat = float(expectation(model, integ_dist, i))
        if not (np.all(np.isfinite(pred[test])) and math.isfinite(g_hat)):
            raise NumericError(f"fold {i + 1}: non-finite surrogate output")
        models.append(model)
        g_hats.append(g_hat)

    stats = compute_alpha(pred, values)
    if alpha is not None:
        stats = AlphaStats(
            stats.mu_f, stats.mu_g, stats.sigma_f, stats.sigma_g, stats.cov_fg, stats.rho,
            float(alpha), stats.constant_f,
        )
    a = stats.alpha
    f_hat_mc, sigma_f, eim = f_hat_mc_and_stats

    folds = []
    corrected = []
    triggered, L = eim_guard(g_hats, f_hat_mc, eim, c_guard)
    for i, test in enumerate(partition.test_indices):
        correction = float(np.mean(values[test] - a * pred[test]))
        c = a * g_hats[i] + correction
        corrected.append(c)
        folds.append(FoldResult(g_hats[i], correction, c, float(L[i]), models[i].beta, test))

    if triggered or stats.constant_f:
        f_hat_smc = f_hat_mc
    else:
        f_hat_smc = float(np.mean(corrected))

    full = fit_design(spec, A, values)
    f_hat_fit = float(expectation(full, integ_dist, k))

    return StackReport(
        f_hat_mc=f_hat_mc,
        f_hat_fit=f_hat_fit,
        f_hat_smc=f_hat_smc,
        alpha_stats=stats,
        per_fold=tuple(folds),
        eim=eim,
        guard_triggered=triggered,
        k=k,
        n=n,
        seed=seed,
        heldout_pred=pred,
    )


def stackmc_estimate(
    dataset: Dataset,
    dist: DistributionSpec,
    spec: FitterSpec,
    k: int = DEFAULT_K,
    c_guard: float = DEFAULT_C_GUARD,
    seed: int = 0,
    *,
    partition: FoldPartition | None = None,
    alpha: float | None = None,
    expectation: Expectation | None = None,
    n_g: int | None = None,
) -> StackReport:
    """StackMC estimate of E_p[f] from samples drawn from ``dist``.

    ``partition`` injects a fixed fold assignment instead of a seeded random
    one.  ``alpha`` pins the control-variate weight.  ``expectation``
    replaces the surrogate integral (default: closed form, falling back to a
    Monte Carlo integral with ``n_g`` draws when no closed form exists).
    """
    values = dataset.values
    return _run_stack(
        dataset.points, values, dist, spec, k, c_guard, seed,
        partition, alpha, expectation, n_g, mc_estimate(values),
    )


def stackmc_is_estimate(
    dataset: Dataset,
    p: DistributionSpec,
    q: DistributionSpec,
    spec: FitterSpec,
    k: int = DEFAULT_K,
    c_guard: float = DEFAULT_C_GUARD,
    seed: int = 0,
    *,
    partition: FoldPartition | None = None,
    alpha: float | None = None,
    expectation: Expectation | None = None,
    n_g: int | None = None,
) -> StackReport:
    """StackMC for samples drawn from ``q`` targeting E_p[f].

    The surrogate models f p / q and is integrated against q; the weighted
    values replace f everywhere, including the MC baseline.
    """
    w = importance_weights(dataset.points, p, q)
    weighted = dataset.values * w
    return _run_stack(
        dataset.points, weighted, q, spec, k, c_guard, seed,
        partition, alpha, expectation, n_g, mc_estimate(weighted),
    )
