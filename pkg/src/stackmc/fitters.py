"""Additive linear-basis surrogates g(x).

Feature order is fixed so coefficient vectors are comparable across runs::

    [1,
     phi_1(x_1), ..., phi_m(x_1),      # block for dimension 1
     ...,
     phi_1(x_D), ..., phi_m(x_D)]      # block for dimension D

Polynomial(order) uses x, x**2, ..., x**order in each block.  Fourier(h) uses
cos(x), ..., cos(h x) followed by sin(x), ..., sin(h x), with unit angular
frequency on the raw coordinates (no rescaling).
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .distributions import Basis, DistributionSpec, basis_expectation, sample
from .errors import InsufficientDataError, NumericError, ParameterError, ParseError, ShapeError

RCOND = 1e-12


@dataclass(frozen=True)
class FitterSpec:
    dims: int
    family: str  # "poly" or "fourier"
    order: int

    def __post_init__(self):
        if self.family not in ("poly", "fourier"):
            raise ParameterError(f"unknown fitter family {self.family!r}")
        if self.dims < 1 or self.order < 1:
            raise ParameterError(f"fitter needs dims >= 1 and order >= 1, got {self.dims}, {self.order}")

    @property
    def bases(self) -> tuple:
        """Per-dimension basis functions, in feature order."""
        if self.family == "poly":
            return tuple(Basis("mono", m) for m in range(1, self.order + 1))
        cos = tuple(Basis("cos", m) for m in range(1, self.order + 1))
        sin = tuple(Basis("sin", m) for m in range(1, self.order + 1))
        return cos + sin

    @property
    def n_params(self) -> int:
        return 1 + self.dims * len(self.bases)

    def with_dims(self, dims: int) -> "FitterSpec":
        return FitterSpec(dims, self.family, self.order)

    def __str__(self):
        return f"{self.family}({self.order})"


def polynomial(dims: int, order: int = 3) -> FitterSpec:
    return FitterSpec(dims, "poly", order)


def fourier(dims: int, harmonics: int = 3) -> FitterSpec:
    return FitterSpec(dims, "fourier", harmonics)


@dataclass(frozen=True)
class FitModel:
    spec: FitterSpec
    beta: np.ndarray

    def __call__(self, points):
        return predict(self, points)


def design_matrix(spec: FitterSpec, points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[1] != spec.dims:
        raise ShapeError(f"expected (N, {spec.dims}) points, got shape {x.shape}")
    bases = spec.bases
    A = np.empty((x.shape[0], spec.n_params))
    A[:, 0] = 1.0
    col = 1
    for d in range(spec.dims):
        for b in bases:
            A[:, col] = b(x[:, d])
            col += 1
    return A


def feature_row(spec: FitterSpec, point) -> np.ndarray:
    x = np.asarray(point, dtype=float)
    if x.shape != (spec.dims,):
        raise ShapeError(f"expected a point with {spec.dims} coordinates, got shape {x.shape}")
    return design_matrix(spec, x[None, :])[0]


def _solve(A, y, ridge):
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > RCOND * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    uty = U.T @ y
    coef = np.zeros_like(s)
    sk = s[keep]
    coef[keep] = uty[keep] * (sk / (sk * sk + ridge)) if ridge else uty[keep] / sk
    return Vt.T @ coef


def fit(spec: FitterSpec, points, values, ridge: float = 0.0) -> FitModel:
    """Least-squares coefficients via SVD (minimum-norm when rank deficient).

    Singular values below 1e-12 of the largest are discarded.  ``ridge`` adds
    an L2 penalty; it is 0 by default.
    """
    return fit_design(spec, design_matrix(spec, points), values, ridge)


def fit_design(spec: FitterSpec, A: np.ndarray, values, ridge: float = 0.0) -> FitModel:
    """Same as :func:`fit` but from a precomputed design matrix."""
    y = np.asarray(values, dtype=float)
    if y.shape != (A.shape[0],):
        raise ShapeError(f"{A.shape[0]} points but values have shape {y.shape}")
    if A.shape[0] < spec.n_params:
        raise InsufficientDataError(
            f"{A.shape[0]} points cannot fit {spec.n_params} parameters of {spec}; "
            "reduce the fitter order or the number of folds"
        )
    if ridge < 0:
        raise ParameterError(f"ridge must be >= 0, got {ridge}")
    beta = _solve(A, y, ridge)
    if not np.all(np.isfinite(beta)):
        raise NumericError("least-squares fit produced non-finite coefficients")
    return FitModel(spec, beta)


def predict(model: FitModel, points) -> np.ndarray | float:
    """beta . feature_row(x).  A single point (D,) returns a float."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        return float(feature_row(model.spec, x) @ model.beta)
    return design_matrix(model.spec, x) @ model.beta


def analytic_expectation(model: FitModel, dist: DistributionSpec) -> float:
    """Exact E[g(x)] under ``dist``: beta_0 + sum of beta times E[basis] per dimension."""
    spec = model.spec
    if dist.dims != spec.dims:
        raise ShapeError(f"fitter has {spec.dims} dims but distribution has {dist.dims}")
    weights = np.empty(spec.n_params)
    weights[0] = 1.0
    bases = spec.bases
    col = 1
    for marginal in dist.marginals:
        for b in bases:
            weights[col] = basis_expectation(marginal, b)
            col += 1
    return float(weights @ model.beta)


def default_n_g(n: int) -> int:
    return max(100_000, 100 * n)


def mc_expectation(model: FitModel, dist: DistributionSpec, n_g: int, seed: int) -> float:
    """Monte Carlo estimate of E[g(x)] from ``n_g`` fresh draws of ``dist``.

    The constant coefficient is added exactly, so a constant model returns
    its constant with no sampling error.
    """
    if n_g < 1:
        raise ParameterError(f"n_g must be >= 1, got {n_g}")
    spec = model.spec
    if dist.dims != spec.dims:
        raise ShapeError(f"fitter has {spec.dims} dims but distribution has {dist.dims}")
    total = 0.0
    chunk = 200_000
    x = sample(dist, n_g, seed).points
    for start in range(0, n_g, chunk):
        A = design_matrix(spec, x[start:start + chunk])
        total += float(np.sum(A[:, 1:] @ model.beta[1:]))
    return float(model.beta[0]) + total / n_g


_FITTER = re.compile(r"^\s*(poly|polynomial|fourier)\s*\(\s*(\d+)\s*\)\s*$")


def parse_fitter(text: str, dims: int) -> FitterSpec:
    """Parse ``poly(3)`` / ``fourier(3)`` for a ``dims``-dimensional input."""
    m = _FITTER.match(text.lower())
    if m is None:
        raise ParseError(f"cannot parse fitter {text!r} (expected poly(n) or fourier(n))")
    family = "poly" if m.group(1).startswith("poly") else "fourier"
    try:
        return FitterSpec(dims, family, int(m.group(2)))
    except ParameterError as exc:
        raise ParseError(str(exc)) from exc
