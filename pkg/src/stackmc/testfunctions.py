"""Analytic objective functions with reference expectations.

``poly1d``       sextic on [-1, 1] used by the 20-sample walkthrough
``poly1d_prose`` the same sextic scaled by 3, meant for uniform(-3,3)
``rosenbrock``   D-dimensional Rosenbrock chain
``btbutterfly``  chain sum of a pluggable pair function h(x_i, x_{i+1})

The default ``h`` for ``btbutterfly`` is a stand-in with the same role (a
chained function a low-order additive fitter cannot represent well), not a
reconstruction of any particular reference surface.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .distributions import Basis, DistributionSpec, basis_expectation
from .errors import NotAvailableError, ParameterError, ShapeError, UnsupportedIntegralError

POLY1D_COEFFS = (0.3, -4.81, 19.05, -6.47, -30.43, 1.2, 1.0)  # ascending powers
POLY1D_PROSE_COEFFS = tuple(3.0 * c for c in POLY1D_COEFFS)


def _polyval(coeffs, x):
    out = np.zeros_like(np.asarray(x, dtype=float))
    for c in reversed(coeffs):
        out = out * x + c
    return out


def eval_poly1d(x):
    """x^6 + 1.2x^5 - 30.43x^4 - 6.47x^3 + 19.05x^2 - 4.81x + 0.3."""
    return _polyval(POLY1D_COEFFS, x)


def eval_poly1d_prose(x):
    return _polyval(POLY1D_PROSE_COEFFS, x)


def eval_rosenbrock(x):
    """sum_{i<D} (1 - x_i)^2 + 100 (x_{i+1} - x_i^2)^2; accepts (D,) or (N, D)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise ParameterError(f"rosenbrock needs D >= 2, got D={x.shape[-1]}")
    a = x[..., :-1]
    b = x[..., 1:]
    out = np.sum((1.0 - a) ** 2 + 100.0 * (b - a * a) ** 2, axis=-1)
    return float(out) if x.ndim == 1 else out


def default_h(x, y):
    return np.sin(3 * x) * np.sin(3 * y) + 0.5 * np.abs(x * y) + np.cos(x * x - y)


def eval_btbutterfly(x, h: Callable = default_h):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise ParameterError(f"btbutterfly needs D >= 2, got D={x.shape[-1]}")
    out = np.zeros(x.shape[:-1])
    for i in range(x.shape[-1] - 1):
        out = out + h(x[..., i], x[..., i + 1])
    return float(out) if x.ndim == 1 else out


@dataclass(frozen=True)
class Truth:
    value: float
    error_bound: float
    method: str


@dataclass(frozen=True, eq=False)
class TestFunction:
    __test__ = False  # not a pytest class

    name: str
    evaluator: Callable
    dims: Optional[int] = None  # None: any D allowed by the evaluator
    truth: Optional[Callable] = None  # (dist) -> Truth

    def __call__(self, x):
        xx = np.asarray(x)
        if self.dims is not None and xx.ndim >= 1:
            if xx.shape[-1] != self.dims:
                raise ShapeError(f"{self.name} takes {self.dims} coordinates, got {xx.shape[-1]}")
        return self.evaluator(x)


def _moment(marginal, n):
    return basis_expectation(marginal, Basis("mono", n))


def _poly_truth(coeffs):
    def truth(dist):
        if dist.dims != 1:
            raise NotAvailableError("one-dimensional function needs a one-dimensional distribution")
        m = dist.marginals[0]
        return Truth(sum(c * _moment(m, n) for n, c in enumerate(coeffs)), 0.0, "moments")
    return truth


def _rosenbrock_truth(dist):
    if dist.dims < 2:
        raise NotAvailableError("rosenbrock needs D >= 2")
    total = 0.0
    for a, b in zip(dist.marginals[:-1], dist.marginals[1:]):
        ex, ex2, ex4 = _moment(a, 1), _moment(a, 2), _moment(a, 4)
        ey, ey2 = _moment(b, 1), _moment(b, 2)
        total += (1.0 - 2.0 * ex + ex2) + 100.0 * (ey2 - 2.0 * ey * ex2 + ex4)
    return Truth(total, 0.0, "moments")


def _split(lo, hi):
    # break the range at 0 where |x y| has its kink
    if lo < 0.0 < hi:
        return [(lo, 0.0), (0.0, hi)]
    return [(lo, hi)]


@functools.lru_cache(maxsize=None)
def _pair_expectation(h, ma, mb):
    total = 0.0
    err = 0.0
    for xa, xb in _split(*ma.support):
        for ya, yb in _split(*mb.support):
            val, e = integrate.dblquad(
                lambda y, x: h(x, y) * ma.pdf(x) * mb.pdf(y),
                xa, xb, ya, yb, epsabs=1e-12, epsrel=1e-12,
            )
            total += val
            err += e
    return total, err


def butterfly_truth(h: Callable = default_h):
    def truth(dist):
        if dist.dims < 2:
            raise NotAvailableError("btbutterfly needs D >= 2")
        total = 0.0
        err = 0.0
        for a, b in zip(dist.marginals[:-1], dist.marginals[1:]):
            v, e = _pair_expectation(h, a, b)
            total += v
            err += e
        return Truth(total, err, "quadrature")
    return truth


def _wrap1d(fn):
    def evaluate(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return float(fn(x))
        if x.ndim == 1:
            if x.shape[0] != 1:
                raise ShapeError(f"expected 1 coordinate, got {x.shape[0]}")
            return float(fn(x[0]))
        return fn(x[:, 0])
    return evaluate


FUNCTIONS = {
    "poly1d": TestFunction("poly1d", _wrap1d(eval_poly1d), 1, _poly_truth(POLY1D_COEFFS)),
    "poly1d_prose": TestFunction(
        "poly1d_prose", _wrap1d(eval_poly1d_prose), 1, _poly_truth(POLY1D_PROSE_COEFFS)
    ),
    "rosenbrock": TestFunction("rosenbrock", eval_rosenbrock, None, _rosenbrock_truth),
    "btbutterfly": TestFunction("btbutterfly", eval_btbutterfly, None, butterfly_truth()),
}


def get_function(name: str) -> TestFunction:
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise NotAvailableError(
            f"unknown function {name!r}; available: {', '.join(sorted(FUNCTIONS))}"
        ) from None


def reference_truth(fn: TestFunction | str, dist: DistributionSpec) -> Truth:
    """Exact (moment algebra) or quadrature reference for E[fn] under ``dist``."""
    if isinstance(fn, str):
        fn = get_function(fn)
    if fn.truth is None:
        raise NotAvailableError(f"no reference expectation registered for {fn.name}")
    if fn.dims is not None and fn.dims != dist.dims:
        raise NotAvailableError(f"{fn.name} is {fn.dims}-dimensional but distribution has {dist.dims}")
    try:
        return fn.truth(dist)
    except UnsupportedIntegralError as exc:
        raise NotAvailableError(str(exc)) from exc


def true_expectation(fn: TestFunction | str, dist: DistributionSpec) -> float:
    return reference_truth(fn, dist).value


# (function, distribution) pairs whose references are checked against large-N
# Monte Carlo in the test suite
REFERENCE_CASES = (
    ("poly1d", "uniform(-1,1)"),
    ("poly1d_prose", "uniform(-3,3)"),
    ("rosenbrock", "uniform(-3,3)^10"),
    ("rosenbrock", "gauss(0,2)^10"),
    ("btbutterfly", "uniform(-3,3)^20"),
)
