"""Independent-per-dimension input densities.

A :class:`DistributionSpec` is a tuple of one-dimensional marginals
(uniform box, Gaussian, or beta on [0, 1]).  Besides seeded sampling and
pointwise density evaluation it knows closed-form expectations of the basis
functions used by the surrogate fitters, which is what lets an additive
surrogate be integrated exactly.

Distributions are written in a compact grammar::

    uniform(-3,3)^10          ten identical uniform marginals
    gauss(0,2)^10             ten N(0, 2^2) marginals
    beta(2,5)*beta(1,3)       concatenation of two different marginals
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .errors import ParameterError, ParseError, ShapeError, UnsupportedIntegralError
from .rng import generator

MAX_MONOMIAL_ORDER = 8


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise ParameterError(f"uniform marginal needs finite lo < hi, got ({self.lo}, {self.hi})")

    @property
    def support(self):
        return self.lo, self.hi

    def draw(self, rng, n):
        return rng.uniform(self.lo, self.hi, n)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu) or not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterError(f"gaussian marginal needs sigma > 0, got sigma={self.sigma}")

    @property
    def support(self):
        return -math.inf, math.inf

    def draw(self, rng, n):
        return rng.normal(self.mu, self.sigma, n)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))


@dataclass(frozen=True)
class Beta:
    """Beta(a, b) on [0, 1]; rescaling to other intervals is left to the caller."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0 and math.isfinite(self.b) and self.b > 0):
            raise ParameterError(f"beta marginal needs a, b > 0, got ({self.a}, {self.b})")

    @property
    def support(self):
        return 0.0, 1.0

    def draw(self, rng, n):
        return rng.beta(self.a, self.b, n)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0.0) & (x <= 1.0)
        xc = np.clip(x, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = (
                special.xlogy(self.a - 1.0, xc)
                + special.xlog1py(self.b - 1.0, -xc)
                - special.betaln(self.a, self.b)
            )
            return np.where(inside, np.exp(logp), 0.0)


Marginal = Union[Uniform, Gaussian, Beta]


@dataclass(frozen=True)
class Basis:
    """One-dimensional basis function: ``mono`` x**k, ``cos`` cos(k x) or ``sin`` sin(k x)."""

    kind: str
    k: int

    def __post_init__(self):
        if self.kind not in ("mono", "cos", "sin"):
            raise ParameterError(f"unknown basis kind {self.kind!r}")
        if self.k < (0 if self.kind == "mono" else 1):
            raise ParameterError(f"invalid basis order {self.k} for {self.kind}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "mono":
            return x**self.k
        if self.kind == "cos":
            return np.cos(self.k * x)
        return np.sin(self.k * x)


@dataclass(frozen=True)
class DistributionSpec:
    marginals: tuple

    def __post_init__(self):
        if len(self.marginals) < 1:
            raise ParameterError("a distribution needs at least one marginal")
        object.__setattr__(self, "marginals", tuple(self.marginals))

    @classmethod
    def iid(cls, marginal: Marginal, dims: int) -> "DistributionSpec":
        if dims < 1:
            raise ParameterError(f"dims must be positive, got {dims}")
        return cls((marginal,) * dims)

    @property
    def dims(self) -> int:
        return len(self.marginals)

    def __str__(self):
        return format_distribution(self)


@dataclass(frozen=True)
class SampleMatrix:
    points: np.ndarray
    seed: int

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dims(self):
        return self.points.shape[1]


def sample(dist: DistributionSpec, n: int, seed: int) -> SampleMatrix:
    """Draw ``n`` i.i.d. points from ``dist``; identical arguments give identical bits."""
    if n < 1:
        raise ParameterError(f"sample size must be >= 1, got {n}")
    rng = generator(seed, "sample")
    points = np.empty((n, dist.dims))
    for d, m in enumerate(dist.marginals):
        points[:, d] = m.draw(rng, n)
    return SampleMatrix(points, seed)


def pdf(dist: DistributionSpec, point) -> np.ndarray | float:
    """Product of marginal densities.  Accepts one point (D,) or a batch (N, D)."""
    x = np.asarray(point, dtype=float)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    if x2.ndim != 2 or x2.shape[1] != dist.dims:
        raise ShapeError(f"expected points with {dist.dims} coordinates, got shape {x.shape}")
    out = np.ones(x2.shape[0])
    for d, m in enumerate(dist.marginals):
        out = out * m.pdf(x2[:, d])
    return float(out[0]) if single else out


def beta_raw_moment(a: float, b: float, n: int) -> float:
    """E[x**n] for x ~ Beta(a, b): prod_{i=1..n} (a+i-1) / (a+b+i-1)."""
    if not (a > 0 and b > 0):
        raise ParameterError(f"beta shape parameters must be positive, got ({a}, {b})")
    if n < 0:
        raise ParameterError(f"moment order must be >= 0, got {n}")
    num = 1.0
    den = 1.0
    for i in range(1, n + 1):
        num *= a + i - 1
        den *= a + b + i - 1
    return num / den


def _gaussian_raw_moment(mu, sigma, n):
    # central moments m_j = (j-1) sigma^2 m_{j-2}, then binomial expansion around mu
    central = [1.0, 0.0]
    for j in range(2, n + 1):
        central.append((j - 1) * sigma * sigma * central[j - 2])
    return sum(math.comb(n, j) * mu ** (n - j) * central[j] for j in range(n + 1))


def basis_expectation(marginal: Marginal, basis: Basis, max_order: int = MAX_MONOMIAL_ORDER) -> float:
    """Exact E[basis(x)] for x drawn from ``marginal``.

    Raises UnsupportedIntegralError for pairs without a closed form here
    (trigonometric bases under non-uniform marginals, monomials above
    ``max_order``).
    """
    k = basis.k
    if basis.kind == "mono":
        if k > max_order:
            raise UnsupportedIntegralError(f"monomial order {k} exceeds max_order={max_order}")
        if isinstance(marginal, Uniform):
            a, b = marginal.lo, marginal.hi
            return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))
        if isinstance(marginal, Gaussian):
            return _gaussian_raw_moment(marginal.mu, marginal.sigma, k)
        if isinstance(marginal, Beta):
            return beta_raw_moment(marginal.a, marginal.b, k)
    elif isinstance(marginal, Uniform):
        a, b = marginal.lo, marginal.hi
        if basis.kind == "cos":
            return (math.sin(k * b) - math.sin(k * a)) / (k * (b - a))
        return (math.cos(k * a) - math.cos(k * b)) / (k * (b - a))
    raise UnsupportedIntegralError(f"no closed form for E[{basis.kind}({k})] under {marginal}")


# --- compact string grammar -------------------------------------------------

_NAMES = {"uniform": Uniform, "gauss": Gaussian, "gaussian": Gaussian, "normal": Gaussian, "beta": Beta}
_CANON = {Uniform: "uniform", Gaussian: "gauss", Beta: "beta"}
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf|nan"
_FACTOR = re.compile(
    rf"^\s*([a-z]+)\s*\(\s*({_NUM})\s*,\s*({_NUM})\s*\)\s*(?:\^\s*(\d+))?\s*$"
)


def _fmt_num(v: float) -> str:
    negative_zero = v == 0 and math.copysign(1.0, v) < 0
    if v.is_integer() and abs(v) < 1e15 and not negative_zero:
        return str(int(v))
    return repr(v)


def parse_distribution(text: str) -> DistributionSpec:
    """Parse ``uniform(-3,3)^10`` style strings; inverse of :func:`format_distribution`."""
    marginals = []
    for part in text.split("*"):
        m = _FACTOR.match(part)
        if m is None:
            raise ParseError(f"cannot parse distribution factor {part.strip()!r}")
        name, p1, p2, rep = m.groups()
        cls = _NAMES.get(name.lower())
        if cls is None:
            raise ParseError(f"unknown marginal {name!r} (expected uniform, gauss or beta)")
        count = int(rep) if rep is not None else 1
        if count < 1:
            raise ParseError(f"repeat count must be >= 1 in {part.strip()!r}")
        try:
            marginal = cls(float(p1), float(p2))
        except ParameterError as exc:
            raise ParseError(str(exc)) from exc
        marginals.extend([marginal] * count)
    return DistributionSpec(tuple(marginals))


def format_distribution(dist: DistributionSpec) -> str:
    groups = []
    for m in dist.marginals:
        if groups and groups[-1][0] == m:
            groups[-1][1] += 1
        else:
            groups.append([m, 1])
    parts = []
    for m, count in groups:
        a, b = (getattr(m, f) for f in m.__dataclass_fields__)
        s = f"{_CANON[type(m)]}({_fmt_num(a)},{_fmt_num(b)})"
        parts.append(s if count == 1 else f"{s}^{count}")
    return "*".join(parts)
