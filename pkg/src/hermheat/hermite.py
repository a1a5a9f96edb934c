"""Normalized Hermite functions, Gauss-Hermite quadrature and spectral transforms.

Fields live in one of two representations:

* :class:`SpectralField` -- coefficients over the total-degree truncated
  basis ``{Phi_alpha : |alpha|_1 <= N}`` of ``L^2(R^d)``.
* :class:`PhysicalField` -- samples on a tensor grid.

Hermite values are always carried in the ``e^{-x^2/2}``-scaled form (the
Hermite *functions*); unscaled Hermite polynomials are never formed, which
keeps every quantity finite for degrees in the hundreds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterator, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

MAX_RULE_ORDER = 512
DEFAULT_BOX = 14.0

_PI_QUARTER = np.pi ** -0.25


def hermite_table(n_max: int, x) -> np.ndarray:
    """Hermite functions ``h_0 .. h_{n_max}`` at the points ``x``.

    Returns an array of shape ``(n_max + 1,) + x.shape`` computed with the
    normalized three-term recurrence

        h_{k+1}(x) = x sqrt(2/(k+1)) h_k(x) - sqrt(k/(k+1)) h_{k-1}(x).
    """
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    x = np.asarray(x, dtype=float)
    table = np.empty((n_max + 1,) + x.shape)
    table[0] = _PI_QUARTER * np.exp(-0.5 * x * x)
    if n_max >= 1:
        table[1] = np.sqrt(2.0) * x * table[0]
    for k in range(1, n_max):
        table[k + 1] = (x * np.sqrt(2.0 / (k + 1)) * table[k]
                        - np.sqrt(k / (k + 1)) * table[k - 1])
    return table


def hermite_function(k: int, x):
    """L2-normalized Hermite function ``h_k(x)``.

    Accepts scalar or array ``x``; returns the same shape.
    """
    if int(k) != k or k < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {k}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    val = hermite_table(int(k), x)[-1]
    return float(val) if val.ndim == 0 else val


def multi_indices(d: int, n_max: int) -> Iterator[tuple[int, ...]]:
    """All multi-indices of length ``d`` with total degree ``<= n_max``,
    ordered by total degree and then lexicographically."""
    _check_dim(d)
    for k in range(n_max + 1):
        for alpha in product(range(k + 1), repeat=d):
            if sum(alpha) == k:
                yield alpha


def total_degree(alpha: Sequence[int]) -> int:
    return int(sum(alpha))


def phi_alpha(alpha: Sequence[int], x) -> float:
    """Tensor Hermite function ``Phi_alpha(x) = prod_j h_{alpha_j}(x_j)``."""
    alpha = tuple(int(a) for a in alpha)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != len(alpha):
        raise ValueError(
            f"dimension mismatch: alpha has length {len(alpha)}, point has {x.shape[-1]}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index entries must be >= 0: {alpha}")
    out = np.ones(x.shape[:-1])
    for j, a in enumerate(alpha):
        out = out * hermite_function(a, x[..., j])
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# Quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight ``e^{-x^2}``.

    ``scaled_weights`` are ``weights * exp(nodes**2)``; they stay O(1) where
    the plain weights underflow and are what the transforms use.
    """

    nodes: np.ndarray
    weights: np.ndarray
    scaled_weights: np.ndarray

    @property
    def order(self) -> int:
        return len(self.nodes)


@lru_cache(maxsize=64)
def _rule(m: int) -> QuadratureRule:
    if m == 1:
        nodes = np.zeros(1)
    else:
        off = np.sqrt(np.arange(1, m) / 2.0)
        nodes = eigh_tridiagonal(np.zeros(m), off, eigvals_only=True)
        # Newton polish on h_m; h_m' = sqrt(2m) h_{m-1} - x h_m
        for _ in range(3):
            tab = hermite_table(m, nodes)
            deriv = np.sqrt(2.0 * m) * tab[m - 1] - nodes * tab[m]
            nodes = nodes - tab[m] / deriv
        nodes = 0.5 * (nodes - nodes[::-1])
    tab = hermite_table(m - 1, nodes)
    scaled = 1.0 / np.sum(tab * tab, axis=0)
    weights = scaled * np.exp(-nodes * nodes)
    for arr in (nodes, weights, scaled):
        arr.setflags(write=False)
    return QuadratureRule(nodes, weights, scaled)


def gauss_hermite_rule(m: int) -> QuadratureRule:
    """M-point Gauss-Hermite rule, exact for polynomials of degree ``2M-1``.

    Nodes come from the symmetric tridiagonal Jacobi matrix and are polished
    by Newton steps on the normalized recurrence.
    """
    if int(m) != m or not 1 <= m <= MAX_RULE_ORDER:
        raise ValueError(f"rule order must be an integer in [1, {MAX_RULE_ORDER}], got {m}")
    return _rule(int(m))


# --------------------------------------------------------------------------
# Fields


@dataclass(frozen=True)
class PhysicalField:
    """Samples of a real function on a tensor grid.

    ``kind`` is ``"gauss"`` for Gauss-Hermite grids (transform input),
    ``"uniform"`` for the evaluation box ``[-L, L]^d`` used by the norms, or
    ``"points"`` for arbitrary tensor point sets.
    """

    axes: tuple
    values: np.ndarray
    kind: str = "points"
    box: float = DEFAULT_BOX
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        _check_dim(len(axes))
        values = np.asarray(self.values, dtype=float)
        shape = tuple(len(a) for a in axes)
        if values.shape != shape:
            raise ValueError(f"values shape {values.shape} does not match grid {shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains NaN or Inf")
        object.__setattr__(self, "values", values)
        if self.kind not in ("gauss", "uniform", "points"):
            raise ValueError(f"unknown grid kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return len(self.axes)

    def with_values(self, values) -> "PhysicalField":
        return PhysicalField(self.axes, values, self.kind, self.box, dict(self.meta))

    def __mul__(self, c: float) -> "PhysicalField":
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralField:
    """Coefficients ``c_alpha`` for ``|alpha|_1 <= N``.

    Stored densely as an array of shape ``(N+1,)*d``; entries above the
    total-degree cut are held at zero.
    """

    coeffs: np.ndarray
    max_degree: int

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        d = c.ndim
        _check_dim(d)
        n = int(self.max_degree)
        if c.shape != (n + 1,) * d:
            raise ValueError(f"coefficient array shape {c.shape} != {(n + 1,) * d}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients contain NaN or Inf")
        mask = degree_grid(d, n) > n
        if np.any(c[mask] != 0.0):
            raise ValueError("coefficients present above the total-degree cut")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "max_degree", n)

    @property
    def dim(self) -> int:
        return self.coeffs.ndim

    @classmethod
    def zeros(cls, d: int, n: int) -> "SpectralField":
        return cls(np.zeros((n + 1,) * d), n)

    @classmethod
    def basis(cls, alpha: Sequence[int], n: int, value: float = 1.0) -> "SpectralField":
        alpha = tuple(alpha)
        if total_degree(alpha) > n:
            raise ValueError(f"|alpha| = {total_degree(alpha)} exceeds N = {n}")
        c = np.zeros((n + 1,) * len(alpha))
        c[alpha] = value
        return cls(c, n)

    @classmethod
    def from_dict(cls, d: int, n: int, entries: dict) -> "SpectralField":
        c = np.zeros((n + 1,) * d)
        for alpha, v in entries.items():
            alpha = tuple(alpha) if np.ndim(alpha) else (alpha,)
            if len(alpha) != d or total_degree(alpha) > n:
                raise ValueError(f"invalid multi-index {alpha} for d={d}, N={n}")
            c[alpha] = v
        return cls(c, n)

    def __getitem__(self, alpha) -> float:
        alpha = tuple(alpha) if np.ndim(alpha) else (alpha,)
        return float(self.coeffs[alpha])

    def items(self):
        for alpha in multi_indices(self.dim, self.max_degree):
            yield alpha, float(self.coeffs[alpha])

    def levels(self) -> np.ndarray:
        """Total degree ``|alpha|_1`` of every coefficient slot."""
        return degree_grid(self.dim, self.max_degree)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs ** 2)))

    def with_coeffs(self, coeffs) -> "SpectralField":
        return SpectralField(np.where(self.levels() <= self.max_degree, coeffs, 0.0),
                             self.max_degree)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.coeffs + other.coeffs, self.max_degree)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.coeffs - other.coeffs, self.max_degree)

    def __mul__(self, c: float) -> "SpectralField":
        return SpectralField(self.coeffs * float(c), self.max_degree)

    __rmul__ = __mul__

    def _check_compatible(self, other):
        if self.coeffs.shape != other.coeffs.shape:
            raise ValueError("spectral fields have different dimension or degree")


@lru_cache(maxsize=32)
def _degree_grid(d: int, n: int) -> np.ndarray:
    k = np.arange(n + 1)
    grid = k if d == 1 else k[:, None] + k[None, :]
    grid.setflags(write=False)
    return grid


def degree_grid(d: int, n: int) -> np.ndarray:
    return _degree_grid(int(d), int(n))


def _check_dim(d: int):
    if d not in (1, 2):
        raise ValueError(f"spatial dimension must be 1 or 2, got {d}")


# --------------------------------------------------------------------------
# Grids and transforms


def gauss_grid(d: int, m: int) -> tuple:
    _check_dim(d)
    nodes = gauss_hermite_rule(m).nodes
    return (nodes,) * d


def uniform_grid(d: int, n: int, box: float = DEFAULT_BOX) -> tuple:
    """Uniform tensor grid with ``n`` points per axis on ``[-box, box]``."""
    _check_dim(d)
    if n < 3:
        raise ValueError("uniform grid needs at least 3 points per axis")
    return (np.linspace(-box, box, n),) * d


def default_uniform_points(d: int) -> int:
    return 1401 if d == 1 else 281


def sample(func, axes, kind: str = "points", box: float = DEFAULT_BOX, **meta) -> PhysicalField:
    """Evaluate ``func`` on a tensor grid. ``func`` takes ``d`` coordinate arrays."""
    mesh = np.meshgrid(*axes, indexing="ij")
    return PhysicalField(axes, func(*mesh), kind=kind, box=box, meta=meta)


def forward_transform(f: PhysicalField, n: int) -> SpectralField:
    """Coefficients ``<f, Phi_alpha>`` for ``|alpha|_1 <= n`` by Gauss-Hermite quadrature."""
    if f.kind != "gauss":
        raise ValueError("forward_transform needs a field on a Gauss-Hermite grid")
    m = len(f.axes[0])
    if any(len(a) != m for a in f.axes):
        raise ValueError("Gauss-Hermite grid must have the same order on every axis")
    if m < 2 * n + 1:
        raise ValueError(f"under-resolved grid: order {m} < 2N+1 = {2 * n + 1}")
    rule = gauss_hermite_rule(m)
    table = _table(n, m)
    w = rule.scaled_weights
    if f.dim == 1:
        c = table @ (w * f.values)
    else:
        c = table @ (w[:, None] * f.values * w[None, :]) @ table.T
    c = np.where(degree_grid(f.dim, n) <= n, c, 0.0)
    return SpectralField(c, n)


def inverse_transform(c: SpectralField, axes, kind: str | None = None,
                      box: float = DEFAULT_BOX) -> PhysicalField:
    """Synthesize ``sum_alpha c_alpha Phi_alpha`` on a tensor grid."""
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    if len(axes) != c.dim:
        raise ValueError(f"grid has {len(axes)} axes, field has dimension {c.dim}")
    tables = [hermite_table(c.max_degree, a) for a in axes]
    if c.dim == 1:
        values = tables[0].T @ c.coeffs
    else:
        values = tables[0].T @ c.coeffs @ tables[1]
    if kind is None:
        kind = "points"
    return PhysicalField(axes, values, kind=kind, box=box)


def synthesize_gauss(c: SpectralField, m: int) -> PhysicalField:
    return inverse_transform(c, gauss_grid(c.dim, m), kind="gauss")


def synthesize_uniform(c: SpectralField, n: int | None = None,
                       box: float = DEFAULT_BOX) -> PhysicalField:
    n = default_uniform_points(c.dim) if n is None else n
    return inverse_transform(c, uniform_grid(c.dim, n, box), kind="uniform", box=box)


def project(func, d: int, n: int, m: int | None = None) -> SpectralField:
    """Spectral coefficients of a closed-form function, sampled on an
    oversampled Gauss-Hermite grid (default order ``4N``)."""
    m = max(4 * n, 2 * n + 1) if m is None else m
    return forward_transform(sample(func, gauss_grid(d, m), kind="gauss"), n)


@lru_cache(maxsize=32)
def _table(n: int, m: int) -> np.ndarray:
    tab = hermite_table(n, gauss_hermite_rule(m).nodes)
    tab.setflags(write=False)
    return tab
