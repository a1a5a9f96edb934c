"""The semigroup ``e^{-tH^beta}`` of the fractional harmonic oscillator.

Two independent routes are provided:

* :func:`apply_semigroup` scales each spectral coefficient by
  ``exp(-t (2|alpha| + d)^beta)``; valid for every ``beta > 0``.
* :func:`mehler_apply` integrates against the Mehler kernel (``beta = 1``
  only) with adaptive Gauss-Legendre panels, which also handles data that
  have no spectral representation (singular or discontinuous functions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .hermite import (
    DEFAULT_BOX,
    PhysicalField,
    SpectralField,
    hermite_table,
    inverse_transform,
    synthesize_uniform,
)
from .orlicz import lq_norm

MEHLER_MIN_T = 1e-4
SMALL_T = 0.05
_GL_ORDER = 16


def check_beta(beta: float, *, solver: bool = False) -> float:
    beta = float(beta)
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if solver and beta > 1:
        raise ValueError(f"beta must satisfy 0 < beta <= 1 here, got {beta}")
    return beta


def multipliers(d: int, n: int, t: float, beta: float) -> np.ndarray:
    """Per-coefficient decay factors ``exp(-t (2|alpha|+d)^beta)``."""
    k = np.arange(n + 1)
    levels = k if d == 1 else k[:, None] + k[None, :]
    return np.exp(-t * (2.0 * levels + d) ** beta)


def apply_semigroup(c: SpectralField, t: float, beta: float = 1.0) -> SpectralField:
    t = float(t)
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    beta = check_beta(beta)
    if t == 0:
        return c
    return c.with_coeffs(c.coeffs * multipliers(c.dim, c.max_degree, t, beta))


# --------------------------------------------------------------------------
# Mehler kernel


def mehler_normalization(d: int) -> float:
    """The constant ``C_d`` in front of the kernel, ``(2 pi)^{-d/2}``."""
    return (2.0 * np.pi) ** (-d / 2.0)


def mehler_kernel(x, y, t: float) -> np.ndarray:
    """Kernel ``K_t(x, y)`` of ``e^{-tH}`` for points with trailing axis ``d``.

    Equivalent to ``C_d sinh(2t)^{-d/2} exp(-tanh(t)/2 (|x|^2 + |y|^2)
    - |x - y|^2 / (2 sinh 2t))`` but written as a Gaussian in ``y`` with
    mean ``x / cosh 2t`` and variance ``tanh 2t`` so nothing overflows.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x.shape[-1]
    s2 = np.tanh(2 * t)
    centre = x / np.cosh(2 * t)
    amp = mehler_normalization(d) * np.sinh(2 * t) ** (-d / 2)
    return amp * np.exp(-0.5 * s2 * np.sum(x * x, axis=-1)
                        - np.sum((y - centre) ** 2, axis=-1) / (2 * s2))


@dataclass
class Pointwise:
    """A function known pointwise, with optional quadrature hints.

    ``breakpoints`` are coordinates where panels must end (jumps, kinks);
    ``singular`` is the subset toward which panels are geometrically graded.
    Both apply to every axis.
    """

    func: Callable
    dim: int
    breakpoints: Sequence[float] = ()
    singular: Sequence[float] = ()
    meta: dict = field(default_factory=dict)

    def __call__(self, *coords):
        return self.func(*coords)


def as_pointwise(f) -> Pointwise:
    if isinstance(f, Pointwise):
        return f
    if isinstance(f, SpectralField):
        c = f

        def evaluate(*coords):
            shape = np.shape(coords[0])
            tabs = [hermite_table(c.max_degree, np.ravel(x)) for x in coords]
            if c.dim == 1:
                vals = tabs[0].T @ c.coeffs
            else:
                vals = np.einsum("an,ab,bn->n", tabs[0], c.coeffs, tabs[1])
            return vals.reshape(shape)

        return Pointwise(evaluate, c.dim)
    if isinstance(f, PhysicalField):
        source = f.meta.get("source")
        if source is None:
            raise TypeError("PhysicalField has no pointwise source; pass a callable or SpectralField")
        if isinstance(source, (Pointwise, SpectralField)):
            return as_pointwise(source)
        return Pointwise(source, f.dim)
    raise TypeError(f"cannot evaluate {type(f).__name__} pointwise")


def _gl(order: int = _GL_ORDER):
    return np.polynomial.legendre.leggauss(order)


def _panel_edges(lo: float, hi: float, n: int, hints: Pointwise, grade_levels: int):
    cuts = sorted({lo, hi, *(b for b in hints.breakpoints if lo < b < hi)})
    singular = set(hints.singular)
    edges = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        seg = list(np.linspace(a, b, n + 1))
        if a in singular:
            w = seg[1] - a
            seg = [a] + [a + w * 0.15 ** j for j in range(grade_levels, 0, -1)] + seg[1:]
        if b in singular:
            w = b - seg[-2]
            seg = seg[:-1] + [b - w * 0.15 ** j for j in range(1, grade_levels + 1)] + [b]
        edges.extend(seg if not edges else seg[1:])
    return np.asarray(edges)


def _nodes_1d(lo, hi, n, hints, grade_levels):
    z, w = _gl()
    e = _panel_edges(lo, hi, n, hints, grade_levels)
    a, b = e[:-1, None], e[1:, None]
    y = 0.5 * (a + b) + 0.5 * (b - a) * z
    wt = 0.5 * (b - a) * w
    return y.ravel(), wt.ravel()


@dataclass
class MehlerStats:
    converged: bool = True
    max_rounds: int = 0
    max_change: float = 0.0


def mehler_apply(f, t: float, out_points, beta: float = 1.0, *, tol: float = 1e-9,
                 max_rounds: int = 10, stats: MehlerStats | None = None) -> PhysicalField:
    """Evaluate ``e^{-tH} f`` at the tensor grid ``out_points`` by quadrature.

    ``f`` may be a :class:`SpectralField`, a :class:`Pointwise` function, or a
    :class:`PhysicalField` carrying a ``source`` in its metadata. For each
    output point the integral is taken over ``|y - x/cosh 2t| <= 12 sqrt(tanh 2t)``
    with Gauss-Legendre panels, halving the panel width until successive
    values differ by less than ``tol`` (relative once above 1).
    """
    if beta != 1:
        raise NotImplementedError("the Mehler kernel path exists only for beta = 1")
    t = float(t)
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t}")
    if t < MEHLER_MIN_T:
        raise ValueError(f"t = {t:g} is below {MEHLER_MIN_T:g}; use the spectral path")
    hints = as_pointwise(f)
    if isinstance(out_points, np.ndarray) and out_points.ndim == 1:
        out_points = (out_points,)
    axes = tuple(np.asarray(a, dtype=float) for a in out_points)
    d = len(axes)
    if d != hints.dim:
        raise ValueError(f"output grid has dimension {d}, data has {hints.dim}")
    stats = stats if stats is not None else MehlerStats()
    s = math.sqrt(math.tanh(2 * t))
    radius = 12.0 * s
    ch = math.cosh(2 * t)
    amp = mehler_normalization(d) * math.sinh(2 * t) ** (-d / 2)
    # Narrower kernels get more initial panels per unit length.
    n0 = 2 if t >= SMALL_T else 4
    grade = 10 if hints.singular else 0

    if d == 1:
        xs = axes[0]
        out = np.empty(len(xs))
        vectorized = not hints.breakpoints and not hints.singular
        if vectorized:
            out[:] = _mehler_1d_block(hints, xs, ch, s, radius, amp, n0, tol, max_rounds, stats)
        else:
            for i, x in enumerate(xs):
                out[i] = _mehler_1d_point(hints, x, ch, s, radius, amp, n0, grade, tol,
                                          max_rounds, stats)
    else:
        X, Y = np.meshgrid(*axes, indexing="ij")
        out = np.empty(X.shape)
        for idx in np.ndindex(X.shape):
            out[idx] = _mehler_2d_point(hints, X[idx], Y[idx], ch, s, radius, amp, n0, grade,
                                        tol, max_rounds, stats)
    return PhysicalField(axes, out, kind="points")


def _converged(new, old, tol):
    return np.abs(new - old) <= tol * np.maximum(1.0, np.abs(new))


def _mehler_1d_block(f, xs, ch, s, radius, amp, n0, tol, max_rounds, stats):
    z, w = _gl()
    centres = xs / ch
    s2 = s * s
    pref = amp * np.exp(-0.5 * s2 * xs * xs)
    prev = None
    n = n0
    for rnd in range(max_rounds):
        edges = np.linspace(-radius, radius, n + 1)
        a, b = edges[:-1, None], edges[1:, None]
        u = (0.5 * (a + b) + 0.5 * (b - a) * z).ravel()
        wu = (0.5 * (b - a) * w).ravel()
        y = centres[:, None] + u[None, :]
        vals = f(y) * np.exp(-u * u / (2 * s2))[None, :]
        cur = pref * (vals @ wu)
        if prev is not None and np.all(_converged(cur, prev, tol)):
            stats.max_rounds = max(stats.max_rounds, rnd)
            stats.max_change = max(stats.max_change, float(np.max(np.abs(cur - prev))))
            return cur
        prev, n = cur, 2 * n
    stats.converged = False
    stats.max_rounds = max_rounds
    return prev


def _mehler_1d_point(f, x, ch, s, radius, amp, n0, grade, tol, max_rounds, stats):
    c = x / ch
    s2 = s * s
    pref = amp * math.exp(-0.5 * s2 * x * x)
    prev = None
    n = n0
    for rnd in range(max_rounds):
        y, wy = _nodes_1d(c - radius, c + radius, n, f, grade)
        cur = pref * float(np.sum(wy * f(y) * np.exp(-(y - c) ** 2 / (2 * s2))))
        if prev is not None and _converged(cur, prev, tol):
            stats.max_rounds = max(stats.max_rounds, rnd)
            stats.max_change = max(stats.max_change, abs(cur - prev))
            return cur
        prev, n = cur, 2 * n
    stats.converged = False
    stats.max_rounds = max_rounds
    return prev


def _mehler_2d_point(f, x1, x2, ch, s, radius, amp, n0, grade, tol, max_rounds, stats):
    c1, c2 = x1 / ch, x2 / ch
    s2 = s * s
    pref = amp * math.exp(-0.5 * s2 * (x1 * x1 + x2 * x2))
    prev = None
    n = n0
    for rnd in range(max(max_rounds - 3, 2)):
        y1, w1 = _nodes_1d(c1 - radius, c1 + radius, n, f, grade)
        y2, w2 = _nodes_1d(c2 - radius, c2 + radius, n, f, grade)
        k1 = w1 * np.exp(-(y1 - c1) ** 2 / (2 * s2))
        k2 = w2 * np.exp(-(y2 - c2) ** 2 / (2 * s2))
        Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
        cur = pref * float(k1 @ f(Y1, Y2) @ k2)
        if prev is not None and _converged(cur, prev, tol):
            stats.max_rounds = max(stats.max_rounds, rnd)
            stats.max_change = max(stats.max_change, abs(cur - prev))
            return cur
        prev, n = cur, 2 * n
    stats.converged = False
    stats.max_rounds = max_rounds
    return prev


def check_mehler_normalization(d: int, t: float = 0.5, tol: float = 1e-8) -> float:
    """Startup self-check: the kernel must map ``Phi_0`` to ``e^{-td} Phi_0``.

    Returns the maximal deviation; raises if it exceeds ``tol``.
    """
    n = 0
    ground = SpectralField.basis((0,) * d, n)
    pts = tuple(np.linspace(-3, 3, 7) for _ in range(d))
    got = mehler_apply(ground, t, pts).values
    want = np.exp(-t * d) * inverse_transform(ground, pts).values
    err = float(np.max(np.abs(got - want)))
    if err > tol:
        raise RuntimeError(f"Mehler normalization self-check failed: error {err:.3e}")
    return err


# --------------------------------------------------------------------------
# Smoothing estimates


def sigma_beta(d: int, beta: float, p: float, q: float) -> float:
    """Smoothing exponent ``(d / 2 beta) |1/p - 1/q|`` (``1/inf = 0``)."""
    return d / (2.0 * beta) * abs(_inv(p) - _inv(q))


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def smoothing_admissible(p: float, q: float, beta: float) -> bool:
    """Whether the ``L^p -> L^q`` estimate is asserted for this ``beta``.

    Every pair is covered when ``beta <= 1``; for ``beta > 1`` only the pairs
    ``p, q in (1, inf)``, ``(1, inf)``, ``p = 1, q in [2, inf)`` and
    ``p in (1, inf), q = 1``.
    """
    for e in (p, q):
        if not (e >= 1):
            raise ValueError(f"Lebesgue exponents must be in [1, inf], got {e}")
    if beta <= 1:
        return True
    inner = lambda e: 1 < e < math.inf  # noqa: E731
    return ((inner(p) and inner(q)) or (p == 1 and math.isinf(q))
            or (p == 1 and 2 <= q < math.inf) or (inner(p) and q == 1))


@dataclass
class SmoothingReport:
    p: float
    q: float
    beta: float
    dim: int
    t_grid: np.ndarray
    ratios: np.ndarray
    sigma_beta: float
    norm_p: float = 0.0

    def __post_init__(self):
        expected = sigma_beta(self.dim, self.beta, self.p, self.q)
        if expected != self.sigma_beta:
            raise ValueError(f"stored sigma_beta {self.sigma_beta} != recomputed {expected}")

    def branch(self) -> np.ndarray:
        return np.where(self.t_grid <= 1.0, "short", "long")

    def sup(self, t_lo: float = 0.0, t_hi: float = 1.0) -> float:
        sel = (self.t_grid >= t_lo) & (self.t_grid <= t_hi)
        return float(np.max(self.ratios[sel]))


def smoothing_ratio_sweep(g, p: float, q: float, t_grid, beta: float = 1.0, *,
                          n_uniform: int | None = None, box: float = DEFAULT_BOX) -> SmoothingReport:
    """Ratios of ``||e^{-tH^beta} g||_q`` to the smoothing bound.

    For ``t <= 1`` the reference is ``t^{-sigma_beta} ||g||_p``; for ``t > 1``
    it is ``e^{-t d^beta} ||g||_p``. Norms are taken on the uniform box.
    """
    beta = check_beta(beta)
    if not smoothing_admissible(p, q, beta):
        raise ValueError(f"(p, q) = ({p}, {q}) is not covered by the smoothing estimate for beta = {beta}")
    if not isinstance(g, SpectralField):
        raise TypeError("smoothing_ratio_sweep needs a SpectralField")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise ValueError("t_grid must be positive")
    d = g.dim
    sig = sigma_beta(d, beta, p, q)
    norm_p = float(lq_norm(synthesize_uniform(g, n_uniform, box), p))
    if norm_p == 0:
        raise ValueError("g must be nonzero")
    ratios = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        nq = float(lq_norm(synthesize_uniform(apply_semigroup(g, t, beta), n_uniform, box), q))
        ref = t ** (-sig) if t <= 1 else math.exp(-t * d ** beta)
        ratios[i] = nq / (ref * norm_p)
    return SmoothingReport(p, q, beta, d, t_grid, ratios, sig, norm_p)
