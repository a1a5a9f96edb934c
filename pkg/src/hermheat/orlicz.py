"""Lebesgue and Orlicz (Luxemburg) norms on sampled fields.

All integrals are composite Simpson sums over the uniform evaluation box
``[-L, L]^d`` carried by the field. ``L^inf`` is the grid maximum, which is
a lower bound for the true supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .hermite import PhysicalField

LOG2 = math.log(2.0)


class NormUnbounded(ArithmeticError):
    """The Luxemburg objective never drops to 1: numerically ``f`` is not in ``L^phi``."""


class NormValue(float):
    """A float that remembers how it was computed."""

    method: str
    resolution: tuple

    def __new__(cls, value: float, method: str = "quadrature-grid", resolution: tuple = ()):
        obj = super().__new__(cls, value)
        obj.method = method
        obj.resolution = resolution
        return obj

    @property
    def value(self) -> float:
        return float(self)


# --------------------------------------------------------------------------
# Young functions


@dataclass(frozen=True)
class YoungFunction:
    """One of ``e^{s^p} - 1`` (``exp``), ``e^{s^p} - 1 - s^p`` (``exp_reduced``)
    or ``s^q`` (``power``)."""

    kind: str
    parameter: float

    def __post_init__(self):
        p = float(self.parameter)
        if self.kind == "exp" and not p >= 1:
            raise ValueError(f"exp Young function needs p >= 1, got {p}")
        if self.kind == "exp_reduced" and not p > 1:
            raise ValueError(f"reduced exp Young function needs p > 1, got {p}")
        if self.kind == "power" and not p >= 1:
            raise ValueError(f"power Young function needs q >= 1, got {p}")
        if self.kind not in ("exp", "exp_reduced", "power"):
            raise ValueError(f"unknown Young function kind {self.kind!r}")
        object.__setattr__(self, "parameter", p)

    @classmethod
    def exp_lp(cls, p: float) -> "YoungFunction":
        return cls("exp", p)

    @classmethod
    def exp_lp_reduced(cls, p: float) -> "YoungFunction":
        return cls("exp_reduced", p)

    @classmethod
    def power(cls, q: float) -> "YoungFunction":
        return cls("power", q)

    def __call__(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        p = self.parameter
        with np.errstate(over="ignore"):
            sp = s ** p
            if self.kind == "power":
                return sp
            if self.kind == "exp":
                return np.expm1(sp)
            # e^x - 1 - x loses digits for small x; use the series there
            small = sp < 1e-3
            series = sp * sp * (0.5 + sp * (1 / 6 + sp / 24))
            return np.where(small, series, np.expm1(sp) - sp)

    def is_valid(self, s_max: float = 4.0, n: int = 401) -> bool:
        """Sampled check that ``phi(0) = 0`` and ``phi`` is increasing and convex."""
        s = np.linspace(0.0, s_max, n)
        v = self(s)
        dv = np.diff(v)
        return bool(v[0] == 0 and np.all(dv > 0) and np.all(np.diff(dv) >= -1e-12 * np.abs(v[-1])))


# --------------------------------------------------------------------------
# Norms


def integrate(field: PhysicalField, values=None) -> float:
    """Composite Simpson integral of ``values`` (default: the field values)."""
    if field.kind != "uniform":
        raise ValueError("norms are evaluated on uniform-grid fields")
    v = field.values if values is None else values
    for axis in reversed(field.axes):
        v = simpson(v, x=axis, axis=-1)
    return float(v)


def lq_norm(f: PhysicalField, q: float) -> NormValue:
    q = float(q)
    if not q >= 1:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {q}")
    res = tuple(len(a) for a in f.axes)
    a = np.abs(f.values)
    if math.isinf(q):
        return NormValue(float(a.max()) if a.size else 0.0, "quadrature-grid", res)
    peak = float(a.max())
    if peak == 0:
        return NormValue(0.0, "quadrature-grid", res)
    # scale by the peak so |f|^q cannot under/overflow
    val = peak * max(integrate(f, (a / peak) ** q), 0.0) ** (1.0 / q)
    return NormValue(val, "quadrature-grid", res)


def orlicz_objective(f: PhysicalField, phi: YoungFunction, lam: float) -> float:
    """``int phi(|f| / lam) dx``."""
    with np.errstate(over="ignore", invalid="ignore"):
        vals = phi(np.abs(f.values) / lam)
    if not np.all(np.isfinite(vals)):
        return math.inf
    return integrate(f, vals)


def luxemburg_norm(f: PhysicalField, phi: YoungFunction, rtol: float = 1e-8) -> NormValue:
    """``inf{lam > 0 : int phi(|f|/lam) <= 1}`` by bracket doubling and bisection.

    Raises :class:`NormUnbounded` if ``lam`` passes ``1e12 * ||f||_inf``
    without the objective dropping to 1.
    """
    res = tuple(len(a) for a in f.axes)
    peak = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if peak == 0:
        return NormValue(0.0, "bisection", res)
    cap = 1e12 * peak
    lo = hi = peak
    if orlicz_objective(f, phi, hi) > 1:
        while orlicz_objective(f, phi, hi) > 1:
            lo, hi = hi, 2 * hi
            if hi > cap:
                raise NormUnbounded(f"Luxemburg bracket passed {cap:.3e} without closing")
    else:
        while orlicz_objective(f, phi, lo) <= 1:
            hi, lo = lo, 0.5 * lo
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if orlicz_objective(f, phi, mid) > 1:
            lo = mid
        else:
            hi = mid
    return NormValue(hi, "bisection", res)


def exp_lp_norm(f: PhysicalField, p: float) -> NormValue:
    return luxemburg_norm(f, YoungFunction.exp_lp(p))


# --------------------------------------------------------------------------
# Gamma function

_LANCZOS_G = 7
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x: float) -> float:
    """Gamma function for ``x > 0`` (Lanczos, g = 7, with reflection below 1/2)."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma is defined here for x > 0, got {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    if x == int(x) and x <= 171:
        return float(math.factorial(int(x) - 1))
    z = x - 1.0
    acc = _LANCZOS[0]
    for i, c in enumerate(_LANCZOS[1:], start=1):
        acc += c / (z + i)
    tt = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * tt ** (z + 0.5) * math.exp(-tt) * acc


# --------------------------------------------------------------------------
# Embedding and inequality checks


@dataclass
class InequalityReport:
    """``lhs <= rhs + slack``; ``margin = rhs - lhs``."""

    name: str
    lhs: float
    rhs: float
    slack: float = 1e-6
    extra: dict | None = None

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.slack

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def check_embedding_lq_from_explp(f: PhysicalField, p: float, q: float,
                                  slack: float = 1e-6) -> InequalityReport:
    """``||f||_q <= Gamma(p/q + 1)^{1/q} ||f||_{exp L^p}`` for ``1 <= p <= q < inf``."""
    if not 1 <= p:
        raise ValueError(f"need p >= 1, got {p}")
    if q < p:
        raise ValueError(f"need q >= p, got q={q} < p={p}")
    if math.isinf(q):
        raise ValueError("q must be finite")
    lq = float(lq_norm(f, q))
    ex = float(exp_lp_norm(f, p))
    const = gamma(p / q + 1) ** (1 / q)
    return InequalityReport("Lq<=Gamma*expLp", lq, const * ex, slack,
                            {"p": p, "q": q, "constant": const, "exp_norm": ex,
                             "classical_constant": gamma(q / p + 1) ** (1 / q)})


def check_embedding_explp_from_lq_linf(f: PhysicalField, p: float, q: float,
                                       slack: float = 1e-6) -> InequalityReport:
    """``||f||_{exp L^p} <= (log 2)^{-1/p} (||f||_q + ||f||_inf)`` for ``1 <= q <= p``."""
    if not 1 <= q:
        raise ValueError(f"need q >= 1, got {q}")
    if q > p:
        raise ValueError(f"need q <= p, got q={q} > p={p}")
    ex = float(exp_lp_norm(f, p))
    rhs = LOG2 ** (-1 / p) * (float(lq_norm(f, q)) + float(lq_norm(f, math.inf)))
    return InequalityReport("expLp<=(Lq+Linf)/log2^(1/p)", ex, rhs, slack, {"p": p, "q": q})


def check_exp_moment_bound(u: PhysicalField, lam: float, p: float, q: float, K: float,
                           slack: float = 1e-6) -> InequalityReport:
    """``||e^{lam |u|^p} - 1||_q <= (lam q K^p)^{1/q}`` given ``lam q K^p <= 1``
    and ``||u||_{exp L^p} <= K``."""
    if not (lam > 0 and p >= 1 and q >= 1 and K > 0):
        raise ValueError("need lam > 0, p >= 1, q >= 1, K > 0")
    budget = lam * q * K ** p
    if budget > 1 + 1e-12:
        raise ValueError(f"hypothesis lam*q*K^p <= 1 violated: {budget:.6g}")
    ex = float(exp_lp_norm(u, p))
    if ex > K * (1 + 1e-8):
        raise ValueError(f"hypothesis ||u||_expLp <= K violated: {ex:.6g} > {K:.6g}")
    with np.errstate(over="ignore"):
        moment = u.with_values(np.expm1(lam * np.abs(u.values) ** p))
    lhs = float(lq_norm(moment, q))
    return InequalityReport("exp-moment", lhs, min(budget, 1.0) ** (1 / q), slack,
                            {"lam": lam, "p": p, "q": q, "K": K, "exp_norm": ex})


@dataclass
class EquivalenceReport:
    lp: float
    lphi: float
    exp: float

    @property
    def ratio(self) -> float:
        return (self.lp + self.lphi) / self.exp


def equivalence_e32(g: PhysicalField, p: float) -> EquivalenceReport:
    """``(||g||_p + ||g||_phi) / ||g||_{exp L^p}`` with ``phi = e^{s^p} - 1 - s^p``."""
    if not p > 1:
        raise ValueError(f"need p > 1, got {p}")
    if not np.any(g.values):
        raise ValueError("equivalence ratio is undefined for the zero field")
    return EquivalenceReport(float(lq_norm(g, p)),
                             float(luxemburg_norm(g, YoungFunction.exp_lp_reduced(p))),
                             float(exp_lp_norm(g, p)))


# --------------------------------------------------------------------------
# Time envelopes


def _check_beta_unit(beta):
    if not 0 < beta <= 1:
        raise ValueError(f"envelope needs 0 < beta <= 1, got {beta}")


def kappa_envelope(t, p: float, r: float, d: int, beta: float):
    """``(log 2)^{-1/p} min{t^{-d/(2 beta r)} + 1,
    t^{-d/(2 beta)} log(t^{-d/(2 beta)} + 1)^{-1/p}}`` (constant set to 1)."""
    _check_beta_unit(beta)
    if not p > 1:
        raise ValueError(f"kappa needs p > 1, got {p}")
    D = d / (2 * beta)
    if not D > p / (p - 1):
        raise ValueError(f"kappa needs d > 2 beta p/(p-1): d/(2 beta) = {D:g} <= {p / (p - 1):g}")
    if not r > D:
        raise ValueError(f"kappa needs r > d/(2 beta) = {D:g}, got r = {r}")
    return _envelope(np.asarray(t, dtype=float), p, D / r, D, 1 / p)


def zeta_envelope(t, p: float, r: float, d: int, beta: float):
    """``(log 2)^{-1/p} min{t^{-d/(2 beta r)} + 1,
    t^{-p/(p-1)} log(t^{-p/(p-1)} + 1)^{-1/(2p)}}`` (constant set to 1)."""
    _check_beta_unit(beta)
    if not p > 1:
        raise ValueError(f"zeta needs p > 1, got {p}")
    D = d / (2 * beta)
    P = p / (p - 1)
    if not math.isclose(D, P, rel_tol=1e-12):
        raise ValueError(f"zeta needs d/(2 beta) = p/(p-1): {D:g} != {P:g}")
    if not r > D:
        raise ValueError(f"zeta needs r > d/(2 beta) = {D:g}, got r = {r}")
    return _envelope(np.asarray(t, dtype=float), p, D / r, P, 1 / (2 * p))


def _envelope(t, p, short_exp, long_exp, log_exp):
    with np.errstate(divide="ignore", over="ignore"):
        a = t ** (-short_exp) + 1
        # t^{-e} (log(1 + t^{-e}))^{-k}, computed in logs to survive t -> 0 and t -> inf
        lt = -long_exp * np.log(t)
        log1p_term = np.where(lt > 30, lt, np.log1p(np.exp(np.minimum(lt, 30))))
        b = np.exp(lt - log_exp * np.log(log1p_term))
    out = LOG2 ** (-1 / p) * np.minimum(a, b)
    return float(out) if out.ndim == 0 else out


def integrate_envelope(func, panels: int = 16, order: int = 20, decades: int = 40) -> float:
    """``int_0^inf func(t) dt`` split as ``[0,1]`` and ``[1,inf)`` (via ``t = 1/s``).

    Each half uses Gauss-Legendre on ``panels`` geometric panels per decade
    toward the endpoint where the integrand may be singular.
    """
    z, w = np.polynomial.legendre.leggauss(order)
    edges = np.concatenate([[0.0], np.logspace(-decades, 0, decades * panels + 1)])
    a, b = edges[:-1, None], edges[1:, None]
    s = (0.5 * (a + b) + 0.5 * (b - a) * z).ravel()
    ws = (0.5 * (b - a) * w).ravel()
    head = float(np.sum(ws * func(s)))
    tail = float(np.sum(ws * func(1.0 / s) / (s * s)))
    return head + tail
