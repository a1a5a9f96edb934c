"""Divergence probe for ``int_0^eps int_{B_r} exp(lam (e^{-tH} u0)^p) dx dt``.

``u0 = alpha (-log|x|)^{1/p}`` on the unit ball is singular at the origin,
so ``e^{-tH} u0`` is evaluated with the Mehler kernel and panels graded
toward ``y = 0``. Divergence of the space-time integral cannot be computed,
only indicated: the integral is truncated at ``t_l = eps 3^{-l}`` on a
ladder of levels ``l``. Each rung adds one Gauss panel in time, reaching a
finer time scale; space nodes are graded at scale ``sqrt t``. Growth by a
factor ``>= 2`` over the last two rungs is reported as divergence.

All integrals are accumulated in log space; ``lam v^p`` reaches the
thousands for large ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .propagator import MEHLER_MIN_T, MehlerStats, Pointwise, mehler_apply

RUNG_FACTOR = 3.0


def singular_datum(d: int, alpha: float, p: float) -> Pointwise:
    """``alpha (-log |x|)^{1/p}`` for ``|x| < 1``, else 0."""

    def f(*xs):
        rho = np.sqrt(sum(x * x for x in xs))
        inside = (rho < 1) & (rho > 0)
        with np.errstate(divide="ignore"):
            val = alpha * np.power(-np.log(np.where(inside, rho, 0.5)), 1.0 / p)
        return np.where(inside, val, 0.0)

    if d == 1:
        return Pointwise(f, 1, breakpoints=(-1.0, 0.0, 1.0), singular=(0.0,))
    return Pointwise(f, 2, breakpoints=(0.0,), singular=(0.0,))


@dataclass
class BlowupProbeReport:
    alpha: float
    p: float
    lam: float
    d: int
    epsilon: float
    radius: float
    levels: list
    t_min: list
    log_integrals: list
    verdict: str
    measured_C: float
    exponent: float
    alpha0: float
    max_sampled_u0: float
    quadrature_ok: list = field(default_factory=list)

    @property
    def ratios(self) -> list:
        li = self.log_integrals
        return [math.exp(min(b - a, 700.0)) for a, b in zip(li[:-1], li[1:])]

    @property
    def integrals(self) -> list:
        return [math.exp(v) if v < 700 else math.inf for v in self.log_integrals]


def _gauss_panels(edges, order):
    z, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (a + b) + 0.5 * (b - a) * z).ravel(), (0.5 * (b - a) * w).ravel()


def _space_nodes(t: float, radius: float, order: int = 8):
    """Half-line nodes on ``(0, radius)`` graded toward 0 at scale ``sqrt t``."""
    inner = min(math.sqrt(t) * 1e-2, radius / 2)
    n_geo = max(int(math.ceil(math.log2(radius / inner))), 1)
    return _gauss_panels(np.concatenate([[0.0], np.geomspace(inner, radius, n_geo + 1)]), order)


class _Evolved:
    """``e^{-tH} u0`` along a ray, cached by ``t``."""

    def __init__(self, datum: Pointwise, d: int, tol: float):
        self.datum = datum
        self.d = d
        self.tol = tol
        self.ok = True

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        stats = MehlerStats()
        if self.d == 1:
            vals = mehler_apply(self.datum, t, (rho,), tol=self.tol, stats=stats).values
        else:
            vals = np.array([mehler_apply(self.datum, t, (np.array([r]), np.array([0.0])),
                                          tol=self.tol, stats=stats).values[0, 0]
                             for r in rho])
        self.ok &= stats.converged
        return vals


def _log_space_integral(v, rho, w, lam, p, d):
    """``log int_{B_r} exp(lam v^p)`` for a radial ``v`` sampled on ``(0, r)``."""
    measure = 2.0 if d == 1 else 2 * math.pi * rho
    vp = np.maximum(v, 0.0) ** p
    return float(logsumexp(lam * vp + np.log(w * measure)))


def probe(alpha: float, p: float = 2.0, lam: float = 1.0, d: int = 1, epsilon: float = 1 / 16,
          radius: float = 0.25, n_levels: int = 5, *, time_order: int = 6,
          tol: float = 1e-7) -> BlowupProbeReport:
    """Run the refinement ladder for one amplitude ``alpha``."""
    if d not in (1, 2):
        raise ValueError(f"d must be 1 or 2, got {d}")
    if not alpha >= 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if not 0 < radius <= 0.25:
        raise ValueError(f"radius must lie in (0, 1/4], got {radius}")
    if not 0 < epsilon <= radius ** 2:
        raise ValueError(f"epsilon must lie in (0, radius^2 = {radius ** 2:g}]")
    if n_levels < 3:
        raise ValueError("the ladder needs at least 3 levels")
    t_floor = epsilon * RUNG_FACTOR ** (-n_levels)
    if t_floor < MEHLER_MIN_T:
        raise ValueError(f"ladder reaches t = {t_floor:.3g} below the Mehler floor {MEHLER_MIN_T:g}")

    datum = singular_datum(d, alpha, p)
    evolved = _Evolved(datum, d, tol)
    log_s = {}
    c_samples = []
    max_u0 = 0.0

    def log_space(t):
        nonlocal max_u0
        if t not in log_s:
            rho, wr = _space_nodes(t, radius)
            if alpha > 0:
                v = evolved(t, rho)
                axis = [rho] + [np.zeros_like(rho)] * (d - 1)
                max_u0 = max(max_u0, float(datum(*axis).max()))
                c_samples.append(_kernel_constant(t, rho, v, alpha, p))
            else:
                v = np.zeros_like(rho)
            log_s[t] = _log_space_integral(v, rho, wr, lam, p, d)
        return log_s[t]

    rung_terms = []
    levels, t_mins, logs, oks = [], [], [], []
    for level in range(1, n_levels + 1):
        t_lo = epsilon * RUNG_FACTOR ** (-level)
        ts, wts = _gauss_panels([t_lo, t_lo * RUNG_FACTOR], time_order)
        rung_terms.extend(log_space(t) + math.log(w) for t, w in zip(ts, wts))
        # the slab (0, t_lo) is closed with a rectangle at t_lo
        head = log_space(t_lo) + math.log(t_lo)
        logs.append(float(logsumexp(np.array(rung_terms + [head]))))
        levels.append(level)
        t_mins.append(t_lo)
        oks.append(bool(evolved.ok))

    ratios_log = np.diff(logs)
    divergent = bool(np.all(ratios_log[-2:] >= math.log(2.0)))
    finite = [c for c in c_samples if math.isfinite(c)]
    C = min(finite) if finite else math.nan
    exponent = d / 2 - lam * C * alpha ** p / 2 if finite else math.nan
    alpha0 = ((d + 2) / (C * lam)) ** (1 / p) if finite and C > 0 else math.inf
    return BlowupProbeReport(alpha, p, lam, d, epsilon, radius, levels, t_mins, logs,
                             "divergence-indicated" if divergent else "bounded",
                             C, exponent, alpha0, max_u0, oks)


def _kernel_constant(t, rho, v, alpha, p):
    """``min (v / (alpha (-log 4|x|)^{1/p}))^p`` over the annulus ``sqrt(t)/2 < |x| < sqrt(t)``."""
    sel = (rho > math.sqrt(t) / 2) & (rho < math.sqrt(t)) & (rho < 0.25)
    if not np.any(sel):
        return math.nan
    ref = alpha * (-np.log(4 * rho[sel])) ** (1 / p)
    return float(np.min((v[sel] / ref) ** p))


def verdicts_monotone(reports) -> bool:
    """Once the verdict turns divergent along increasing ``alpha`` it stays divergent."""
    ordered = sorted(reports, key=lambda r: r.alpha)
    seen = False
    for r in ordered:
        div = r.verdict == "divergence-indicated"
        if seen and not div:
            return False
        seen |= div
    return True


def alpha_p_scaling(reports) -> dict | None:
    """Compare the growth of the last-rung log ratio in ``alpha^p`` with its
    asymptotic value ``lam log(3) / 2`` (from ``S(t) ~ t^{(d - lam alpha^p)/2}``).

    Uses the two largest amplitudes; ``None`` if fewer than two are divergent.
    """
    div = sorted((r for r in reports if r.verdict == "divergence-indicated"), key=lambda r: r.alpha)
    if len(div) < 2:
        return None
    lo, hi = div[-2], div[-1]
    rise = (hi.log_integrals[-1] - hi.log_integrals[-2]) - (lo.log_integrals[-1] - lo.log_integrals[-2])
    observed = rise / (hi.alpha ** hi.p - lo.alpha ** lo.p)
    return {"observed": observed, "predicted": hi.lam * math.log(RUNG_FACTOR) / 2,
            "alphas": [lo.alpha, hi.alpha]}
