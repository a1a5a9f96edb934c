"""Mild solutions of ``u_t + H^beta u = f(u)`` by exponential trapezoid + Picard.

One step of length ``h`` solves the fixed point

    u_{n+1} = E u_n + h/2 (E F(u_n) + F(u_{n+1})),    E = e^{-h H^beta},

by Picard iteration seeded with ``E (u_n + h F(u_n))``. The linear part is
applied exactly in spectral space; ``F`` is evaluated pointwise on an
oversampled Gauss-Hermite grid and projected back.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .hermite import (
    SpectralField,
    forward_transform,
    gauss_grid,
    synthesize_gauss,
    synthesize_uniform,
)
from .orlicz import exp_lp_norm, lq_norm
from .propagator import apply_semigroup, check_beta, multipliers

log = logging.getLogger(__name__)

EXP_CLAMP = 700.0
FAMILIES = ("pure_power", "exp_full", "mixed_power", "exp_m1", "exp_taylor")


class NonConvergent(RuntimeError):
    """Picard iteration did not converge; blow-up is suspected."""


class UnderResolved(RuntimeError):
    """Too much energy has reached the top spectral levels."""


# --------------------------------------------------------------------------
# Nonlinearities


@dataclass(frozen=True)
class NonlinearitySpec:
    """``f(u) = sign * scale * g(u)`` with ``g`` one of

    ``pure_power``   u |u|^{m-1}
    ``exp_full``     u e^{lam |u|^p}
    ``mixed_power``  u |u|^{m-1} e^{lam |u|^q}
    ``exp_m1``       e^{|u|^q} - 1
    ``exp_taylor``   e^u - 1 - u
    """

    family: str
    m: float = 1.0
    p: float = 2.0
    q: float = 2.0
    lam: float = 1.0
    sign: int = 1
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown nonlinearity family {self.family!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.scale < 0:
            raise ValueError("scale must be >= 0")
        if self.m < 1 or self.q < 1 or self.p < 1 or self.lam < 0:
            raise ValueError("need m >= 1, p >= 1, q >= 1, lam >= 0")
        if eval_nonlinearity(self, 0.0) != 0.0:
            raise ValueError("f(0) must vanish")

    @classmethod
    def pure_power(cls, m, **kw):
        return cls("pure_power", m=m, **kw)

    @classmethod
    def exp_full(cls, p, lam=1.0, **kw):
        return cls("exp_full", p=p, lam=lam, **kw)

    @classmethod
    def mixed_power(cls, m, q, lam=1.0, **kw):
        return cls("mixed_power", m=m, q=q, lam=lam, **kw)

    @classmethod
    def exp_m1(cls, q, **kw):
        return cls("exp_m1", q=q, **kw)

    @classmethod
    def exp_taylor(cls, **kw):
        return cls("exp_taylor", **kw)

    @property
    def growth_exponent(self) -> float:
        """Exponent of ``|u|`` inside the exponential (0 for pure powers)."""
        return {"pure_power": 0.0, "exp_full": self.p, "mixed_power": self.q,
                "exp_m1": self.q, "exp_taylor": 1.0}[self.family]

    @property
    def effective_m(self) -> float:
        """Power of ``|u|`` multiplying the exponential in ``|f'(u)|``, plus one."""
        return {"pure_power": self.m, "exp_full": 1.0, "mixed_power": self.m,
                "exp_m1": self.q, "exp_taylor": 2.0}[self.family]

    def classes(self, p: float, d: int, beta: float) -> frozenset:
        """Which of the Lipschitz-growth classes ``nflw`` / ``nfgw`` this ``f``
        belongs to for Orlicz exponent ``p``."""
        out = set()
        if self.growth_exponent <= p:
            out.add("nflw")
            if self.family != "exp_full" and self.effective_m >= 1 + 2 * p * beta / d:
                out.add("nfgw")
        return frozenset(out)

    def lipschitz_form(self, radius: float):
        """Closed-form ``(C, w)`` with ``|f(u)-f(v)| <= C |u-v| (w(u) + w(v))``
        for ``|u|, |v| <= radius``."""
        R = float(radius)
        k = self.scale
        fam = self.family
        if fam == "pure_power":
            return k * self.m, lambda s: np.abs(s) ** (self.m - 1)
        if fam == "exp_full":
            return (k * (1 + self.lam * self.p * R ** self.p),
                    lambda s: np.exp(self.lam * np.abs(s) ** self.p))
        if fam == "mixed_power":
            return (k * (self.m + self.lam * self.q * R ** self.q),
                    lambda s: np.abs(s) ** (self.m - 1) * np.exp(self.lam * np.abs(s) ** self.q))
        if fam == "exp_m1":
            return k * self.q, lambda s: np.abs(s) ** (self.q - 1) * np.exp(np.abs(s) ** self.q)
        return k * 1.0, lambda s: np.abs(s) * np.exp(np.abs(s))


def eval_nonlinearity(spec: NonlinearitySpec, v, with_saturation: bool = False):
    """Pointwise ``f(v)``; exponent arguments are clamped at 700.

    With ``with_saturation=True`` also returns whether the clamp was hit.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _eval(spec, np.asarray(v, dtype=float), with_saturation)


def _eval(spec, v, with_saturation):
    a = np.abs(v)
    fam = spec.family
    if fam == "pure_power":
        arg = np.zeros_like(v)
        base = v * a ** (spec.m - 1)
    elif fam == "exp_full":
        arg = spec.lam * a ** spec.p
        base = v
    elif fam == "mixed_power":
        arg = spec.lam * a ** spec.q
        base = v * a ** (spec.m - 1)
    elif fam == "exp_m1":
        arg = a ** spec.q
        base = None
    else:
        arg = v
        base = None
    saturated = bool(np.any(arg > EXP_CLAMP))
    arg = np.minimum(arg, EXP_CLAMP)
    if fam == "exp_m1":
        out = np.expm1(arg)
    elif fam == "exp_taylor":
        small = np.abs(arg) < 1e-3
        series = arg * arg * (0.5 + arg * (1 / 6 + arg / 24))
        out = np.where(small, series, np.expm1(arg) - arg)
    else:
        out = base * np.exp(arg)
    out = spec.sign * spec.scale * out
    if out.ndim == 0:
        out = float(out)
    return (out, saturated) if with_saturation else out


def lipschitz_check(spec: NonlinearitySpec, radius: float = 2.0, samples: int = 2000,
                    seed: int = 0) -> float:
    """Largest observed ``|f(u)-f(v)| / (C |u-v| (w(u)+w(v)))`` on random pairs.

    Values ``<= 1`` confirm the closed-form Lipschitz bound.
    """
    rng = np.random.default_rng(seed)
    u, v = rng.uniform(-radius, radius, (2, samples))
    C, w = spec.lipschitz_form(radius)
    lhs = np.abs(eval_nonlinearity(spec, u) - eval_nonlinearity(spec, v))
    rhs = C * np.abs(u - v) * (w(u) + w(v))
    ok = rhs > 0
    return float(np.max(lhs[ok] / rhs[ok])) if np.any(ok) else 0.0


# --------------------------------------------------------------------------
# Exponent feasibility


@dataclass
class ExponentPlan:
    p: float
    m: float
    a: float
    d: int
    beta: float
    case: int
    a_range: tuple
    sigma: float
    r: float | None
    q: float | None
    flags: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.r is not None


def _pos(z: float) -> float:
    return max(z, 0.0)


def feasible_exponents(p: float, m: float, d: int, beta: float, a: float) -> ExponentPlan:
    """Validate the global-existence exponents and pick an admissible ``(r, q)``.

    Raises ``ValueError`` naming the first violated inequality.
    """
    check_beta(beta, solver=True)
    if not p > 1:
        raise ValueError(f"need p > 1, got p = {p}")
    if not m >= 1 + 2 * p * beta / d:
        raise ValueError(f"need m >= 1 + 2 p beta / d = {1 + 2 * p * beta / d:g}, got m = {m}")
    if not p <= d * (m - 1) / (2 * beta):
        raise ValueError(f"need p <= d (m-1) / (2 beta) = {d * (m - 1) / (2 * beta):g}, got p = {p}")
    if not m >= p:
        raise ValueError(f"need m >= p, got m = {m} < p = {p}")
    D = d / (2 * beta)
    P = p / (p - 1)
    pos = _pos(2 - m)
    upper = math.inf if pos == 0 else D * (m - 1) / pos
    if math.isclose(D, P, rel_tol=1e-12):
        case, lower, lower_txt = 2, D * (m - 1), "d(m-1)/(2 beta)"
    elif D > P:
        case, lower, lower_txt = 1, D * (m - 1), "d(m-1)/(2 beta)"
    else:
        case, lower, lower_txt = 3, P * (m - 1), "p(m-1)/(p-1)"
        if not pos < D / P:
            raise ValueError(f"case (3) needs (2-m)_+ < d(p-1)/(2 beta p) = {D / P:g}, got {pos:g}")
    if not a > lower:
        raise ValueError(f"a = {a:g} <= {lower_txt} = {lower:g} violates the case ({case}) lower bound")
    if not a < upper:
        raise ValueError(f"a = {a:g} >= d(m-1)/(2 beta (2-m)_+) = {upper:g} violates the case ({case}) upper bound")
    sigma = 1 / (m - 1) - D / a
    r, q, flags = _choose_rq(p, m, a, D, sigma)
    flags.update(case=case, sigma_positive=sigma > 0)
    return ExponentPlan(p, m, a, d, beta, case, (lower, upper), sigma, r, q, flags)


def _theta_ok(p, m, a, D, sigma, q, k_max=400):
    gap = 1 - D / q
    for k in range(k_max + 1):
        n = p * k + m - 1
        theta = gap / (sigma * n)
        if not 0 < theta < 1:
            return False
        rest = 1 / (q * n) - theta / a
        if rest <= 0 or (1 - theta) / rest < p:
            return False
        if not sigma * (1 + theta * n) < 1:
            return False
    return True


def _choose_rq(p, m, a, D, sigma):
    """Scan ``q`` for one pair meeting every interpolation constraint."""
    flags = {}
    if sigma <= 0:
        flags["reason"] = "sigma <= 0"
        return None, None, flags
    lo = max(1.0, D)
    hi = min(D / sigma, a / (m - 1))
    if a < math.inf:
        # r > 1 requires 1/a + 1/q < 1
        lo = max(lo, a / (a - 1) if a > 1 else math.inf)
    candidates = [q for q in np.linspace(lo, hi, 201)[1:-1] if _theta_ok(p, m, a, D, sigma, q)] \
        if hi > lo else []
    if not candidates:
        flags["reason"] = f"no q in ({lo:g}, {hi:g}) satisfies the interpolation constraints"
        return None, None, flags
    q = float(candidates[len(candidates) // 2])
    r = 1 / (1 / a + 1 / q)
    flags.update(q_interval=(lo, hi), theta0=(1 - D / q) / (sigma * (m - 1)),
                 smoothing_gap=D * (1 / r - 1 / a))
    return r, q, flags


# --------------------------------------------------------------------------
# Configuration and state


@dataclass
class SolverConfig:
    d: int
    beta: float
    N: int
    dt: float
    t_end: float
    nonlinearity: NonlinearitySpec
    picard_tol: float = 1e-10
    picard_max: int = 50
    blowup_norm_cap: float = 1e8
    grid_order: int | None = None
    orlicz_p: float | None = None
    norm_exponents: Sequence[float] = ()
    record_every: int = 1
    record_times: Sequence[float] | None = None
    n_uniform: int | None = None
    tail_fraction: float = 0.1
    classes: frozenset = field(init=False, default=frozenset())

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {self.d}")
        self.beta = check_beta(self.beta, solver=True)
        if not (isinstance(self.N, (int, np.integer)) and 2 <= self.N <= 128):
            raise ValueError(f"N must be an integer in [2, 128], got {self.N}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError("t_end must be an integer multiple of dt")
        if self.grid_order is None:
            self.grid_order = max(4 * self.N, 2 * self.N + 1)
        if not 2 * self.N + 1 <= self.grid_order <= 512:
            raise ValueError(f"grid_order must lie in [2N+1, 512], got {self.grid_order}")
        if self.picard_max < 1 or self.picard_tol <= 0:
            raise ValueError("need picard_max >= 1 and picard_tol > 0")
        p = self.orlicz_p if self.orlicz_p is not None else max(self.nonlinearity.growth_exponent, 1.0)
        self.classes = self.nonlinearity.classes(p, self.d, self.beta)

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)


@dataclass
class Sample:
    t: float
    field: SpectralField
    diagnostics: dict


@dataclass
class Trajectory:
    config: SolverConfig
    samples: list = field(default_factory=list)
    verdict: str = "completed"
    message: str = ""

    def append(self, t: float, u: SpectralField, diagnostics: dict):
        if self.samples and not t > self.samples[-1].t:
            raise ValueError("trajectory times must increase strictly")
        self.samples.append(Sample(t, u, diagnostics))

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def series(self, key: str) -> np.ndarray:
        return np.array([s.diagnostics.get(key, np.nan) for s in self.samples], dtype=float)


class _Workspace:
    def __init__(self, cfg: SolverConfig, dt: float):
        self.cfg = cfg
        self.E = multipliers(cfg.d, cfg.N, dt, cfg.beta)
        self.grid = gauss_grid(cfg.d, cfg.grid_order)
        self.dt = dt
        self.saturated = False

    def F(self, c: SpectralField) -> SpectralField:
        phys = synthesize_gauss(c, self.cfg.grid_order)
        vals, sat = eval_nonlinearity(self.cfg.nonlinearity, phys.values, with_saturation=True)
        self.saturated |= sat
        if not np.all(np.isfinite(vals)):
            raise NonConvergent("nonlinearity overflowed")
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                return forward_transform(phys.with_values(vals), self.cfg.N)
            except ValueError as exc:
                raise NonConvergent(f"nonlinear term not representable: {exc}") from None

    def lin(self, c: SpectralField) -> SpectralField:
        return c.with_coeffs(c.coeffs * self.E)


_WS_CACHE: dict = {}


def _workspace(cfg: SolverConfig, dt: float) -> _Workspace:
    key = (id(cfg), dt)
    ws = _WS_CACHE.get(key)
    if ws is None or ws.cfg is not cfg:
        _WS_CACHE.clear()
        ws = _WS_CACHE[key] = _Workspace(cfg, dt)
    return ws


def _check_tail(u: SpectralField, cfg: SolverConfig) -> float:
    energy = u.coeffs ** 2
    total = energy.sum()
    if total == 0:
        return 0.0
    frac = float(energy[u.levels() > cfg.N - 2].sum() / total)
    if frac > cfg.tail_fraction:
        raise UnderResolved(f"spectral tail holds {frac:.1%} of the energy")
    return frac


def step(u: SpectralField, cfg: SolverConfig, dt: float | None = None):
    """Advance one exponential-trapezoid step. Returns ``(u_next, diagnostics)``."""
    h = cfg.dt if dt is None else float(dt)
    if h < 0:
        raise ValueError("dt must be >= 0")
    if h == 0:
        return u, {"picard_iters": 0, "residual": 0.0, "saturated": False, "tail_fraction": 0.0}
    if u.dim != cfg.d or u.max_degree != cfg.N:
        raise ValueError("state does not match the configured dimension / degree")
    ws = _workspace(cfg, h)
    ws.saturated = False
    if cfg.nonlinearity.scale == 0:
        nxt = ws.lin(u)
        return nxt, {"picard_iters": 0, "residual": 0.0, "saturated": False,
                     "tail_fraction": _check_tail(nxt, cfg)}
    Fn = ws.F(u)
    base = ws.lin(u + (0.5 * h) * Fn)
    cur = ws.lin(u + h * Fn)
    residual = math.inf
    for it in range(1, cfg.picard_max + 1):
        nxt = base + (0.5 * h) * ws.F(cur)
        residual = (nxt - cur).l2_norm()
        cur = nxt
        if not math.isfinite(residual):
            break
        if residual < cfg.picard_tol:
            return cur, {"picard_iters": it, "residual": residual, "saturated": ws.saturated,
                         "tail_fraction": _check_tail(cur, cfg)}
    raise NonConvergent(f"Picard iteration stalled at residual {residual:.3e} after {cfg.picard_max} iterations")


def _grid_sup(u: SpectralField, cfg: SolverConfig) -> float:
    return float(np.max(np.abs(synthesize_gauss(u, cfg.grid_order).values)))


def _diagnostics(u: SpectralField, cfg: SolverConfig, base: dict) -> dict:
    diag = dict(base)
    if cfg.norm_exponents or cfg.orlicz_p is not None:
        phys = synthesize_uniform(u, cfg.n_uniform)
        for a in cfg.norm_exponents:
            diag[f"L{a:g}"] = float(lq_norm(phys, a))
        if cfg.orlicz_p is not None:
            diag["expL"] = float(exp_lp_norm(phys, cfg.orlicz_p))
    return diag


def _record_steps(cfg: SolverConfig) -> set:
    n = cfg.n_steps
    if cfg.record_times is None:
        steps = set(range(0, n + 1, max(cfg.record_every, 1)))
    else:
        steps = {min(max(round(t / cfg.dt), 0), n) for t in cfg.record_times}
    steps.update({0, n})
    return steps


def run(u0: SpectralField, cfg: SolverConfig) -> Trajectory:
    """Integrate to ``t_end``; failures end the run with a verdict instead of raising."""
    traj = Trajectory(cfg)
    record = _record_steps(cfg)
    u = u0
    traj.append(0.0, u, _diagnostics(u, cfg, {"picard_iters": 0, "residual": 0.0,
                                              "saturated": False, "grid_sup": _grid_sup(u, cfg)}))
    saturated = False
    for k in range(1, cfg.n_steps + 1):
        t = k * cfg.dt
        try:
            u, info = step(u, cfg)
        except NonConvergent as exc:
            traj.verdict, traj.message = "blowup_suspected", f"t={t:.6g}: {exc}"
            break
        except UnderResolved as exc:
            traj.verdict, traj.message = "under_resolved", f"t={t:.6g}: {exc}"
            break
        saturated |= info["saturated"]
        sup = _grid_sup(u, cfg)
        info["grid_sup"] = sup
        if sup > cfg.blowup_norm_cap:
            traj.append(t, u, info)
            traj.verdict = "blowup_suspected"
            traj.message = f"t={t:.6g}: grid sup {sup:.3e} exceeds cap {cfg.blowup_norm_cap:.3e}"
            break
        if k in record:
            traj.append(t, u, _diagnostics(u, cfg, info))
    if traj.verdict == "completed" and saturated:
        traj.verdict, traj.message = "under_resolved", "exponential clamp was hit"
    log.debug("run finished: %s %s", traj.verdict, traj.message)
    return traj


def linear_reference(u0: SpectralField, cfg: SolverConfig, t: float) -> SpectralField:
    return apply_semigroup(u0, t, cfg.beta)


# --------------------------------------------------------------------------
# Decay statistics


@dataclass
class DecayFit:
    sup_stat: float
    slope: float
    slope_ci: tuple
    sigma: float
    n_points: int


def decay_fit(traj: Trajectory, a: float, window: tuple, sigma: float | None = None,
              min_points: int = 10) -> DecayFit:
    """``sup t^sigma ||u(t)||_a`` over the window and the log-log slope of ``||u(t)||_a``."""
    cfg = traj.config
    if sigma is None:
        sigma = 1 / (cfg.nonlinearity.m - 1) - cfg.d / (2 * cfg.beta * a) \
            if cfg.nonlinearity.m > 1 else 0.0
    t1, t2 = window
    pts = [s for s in traj.samples if t1 <= s.t <= t2 and s.t > 0]
    if len(pts) < min_points:
        raise ValueError(f"decay fit needs >= {min_points} samples in {window}, found {len(pts)}")
    key = f"L{a:g}"
    t = np.array([s.t for s in pts])
    norms = np.array([s.diagnostics[key] if key in s.diagnostics
                      else float(lq_norm(synthesize_uniform(s.field, cfg.n_uniform), a))
                      for s in pts])
    sup_stat = float(np.max(t ** sigma * norms))
    if np.all(norms > 0):
        fit = stats.linregress(np.log(t), np.log(norms))
        half = stats.t.ppf(0.975, len(t) - 2) * fit.stderr
        slope, ci = float(fit.slope), (float(fit.slope - half), float(fit.slope + half))
    else:
        slope, ci = 0.0, (0.0, 0.0)
    return DecayFit(sup_stat, slope, ci, sigma, len(pts))
