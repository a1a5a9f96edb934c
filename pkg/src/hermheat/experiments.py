"""Named experiments: each validates its parameters, runs, and returns an
:class:`ExperimentResult` holding a CSV table, a summary and named verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import blowup, fields
from .hermite import (
    SpectralField,
    default_uniform_points,
    hermite_function,
    inverse_transform,
    multi_indices,
    project,
    sample,
    synthesize_uniform,
    total_degree,
    uniform_grid,
)
from .orlicz import (
    NormUnbounded,
    YoungFunction,
    check_embedding_explp_from_lq_linf,
    check_embedding_lq_from_explp,
    check_exp_moment_bound,
    equivalence_e32,
    exp_lp_norm,
    gamma,
    integrate_envelope,
    kappa_envelope,
    lq_norm,
    luxemburg_norm,
    zeta_envelope,
)
from .propagator import (
    apply_semigroup,
    check_beta,
    check_mehler_normalization,
    mehler_apply,
    sigma_beta,
    smoothing_admissible,
    smoothing_ratio_sweep,
)
from .solver import NonlinearitySpec, SolverConfig, decay_fit, feasible_exponents, run


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentResult:
    experiment: str
    config: dict
    columns: list
    rows: list
    results: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())


# --------------------------------------------------------------------------
# Parameter handling

COMMON_KEYS = {"seed", "output"}


@dataclass(frozen=True)
class Experiment:
    name: str
    defaults: dict
    validate: Callable[[dict], None]
    run: Callable[[dict], ExperimentResult]


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _num(cfg, key, lo=-math.inf, hi=math.inf, *, open_lo=False, integer=False):
    v = cfg[key]
    for x in _as_list(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"{key} must be numeric, got {x!r}")
        if integer and (not float(x).is_integer()):
            raise ConfigError(f"{key} must be an integer, got {x!r}")
        if math.isnan(x) or x < lo or (open_lo and x == lo) or x > hi:
            span = f"{'(' if open_lo else '['}{lo:g}, {hi:g}]"
            raise ConfigError(f"{key} = {x!r} is outside {span}")


def _dim(cfg):
    if cfg["d"] not in (1, 2) or isinstance(cfg["d"], bool):
        raise ConfigError(f"d must be 1 or 2, got {cfg['d']!r}")


def _betas(cfg, *, solver=False):
    for b in _as_list(cfg["beta"]):
        try:
            check_beta(float(b), solver=solver)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"beta: {exc}") from None


def resolve(exp: Experiment, raw: dict, seed: int | None = None) -> dict:
    """Merge ``raw`` over the defaults and validate. Raises :class:`ConfigError`."""
    allowed = set(exp.defaults) | COMMON_KEYS
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) for {exp.name}: {', '.join(unknown)}; "
                          f"allowed: {', '.join(sorted(allowed))}")
    cfg = {"seed": 0, **exp.defaults, **raw}
    cfg.pop("output", None)
    if seed is not None:
        cfg["seed"] = seed
    s = cfg["seed"]
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2 ** 64:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {s!r}")
    exp.validate(cfg)
    return cfg


# --------------------------------------------------------------------------
# propagator-check

PROP_TIMES = (0.05, 0.1, 0.3, 1.0, 2.0)


def _validate_propagator(cfg):
    _dim(cfg)
    _betas(cfg)
    _num(cfg, "beta", 0, open_lo=True)
    _num(cfg, "N", 2, 40, integer=True)


def _fd_eigen_error(alpha, d, h=1e-3):
    """Relative max error of the second-difference ``H Phi_alpha`` against ``(2|a|+d) Phi_alpha``."""
    axes = (np.linspace(-4, 4, 41),) if d == 1 else (np.linspace(-3, 3, 9),) * 2
    grids = np.meshgrid(*axes, indexing="ij")

    def phi(*xs):
        out = np.ones_like(xs[0])
        for k, x in zip(alpha, xs):
            out = out * hermite_function(k, x)
        return out

    centre = phi(*grids)
    lap = np.zeros_like(centre)
    for i in range(d):
        plus = [g + (h if j == i else 0.0) for j, g in enumerate(grids)]
        minus = [g - (h if j == i else 0.0) for j, g in enumerate(grids)]
        lap += (phi(*plus) - 2 * centre + phi(*minus)) / h ** 2
    r2 = sum(g * g for g in grids)
    lam = 2 * sum(alpha) + d
    return float(np.max(np.abs(-lap + r2 * centre - lam * centre)) / np.max(np.abs(lam * centre)))


def _random_field(rng, d, n):
    c = rng.standard_normal((n + 1,) * d)
    return SpectralField(c * (SpectralField.zeros(d, n).levels() <= n), n)


def cmd_propagator_check(cfg: dict) -> ExperimentResult:
    d, beta, N = cfg["d"], float(cfg["beta"]), int(cfg["N"])
    rng = np.random.default_rng(cfg["seed"])
    rows, verdicts, results = [], {}, {}

    def add(suite, case, t, err, tol):
        ok = bool(err <= tol)
        rows.append((suite, case, t, err, tol, ok))
        return ok

    ok = True
    for alpha in multi_indices(d, 8):
        ok &= add("eigenrelation", "x".join(map(str, alpha)), 0.0, _fd_eigen_error(alpha, d), 1e-4)
    verdicts["eigenrelation"] = ok

    ok = True
    for j in range(4):
        c = _random_field(rng, d, N)
        for s, t in [(0.1, 0.2), (0.5, 1.5), (0.01, 2.0)]:
            two = apply_semigroup(apply_semigroup(c, s, beta), t, beta)
            one = apply_semigroup(c, s + t, beta)
            err = float(np.max(np.abs(two.coeffs - one.coeffs)))
            ok &= add("semigroup", f"field{j}:s={s:g}", t, err, 1e-14)
    verdicts["semigroup"] = ok

    ok = True
    for t in PROP_TIMES:
        worst = 0.0
        for alpha in multi_indices(d, N):
            out = apply_semigroup(SpectralField.basis(alpha, N), t, beta)
            exact = math.exp(-t * (2 * total_degree(alpha) + d) ** beta)
            worst = max(worst, abs(out[alpha] - exact) / exact)
        ok &= add("eigen-decay", f"|alpha|<={N}", t, worst, 1e-14)
    verdicts["eigen-decay"] = ok

    c = _random_field(rng, d, N)
    same = apply_semigroup(c, 0.0, beta)
    verdicts["identity"] = add("identity", "t=0", 0.0,
                               float(np.max(np.abs(same.coeffs - c.coeffs))), 0.0)

    if beta == 1:
        ok = add("mehler-normalization", f"d={d}", 0.5, check_mehler_normalization(d), 1e-8)
        n_fields, n_band = (8, 12) if d == 1 else (3, 6)
        pts = (np.linspace(-5, 5, 41),) if d == 1 else (np.linspace(-3, 3, 7),) * 2
        worst = 0.0
        for j in range(n_fields):
            g = _random_field(rng, d, n_band)
            for t in PROP_TIMES:
                ker = mehler_apply(g, t, pts).values
                spec = inverse_transform(apply_semigroup(g, t), pts, kind="points").values
                err = float(np.linalg.norm(ker - spec) / np.linalg.norm(spec))
                worst = max(worst, err)
                ok &= add("mehler-vs-spectral", f"field{j}", t, err, 1e-6)
        verdicts["mehler-vs-spectral"] = ok
        results["max_kernel_spectral_discrepancy"] = worst
    else:
        rows.append(("mehler-vs-spectral", "unsupported-path", math.nan, math.nan, math.nan, True))
        results["mehler_note"] = "unsupported-path: the Mehler kernel exists only for beta = 1"
    results["checks"] = len(rows)
    return ExperimentResult("propagator-check", cfg,
                            ["suite", "case", "t", "error", "tolerance", "passed"], rows,
                            results, verdicts)


# --------------------------------------------------------------------------
# smoothing-sweep

SHORT_T = 33
LONG_T = np.linspace(1.0, 5.0, 17)


def _default_degree(d):
    return 48 if d == 1 else 24


def _validate_pairs(cfg):
    ps, qs = _as_list(cfg["p"]), _as_list(cfg["q"])
    if len(ps) != len(qs):
        raise ConfigError(f"p and q must have equal length, got {len(ps)} and {len(qs)}")
    _num(cfg, "p", 1)
    _num(cfg, "q", 1)
    for b in _as_list(cfg["beta"]):
        for p, q in zip(ps, qs):
            if not smoothing_admissible(float(p), float(q), float(b)):
                raise ConfigError(f"(p, q) = ({p}, {q}) is not admissible for beta = {b}")


def _validate_smoothing(cfg):
    _dim(cfg)
    _betas(cfg)
    _num(cfg, "N", 2, 64, integer=True)
    _validate_pairs(cfg)


def _family_fields(d, n):
    return [(name, project(f, d, n)) for name, f in fields.family(d)]


def cmd_smoothing_sweep(cfg: dict) -> ExperimentResult:
    d, N = cfg["d"], int(cfg["N"])
    pairs = [(float(p), float(q)) for p, q in zip(_as_list(cfg["p"]), _as_list(cfg["q"]))]
    betas = [float(b) for b in _as_list(cfg["beta"])]
    short = np.geomspace(1e-3, 1.0, SHORT_T)
    fine = np.geomspace(1e-3, 1.0, 2 * SHORT_T - 1)
    rows, failed = [], []
    sup_change = long_excess = single_mode = 0.0
    for name, g in _family_fields(d, N):
        for beta in betas:
            for p, q in pairs:
                rep = smoothing_ratio_sweep(g, p, q, np.concatenate([short, LONG_T[1:]]), beta)
                ref = smoothing_ratio_sweep(g, p, q, fine, beta)
                s_coarse, s_fine = rep.sup(1e-3, 1.0), ref.sup(1e-3, 1.0)
                change = abs(s_fine - s_coarse) / s_fine
                # the t = 1 row belongs to the short branch; rescale it to the long reference
                at_one = rep.ratios[rep.t_grid == 1.0][0] * math.exp(d ** beta)
                excess = float(np.max(rep.ratios[rep.t_grid > 1.0]) / (1.05 * at_one))
                sup_change = max(sup_change, change)
                long_excess = max(long_excess, excess)
                ok = bool(np.isfinite(s_fine) and change < 0.05 and excess <= 1.0)
                if not ok:
                    failed.append(f"{name}:beta={beta:g}:p={p:g}:q={q:g}")
                for t, ratio, br in zip(rep.t_grid, rep.ratios, rep.branch()):
                    rows.append((name, beta, p, q, t, str(br), rep.sigma_beta, ratio))
                if name == "ground":
                    exact = _ground_ratio(d, beta, p, q, rep.t_grid)
                    single_mode = max(single_mode, float(np.max(np.abs(rep.ratios - exact) / exact)))
    results = {"sup_grid_change": sup_change, "long_branch_excess": long_excess,
               "ground_closed_form_error": single_mode, "failed_cases": failed,
               "sigma_beta": {f"{b:g}:{p:g}:{q:g}": sigma_beta(d, b, p, q)
                              for b in betas for p, q in pairs}}
    verdicts = {"short_sup_stable": sup_change < 0.05, "long_branch_bounded": long_excess <= 1.0,
                "ground_closed_form": single_mode <= 1e-6, "all_cases": not failed}
    return ExperimentResult("smoothing-sweep", cfg,
                            ["field", "beta", "p", "q", "t", "branch", "sigma_beta", "ratio"],
                            rows, results, verdicts)


def _ground_ratio(d, beta, p, q, t):
    sig = sigma_beta(d, beta, p, q)
    ref = np.where(t <= 1, t ** (-sig), np.exp(-t * d ** beta))
    return (np.exp(-t * d ** beta) * fields.ground_state_norm(d, q)
            / (ref * fields.ground_state_norm(d, p)))


# --------------------------------------------------------------------------
# continuity

CONTINUITY_Q = (1.0, 2.0, math.inf)


def _validate_continuity(cfg):
    _dim(cfg)
    _betas(cfg)
    _num(cfg, "beta", 0, 1, open_lo=True)
    _num(cfg, "N", 2, 64, integer=True)
    _num(cfg, "r", 0, open_lo=True)


def cmd_continuity(cfg: dict) -> ExperimentResult:
    d, beta, N = cfg["d"], float(cfg["beta"]), int(cfg["N"])
    g = project(fields.bump(d, float(cfg["r"])), d, N)
    rows = []
    cols = {q: [] for q in CONTINUITY_Q}
    for j in range(17):
        t = 2.0 ** -j
        diff = synthesize_uniform(apply_semigroup(g, t, beta) - g)
        for q in CONTINUITY_Q:
            val = float(lq_norm(diff, q))
            cols[q].append(val)
            rows.append((j, t, q, val))
    verdicts, results = {}, {}
    for q, vals in cols.items():
        tail = np.array(vals[4:])
        key = "inf" if math.isinf(q) else f"{q:g}"
        # exact zeros (g = 0) count as non-increasing
        verdicts[f"decreasing_q{key}"] = bool(np.all(np.diff(tail) < 0) or not np.any(tail))
        verdicts[f"final_below_1e-3_q{key}"] = vals[-1] < 1e-3
        results[f"final_q{key}"] = vals[-1]
    return ExperimentResult("continuity", cfg, ["j", "t", "q", "difference"], rows,
                            results, verdicts)


# --------------------------------------------------------------------------
# norms-audit

GAMMA_POINTS = (0.5, 1.0, 1.5, 2.0, 3.0, 4.5, 7.25, 10.0)
LQ_EXP_PAIRS = ((1, 1), (1, 2), (2, 2), (2, 4), (1, 4))
EXP_LQ_PAIRS = ((1, 1), (2, 1), (2, 2), (3, 2))
# (min, max) of the three-norm equivalence ratio at p = 2 over the test family,
# frozen from the first audited run on the default grids
EQUIV_BASELINE = {1: (1.522808, 1.612346), 2: (1.373708, 1.611398)}
EQUIV_BAND = 0.05


def _validate_norms(cfg):
    _dim(cfg)


def _indicator_case(c, m, p, width=0.002, box=1.5, n=12001):
    f = sample(fields.smoothed_indicator(1, m, c, width), uniform_grid(1, n, box),
               kind="uniform", box=box)
    return float(exp_lp_norm(f, p)), c / math.log1p(1 / m) ** (1 / p)


def cmd_norms_audit(cfg: dict) -> ExperimentResult:
    d = cfg["d"]
    rng = np.random.default_rng(cfg["seed"])
    rows, verdicts = [], {}

    def add(check, case, lhs, rhs, ok):
        rows.append((check, case, lhs, rhs, rhs - lhs, bool(ok)))
        return bool(ok)

    ok = True
    for x in GAMMA_POINTS:
        ref = math.gamma(x)
        ok &= add("gamma", f"x={x:g}", gamma(x), ref, abs(gamma(x) - ref) <= 1e-12 * ref)
    verdicts["gamma"] = ok

    axes = uniform_grid(d, default_uniform_points(d))
    family = [(name, sample(f, axes, kind="uniform")) for name, f in fields.family(d)]
    phis = [YoungFunction.exp_lp(1), YoungFunction.exp_lp(2), YoungFunction.exp_lp_reduced(2),
            YoungFunction.power(3)]

    ok = True
    for name, f in family:
        for phi in phis:
            base = float(luxemburg_norm(f, phi))
            scaled = float(luxemburg_norm(f * 2.5, phi))
            ok &= add("homogeneity", f"{name}:{phi.kind}{phi.parameter:g}", scaled, 2.5 * base,
                      abs(scaled - 2.5 * base) <= 1e-7 * 2.5 * base)
    verdicts["homogeneity"] = ok

    ok = True
    for name, f in family:
        for q in (1.0, 2.0, 3.5):
            lux, lq = float(luxemburg_norm(f, YoungFunction.power(q))), float(lq_norm(f, q))
            ok &= add("power-kind", f"{name}:q={q:g}", lux, lq, abs(lux - lq) <= 1e-7 * lq)
    verdicts["power_kind"] = ok

    ok = True
    for c in (1.0, 2.5):
        for m in (0.5, 1.0, 2.0):
            for p in (1.0, 2.0):
                got, exact = _indicator_case(c, m, p)
                ok &= add("indicator", f"c={c:g}:m={m:g}:p={p:g}", got, exact,
                          abs(got - exact) <= 0.01 * exact)
    verdicts["indicator_closed_form"] = ok

    ok = True
    for name, f in family:
        for p, q in LQ_EXP_PAIRS:
            rep = check_embedding_lq_from_explp(f, p, q)
            ok &= add("Lq<=Gamma*expLp", f"{name}:p={p}:q={q}", rep.lhs, rep.rhs, rep.passed)
        for p, q in EXP_LQ_PAIRS:
            rep = check_embedding_explp_from_lq_linf(f, p, q)
            ok &= add("expLp<=(Lq+Linf)", f"{name}:p={p}:q={q}", rep.lhs, rep.rhs, rep.passed)
    verdicts["embeddings"] = ok

    ok = True
    for k in range(20):
        name, f = family[rng.integers(len(family))]
        u = f * float(rng.uniform(0.2, 3.0))
        p = float(rng.choice([1.0, 2.0]))
        q = float(rng.uniform(1.0, 4.0))
        K = float(exp_lp_norm(u, p)) * float(rng.uniform(1.0, 1.5))
        lam = float(rng.uniform(0.1, 1.0)) / (q * K ** p)
        rep = check_exp_moment_bound(u, lam, p, q, K)
        ok &= add("exp-moment", f"draw{k}:{name}:p={p:g}:q={q:.4g}", rep.lhs, rep.rhs, rep.passed)
    verdicts["exp_moment"] = ok

    ratios = {}
    for name, f in family:
        ratios[name] = equivalence_e32(f, 2.0).ratio
        rows.append(("equivalence-ratio", name, ratios[name], math.nan, math.nan, True))
    lo, hi = min(ratios.values()), max(ratios.values())
    b_lo, b_hi = EQUIV_BASELINE[d]
    verdicts["equivalence_band"] = add(
        "equivalence-band", f"d={d}", hi, b_hi,
        abs(lo - b_lo) <= EQUIV_BAND * b_lo and abs(hi - b_hi) <= EQUIV_BAND * b_hi)
    trio = [ratios[k] for k in ("ground", "ground_plus_2", "indicator")]
    verdicts["equivalence_spread"] = add("equivalence-spread", "ground,ground_plus_2,indicator",
                                         max(trio) / min(trio), 10.0, max(trio) / min(trio) <= 10)
    results = {"equivalence_band": [lo, hi], "equivalence_baseline": list(EQUIV_BASELINE[d]),
               "checks": len(rows)}
    return ExperimentResult("norms-audit", cfg, ["check", "case", "lhs", "rhs", "margin", "passed"],
                            rows, results, verdicts)


# --------------------------------------------------------------------------
# envelope-audit

ENVELOPE_PANELS = (4, 8, 16, 32)
# (envelope, p, r, d, beta) defaults: one parameter set inside each regime
ENVELOPE_CASES = (("kappa", 2.0, 3.0, 5, 1.0), ("zeta", 2.0, 3.0, 4, 1.0))


def _validate_envelope(cfg):
    keys = ("p", "r", "d", "beta")
    given = [cfg[k] is not None for k in keys]
    if any(given) and not all(given):
        raise ConfigError("envelope-audit needs all of p, r, d, beta or none of them")
    if all(given):
        for k in keys:
            _num(cfg, k, 0, open_lo=True)
        if _envelope_kind(cfg) is None:
            raise ConfigError("parameters fit neither envelope regime: kappa needs "
                              "d/(2 beta) > p/(p-1), zeta needs d/(2 beta) = p/(p-1); "
                              "both need r > d/(2 beta), p > 1, 0 < beta <= 1")


def _envelope_kind(cfg):
    p, r, d, beta = (float(cfg[k]) for k in ("p", "r", "d", "beta"))
    for name, func in (("kappa", kappa_envelope), ("zeta", zeta_envelope)):
        try:
            func(1.0, p, r, d, beta)
            return name
        except ValueError:
            continue
    return None


def cmd_envelope_audit(cfg: dict) -> ExperimentResult:
    if cfg["p"] is None:
        cases = ENVELOPE_CASES
    else:
        cases = ((_envelope_kind(cfg), float(cfg["p"]), float(cfg["r"]), int(cfg["d"]),
                  float(cfg["beta"])),)
    funcs = {"kappa": kappa_envelope, "zeta": zeta_envelope}
    rows, results, verdicts = [], {}, {}
    for name, p, r, d, beta in cases:
        vals = []
        for panels in ENVELOPE_PANELS:
            val = integrate_envelope(lambda t: funcs[name](t, p, r, d, beta), panels=panels)
            vals.append(val)
            rows.append((name, p, r, d, beta, panels, val))
        change = abs(vals[-1] - vals[-2]) / abs(vals[-1])
        results[name] = {"integral": vals[-1], "last_refinement_change": change}
        verdicts[f"{name}_finite"] = bool(np.all(np.isfinite(vals)))
        verdicts[f"{name}_stable"] = change <= 0.01
    return ExperimentResult("envelope-audit", cfg,
                            ["envelope", "p", "r", "d", "beta", "panels_per_decade", "integral"],
                            rows, results, verdicts)


# --------------------------------------------------------------------------
# decay

DUHAMEL_TIMES = (1e-3, 1e-1)


def _validate_decay(cfg):
    _dim(cfg)
    _betas(cfg, solver=True)
    _num(cfg, "p", 1, open_lo=True)
    _num(cfg, "m", 1, open_lo=True)
    _num(cfg, "a", 1, open_lo=True)
    _num(cfg, "N", 2, 64, integer=True)
    _num(cfg, "dt", 0, open_lo=True)
    _num(cfg, "t_end", 0, open_lo=True)
    _num(cfg, "epsilon", 0)
    _num(cfg, "lambda", 0)
    # small data: the global result needs ||u0||_{exp L^p} below a threshold
    _num(cfg, "alpha", 0, 1e-3, open_lo=True)
    try:
        plan = feasible_exponents(float(cfg["p"]), float(cfg["m"]), cfg["d"],
                                  float(cfg["beta"]), float(cfg["a"]))
    except ValueError as exc:
        raise ConfigError(f"infeasible exponents: {exc}") from None
    if not plan.feasible:
        raise ConfigError(f"infeasible exponents: {plan.flags.get('reason')}")
    steps = cfg["t_end"] / cfg["dt"]
    if abs(steps - round(steps)) > 1e-9 * steps:
        raise ConfigError("t_end must be an integer multiple of dt")
    for t in DUHAMEL_TIMES:
        if abs(t / cfg["dt"] - round(t / cfg["dt"])) > 1e-9 or t > cfg["t_end"]:
            raise ConfigError(f"dt must divide {t:g} and t_end must reach it")


def _decay_times(t_end, dt):
    ts = np.geomspace(dt, t_end, 40)
    ts = np.unique(np.concatenate([np.round(ts / dt) * dt, DUHAMEL_TIMES, [t_end]]))
    return [float(t) for t in ts if t > 0]


def _decay_run(cfg, u0, dt, scale, p, record):
    spec = NonlinearitySpec.mixed_power(float(cfg["m"]), p, float(cfg["lambda"]), scale=scale)
    scfg = SolverConfig(cfg["d"], float(cfg["beta"]), int(cfg["N"]), dt, float(cfg["t_end"]),
                        spec, orlicz_p=p, norm_exponents=(float(cfg["a"]),), record_times=record)
    return run(u0, scfg)


def cmd_decay(cfg: dict) -> ExperimentResult:
    d, beta, p, a = cfg["d"], float(cfg["beta"]), float(cfg["p"]), float(cfg["a"])
    dt, t_end = float(cfg["dt"]), float(cfg["t_end"])
    plan = feasible_exponents(p, float(cfg["m"]), d, beta, a)
    sigma = plan.sigma
    N = int(cfg["N"])
    ground = project(fields.ground_state(d), d, N)
    unit = float(exp_lp_norm(synthesize_uniform(ground), p))
    amp = float(cfg["alpha"]) / unit
    u0 = ground * amp
    record = _decay_times(t_end, dt)

    main = _decay_run(cfg, u0, dt, float(cfg["epsilon"]), p, record)
    half = _decay_run(cfg, u0, dt / 2, float(cfg["epsilon"]), p, record)
    control = _decay_run(cfg, u0, dt, 0.0, p, record)
    window = (record[0], t_end)
    key = f"L{a:g}"
    rows = []
    duhamel = {}
    for s in main.samples:
        if s.t == 0:
            continue
        lin = apply_semigroup(u0, s.t, beta)
        diff = float(exp_lp_norm(synthesize_uniform(s.field - lin), p))
        duhamel[round(s.t / dt)] = diff
        la = s.diagnostics[key]
        rows.append((s.t, la, s.t ** sigma * la, s.diagnostics["expL"], diff))

    results = {"sigma": sigma, "plan": {"case": plan.case, "r": plan.r, "q": plan.q,
                                         "a_range": list(plan.a_range)},
               "u0_amplitude": amp, "verdict": main.verdict, "message": main.message}
    verdicts = {"completed": main.verdict == "completed" and half.verdict == "completed"}
    if verdicts["completed"]:
        fit = decay_fit(main, a, window, sigma)
        fit_half = decay_fit(half, a, window, sigma)
        ctrl = decay_fit(control, a, window, sigma)
        ts = np.array([s.t for s in control.samples if window[0] <= s.t <= window[1]])
        closed = float(np.max(ts ** sigma * amp * np.exp(-ts * d ** beta)
                              * fields.ground_state_norm(d, a)))
        d_lo, d_hi = (duhamel[round(t / dt)] for t in DUHAMEL_TIMES)
        results.update(sup_stat=fit.sup_stat, sup_stat_half_dt=fit_half.sup_stat,
                       slope=fit.slope, slope_ci=list(fit.slope_ci),
                       control_sup_stat=ctrl.sup_stat, control_closed_form=closed,
                       duhamel_small_t=d_lo, duhamel_ref_t=d_hi,
                       duhamel_rate_exponent=(1 - d / (2 * beta * plan.q)))
        verdicts["sup_stat_finite"] = math.isfinite(fit.sup_stat)
        verdicts["dt_halving_stable"] = abs(fit.sup_stat - fit_half.sup_stat) <= 0.1 * fit_half.sup_stat
        verdicts["control_closed_form"] = abs(ctrl.sup_stat - closed) <= 1e-6 * closed
        verdicts["duhamel_vanishes"] = d_lo <= 2e-2 * d_hi
    return ExperimentResult("decay", cfg,
                            ["t", f"L{a:g}", "t^sigma*L", "expL", "duhamel_expL"], rows,
                            results, verdicts)


# --------------------------------------------------------------------------
# blowup-probe


def _validate_blowup(cfg):
    _dim(cfg)
    if float(cfg["beta"]) != 1.0:
        raise ConfigError(f"blowup-probe requires beta = 1, got {cfg['beta']}")
    _num(cfg, "alpha", 0, open_lo=True)
    _num(cfg, "p", 1, open_lo=True)
    _num(cfg, "lambda", 0, open_lo=True)
    _num(cfg, "r", 0, 0.25, open_lo=True)
    _num(cfg, "epsilon", 0, float(cfg["r"]) ** 2, open_lo=True)
    floor = float(cfg["epsilon"]) * blowup.RUNG_FACTOR ** -5
    if floor < 1e-4:
        raise ConfigError(f"epsilon too small: the ladder would reach t = {floor:.3g} < 1e-4")


def cmd_blowup_probe(cfg: dict) -> ExperimentResult:
    alphas = sorted(float(a) for a in _as_list(cfg["alpha"]))
    p, lam = float(cfg["p"]), float(cfg["lambda"])
    reports = [blowup.probe(a, p, lam, cfg["d"], float(cfg["epsilon"]), float(cfg["r"]))
               for a in alphas]
    rows = []
    for rep in reports:
        for lev, t, li, ok in zip(rep.levels, rep.t_min, rep.log_integrals, rep.quadrature_ok):
            rows.append((rep.alpha, lev, t, li, li / math.log(10), ok, rep.verdict))
    results = {"note": "divergence is indicated, not proven: I_l must grow by a factor >= 2 "
                       "on each of the last two ladder rungs",
               "probes": [{"alpha": r.alpha, "verdict": r.verdict, "ratios": r.ratios,
                           "measured_C": r.measured_C, "exponent": r.exponent,
                           "alpha0": r.alpha0, "max_sampled_u0": r.max_sampled_u0,
                           "quadrature_ok": r.quadrature_ok} for r in reports]}
    verdicts = {"monotone_in_alpha": blowup.verdicts_monotone(reports),
                "divergent_rungs_nondecreasing": all(
                    np.all(np.diff(r.log_integrals) >= 0) for r in reports
                    if r.verdict == "divergence-indicated")}
    scaling = blowup.alpha_p_scaling(reports)
    if scaling is not None:
        results["alpha_p_slope"] = scaling
        verdicts["alpha_p_scaling"] = abs(scaling["observed"] / scaling["predicted"] - 1) <= 0.25
    return ExperimentResult("blowup-probe", cfg,
                            ["alpha", "level", "t_min", "log_I", "log10_I", "quadrature_ok",
                             "verdict"], rows, results, verdicts)


# --------------------------------------------------------------------------
# Registry

EXPERIMENTS = {e.name: e for e in (
    Experiment("propagator-check", {"d": 1, "beta": 1.0, "N": 24},
               _validate_propagator, cmd_propagator_check),
    Experiment("smoothing-sweep", {"d": 1, "beta": [0.5, 1.0], "N": 48,
                                   "p": [1.0, 1.0, 2.0, 2.0], "q": [math.inf, 2.0, 2.0, math.inf]},
               _validate_smoothing, cmd_smoothing_sweep),
    Experiment("continuity", {"d": 1, "beta": 1.0, "N": 48, "r": 3.0},
               _validate_continuity, cmd_continuity),
    Experiment("norms-audit", {"d": 1}, _validate_norms, cmd_norms_audit),
    Experiment("envelope-audit", {"p": None, "r": None, "d": None, "beta": None},
               _validate_envelope, cmd_envelope_audit),
    Experiment("decay", {"d": 2, "beta": 1.0, "p": 2.0, "m": 3.0, "a": 5.0, "N": 24,
                         "dt": 1e-3, "t_end": 5.0, "alpha": 1e-3, "epsilon": 1.0,
                         "lambda": 1.0},
               _validate_decay, cmd_decay),
    Experiment("blowup-probe", {"d": 1, "beta": 1.0, "p": 2.0, "lambda": 1.0,
                                "alpha": [0.1, 5.0, 10.0, 20.0], "epsilon": 1 / 16, "r": 0.25},
               _validate_blowup, cmd_blowup_probe),
)}


def run_experiment(name: str, raw: dict, seed: int | None = None) -> ExperimentResult:
    exp = EXPERIMENTS[name]
    cfg = resolve(exp, raw, seed)
    return exp.run(cfg)
