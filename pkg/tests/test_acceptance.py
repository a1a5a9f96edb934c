"""The ten acceptance criteria at their stated tolerances and runtime budgets."""

import math
import time

import numpy as np
import pytest

from hermheat.experiments import run_experiment
from hermheat.hermite import (
    SpectralField,
    forward_transform,
    gauss_hermite_rule,
    hermite_function,
    hermite_table,
    sample,
    synthesize_gauss,
)
from hermheat.orlicz import lq_norm
from hermheat.propagator import apply_semigroup
from hermheat.solver import NonlinearitySpec, SolverConfig, run

pytestmark = pytest.mark.acceptance


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start

    @property
    def ok(self):
        return self.elapsed < self.seconds

    def __str__(self):
        return f"{self.elapsed:.1f}s/{self.seconds}s"


def failing(verdicts):
    return [k for k, v in verdicts.items() if not v]


def test_c01_basis_suite(acceptance, rng):
    with Budget(10) as b:
        r = gauss_hermite_rule(121)
        tab = hermite_table(60, r.nodes)
        ortho = float(np.max(np.abs((tab * r.scaled_weights) @ tab.T - np.eye(61))))
        trip = parseval = 0.0
        for d, n in ((1, 40), (2, 24)):
            levels = SpectralField.zeros(d, n).levels()
            c = SpectralField(rng.standard_normal((n + 1,) * d) * (levels <= n), n)
            m = 2 * n + 4
            f = synthesize_gauss(c, m)
            trip = max(trip, float(np.max(np.abs(forward_transform(f, n).coeffs - c.coeffs))))
            w = gauss_hermite_rule(m).scaled_weights
            W = w if d == 1 else np.outer(w, w)
            parseval = max(parseval, abs(math.sqrt(np.sum(W * f.values ** 2)) - c.l2_norm()))
    ok = ortho <= 1e-10 and trip <= 1e-10 and parseval <= 1e-8 and b.ok
    acceptance(1, "basis", ok, f"ortho {ortho:.1e}, round-trip {trip:.1e}, "
                               f"Parseval {parseval:.1e}, {b}")
    assert ok


def test_c02_hermite_lq_growth(acceptance):
    qs = (1.0, 2.0, 4.0, math.inf)
    with Budget(30) as b:
        x = np.linspace(-16.0, 16.0, 6401)
        ratios = np.empty((61, len(qs)))
        for k in range(61):
            f = sample(lambda z: hermite_function(k, z), (x,), kind="uniform", box=16.0)
            ratios[k] = [lq_norm(f, q) / (1 + k) ** 0.25 for q in qs]
    worst = float(ratios.max())
    running = np.maximum.accumulate(ratios, axis=0)
    # no new maximum is set once k >= 20
    flat = bool(np.all(running[60] <= running[20] * (1 + 1e-12)))
    ok = worst <= 3 and flat and b.ok
    acceptance(2, "hermite-lq-growth", ok, f"max ratio {worst:.3f}, flat after k=20: {flat}, {b}")
    assert ok


def test_c03_propagator_suite(acceptance):
    with Budget(120) as b:
        res = run_experiment("propagator-check", {"d": 1, "beta": 1.0, "N": 24})
    ok = res.passed and b.ok
    acceptance(3, "propagator", ok, f"max Mehler discrepancy "
               f"{res.results['max_kernel_spectral_discrepancy']:.1e}, "
               f"failed {failing(res.verdicts)}, {b}")
    assert ok


@pytest.mark.parametrize("d", [1, 2])
def test_c04_smoothing(acceptance, d):
    with Budget(300) as b:
        res = run_experiment("smoothing-sweep", {"d": d})
    ok = res.passed and b.ok
    acceptance(4, f"smoothing d={d}", ok,
               f"grid change {res.results['sup_grid_change']:.2e}, long-branch excess "
               f"{res.results['long_branch_excess']:.3f}, failed cases {res.results['failed_cases']}, {b}")
    assert ok


def test_c05_continuity(acceptance):
    with Budget(60) as b:
        res = run_experiment("continuity", {"d": 1})
    finals = [r[-1] for r in res.rows if r[0] == 16]
    ok = res.passed and b.ok
    acceptance(5, "continuity", ok, f"max norm at t=2^-16 {max(finals):.1e}, "
                                    f"failed {failing(res.verdicts)}, {b}")
    assert ok


def test_c06_orlicz_suite(acceptance):
    with Budget(120) as b:
        res = run_experiment("norms-audit", {"d": 1})
    ok = res.passed and b.ok
    acceptance(6, "orlicz", ok, f"{len(res.verdicts)} checks, failed {failing(res.verdicts)}, {b}")
    assert ok


def test_c07_envelopes(acceptance):
    with Budget(30) as b:
        res = run_experiment("envelope-audit", {})
    ok = res.passed and b.ok
    acceptance(7, "envelopes", ok, f"failed {failing(res.verdicts)}, {b}")
    assert ok


def test_c08_solver_oracles(acceptance, rng):
    with Budget(120) as b:
        levels = SpectralField.zeros(1, 16).levels()
        u0 = SpectralField(rng.standard_normal(17) * 0.5 ** levels, 16)
        cfg = SolverConfig(1, 1.0, 16, 0.01, 1.0, NonlinearitySpec.mixed_power(3, 2, scale=0.0))
        linear = max(float(np.max(np.abs(s.field.coeffs - apply_semigroup(u0, s.t).coeffs)))
                     for s in run(u0, cfg).samples)

        eps = 0.4
        cfg = SolverConfig(1, 1.0, 6, 1e-3, 1.0, NonlinearitySpec.pure_power(1, scale=eps),
                           record_every=100)
        single = max(abs(s.field[(1,)] - math.exp((eps - 3) * s.t))
                     for s in run(SpectralField.basis((1,), 6), cfg).samples)

        spec = NonlinearitySpec.exp_full(2)
        g = SpectralField.basis((0,), 32, 0.8)
        ends = {h: run(g, SolverConfig(1, 1.0, 32, h, 0.5, spec)).samples[-1].field
                for h in (0.05, 0.025, 0.05 / 8)}
        e1 = (ends[0.05] - ends[0.05 / 8]).l2_norm()
        e2 = (ends[0.025] - ends[0.05 / 8]).l2_norm()
        order = math.log2(e1 / e2)
    ok = linear <= 1e-12 and single <= 1e-6 and order >= 1.8 and b.ok
    acceptance(8, "solver", ok, f"linear {linear:.1e}, single-mode {single:.1e}, "
                                f"order {order:.2f}, {b}")
    assert ok


def test_c09_decay(acceptance):
    with Budget(600) as b:
        res = run_experiment("decay", {})
    r = res.results
    ok = res.passed and b.ok
    acceptance(9, "decay", ok, f"sup_stat {r.get('sup_stat', math.nan):.4e} "
                               f"(dt/2 {r.get('sup_stat_half_dt', math.nan):.4e}), Duhamel "
                               f"{r.get('duhamel_small_t', math.nan):.2e} vs "
                               f"{r.get('duhamel_ref_t', math.nan):.2e}, "
                               f"failed {failing(res.verdicts)}, {b}")
    assert ok


def test_c10_blowup_probe(acceptance):
    with Budget(600) as b:
        res = run_experiment("blowup-probe", {"d": 1, "p": 2.0, "lambda": 1.0,
                                              "alpha": [0.1, 5.0, 10.0, 20.0]})
    probes = {p["alpha"]: p for p in res.results["probes"]}
    low, high = probes[0.1], probes[20.0]
    ok = (low["verdict"] == "bounded" and high["verdict"] == "divergence-indicated"
          and min(high["ratios"][-2:]) >= 2 and res.verdicts["monotone_in_alpha"] and b.ok)
    acceptance(10, "blowup-probe", ok,
               " ".join(f"{a:g}:{p['verdict']}" for a, p in probes.items())
               + f", last ratios at 20: {high['ratios'][-2]:.3g}, {high['ratios'][-1]:.3g}, {b}")
    assert ok
