import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sci_integrate

from hermheat import fields
from hermheat.hermite import PhysicalField, gauss_grid, sample, uniform_grid
from hermheat.orlicz import (
    LOG2,
    NormValue,
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
    orlicz_objective,
    zeta_envelope,
)

AXES_1D = uniform_grid(1, 1401)
FAMILY_1D = [(n, sample(f, AXES_1D, kind="uniform")) for n, f in fields.family(1)]
KINDS = [YoungFunction.exp_lp(1), YoungFunction.exp_lp(2.5), YoungFunction.exp_lp_reduced(2),
         YoungFunction.power(1.5)]


def ground(d=1, n=None, box=14.0):
    n = n or (1401 if d == 1 else 281)
    return sample(fields.ground_state(d), uniform_grid(d, n, box), kind="uniform", box=box)


def zero():
    return PhysicalField(AXES_1D, np.zeros(1401), kind="uniform")


def indicator(c=1.0, m=1.0):
    return sample(fields.smoothed_indicator(1, m, c, 0.002), uniform_grid(1, 12001, 1.5),
                  kind="uniform", box=1.5)


class TestLebesgue:
    def test_ground_l2(self):
        assert float(lq_norm(ground(), 2)) == pytest.approx(1.0, abs=1e-8)

    def test_ground_l1(self):
        assert float(lq_norm(ground(), 1)) == pytest.approx(math.pi ** -0.25 * math.sqrt(2 * math.pi),
                                                            rel=1e-10)

    @pytest.mark.parametrize("q", [1, 3, math.inf])
    def test_ground_closed_form_2d(self, q):
        assert float(lq_norm(ground(2), q)) == pytest.approx(fields.ground_state_norm(2, q), rel=1e-9)

    def test_zero(self):
        assert float(lq_norm(zero(), 2)) == 0.0

    def test_exponent_below_one(self):
        with pytest.raises(ValueError):
            lq_norm(ground(), 0.5)

    def test_norm_value_metadata(self):
        v = lq_norm(ground(), 2)
        assert isinstance(v, NormValue) and v.method == "quadrature-grid" and v.resolution == (1401,)

    def test_gauss_grid_rejected(self):
        f = sample(fields.ground_state(1), gauss_grid(1, 9), kind="gauss")
        with pytest.raises(ValueError):
            lq_norm(f, 2)


class TestYoung:
    def test_values(self):
        assert YoungFunction.exp_lp(2)(1.0) == pytest.approx(math.e - 1)
        assert YoungFunction.exp_lp_reduced(2)(1.0) == pytest.approx(math.e - 2)
        assert YoungFunction.power(3)(2.0) == 8.0

    def test_reduced_small_argument_accurate(self):
        s = 1e-5
        assert YoungFunction.exp_lp_reduced(2)(s) == pytest.approx(s ** 4 / 2, rel=1e-9)

    @pytest.mark.parametrize("phi", KINDS)
    def test_convex_increasing(self, phi):
        assert phi(0.0) == 0.0
        assert phi.is_valid()

    @pytest.mark.parametrize("ctor,arg", [(YoungFunction.exp_lp, 0.5),
                                          (YoungFunction.exp_lp_reduced, 1.0),
                                          (YoungFunction.power, 0.9)])
    def test_bad_parameters(self, ctor, arg):
        with pytest.raises(ValueError):
            ctor(arg)


class TestLuxemburg:
    @pytest.mark.parametrize("c,m,p", [(1, 1, 2), (1, 0.5, 1), (2.5, 2, 2), (0.3, 1, 3)])
    def test_indicator_closed_form(self, c, m, p):
        exact = c / math.log1p(1 / m) ** (1 / p)
        got = float(exp_lp_norm(indicator(c, m), p))
        assert got == pytest.approx(exact, rel=0.01)

    def test_indicator_converges_under_mollification(self):
        # thinner ramps approach the sharp-indicator value
        errs = []
        for w in (0.2, 0.05, 0.01):
            f = sample(fields.smoothed_indicator(1, 1.0, 1.0, w), uniform_grid(1, 12001, 1.5),
                       kind="uniform", box=1.5)
            errs.append(abs(float(exp_lp_norm(f, 2)) - 1 / math.sqrt(LOG2)))
        assert errs[0] > errs[1] > errs[2]

    def test_unit_indicator_value(self):
        assert float(exp_lp_norm(indicator(), 2)) == pytest.approx(1.2011, abs=2e-3)

    def test_zero(self):
        assert float(exp_lp_norm(zero(), 2)) == 0.0

    @given(st.floats(0.1, 10), st.sampled_from(range(len(KINDS))), st.sampled_from(range(8)))
    def test_homogeneity(self, c, k, j):
        f = FAMILY_1D[j][1]
        phi = KINDS[k]
        assert float(luxemburg_norm(f * c, phi)) == pytest.approx(c * float(luxemburg_norm(f, phi)),
                                                                  rel=1e-7)

    @given(st.floats(1, 6), st.sampled_from(range(8)))
    def test_power_kind_is_lebesgue(self, q, j):
        f = FAMILY_1D[j][1]
        assert float(luxemburg_norm(f, YoungFunction.power(q))) == pytest.approx(
            float(lq_norm(f, q)), rel=1e-7)

    @given(st.floats(0.05, 20), st.floats(1.01, 3), st.sampled_from(range(len(KINDS))))
    def test_objective_strictly_decreasing(self, lam, factor, k):
        f = FAMILY_1D[0][1]
        assert orlicz_objective(f, KINDS[k], lam) > orlicz_objective(f, KINDS[k], lam * factor)

    def test_root_is_at_unit_objective(self):
        f = FAMILY_1D[2][1]
        lam = float(exp_lp_norm(f, 2))
        assert orlicz_objective(f, YoungFunction.exp_lp(2), lam) == pytest.approx(1.0, rel=1e-6)


class TestGamma:
    def test_integers(self):
        assert gamma(1.0) == pytest.approx(1.0, rel=1e-14)
        assert gamma(2.0) == pytest.approx(1.0, rel=1e-14)
        assert gamma(6.0) == pytest.approx(120.0, rel=1e-13)

    def test_half_against_defining_integral(self):
        # s^{-1/2} singularity at 0 handled by the algebraic weight
        head, _ = sci_integrate.quad(lambda s: math.exp(-s), 0, 1, weight="alg", wvar=(-0.5, 0.0),
                                     epsabs=0, epsrel=1e-13)
        tail, _ = sci_integrate.quad(lambda s: s ** -0.5 * math.exp(-s), 1, np.inf, epsabs=0,
                                     epsrel=1e-13)
        assert gamma(0.5) == pytest.approx(head + tail, rel=1e-12)
        assert gamma(0.5) == pytest.approx(1.7724539, rel=1e-7)

    def test_recurrence(self):
        assert gamma(2.5) == pytest.approx(1.5 * 0.5 * gamma(0.5), rel=1e-13)

    @given(st.floats(1e-3, 60))
    def test_against_stdlib(self, x):
        assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-12)

    @pytest.mark.parametrize("x", [0.0, -1.5])
    def test_domain(self, x):
        with pytest.raises(ValueError):
            gamma(x)


class TestEmbeddings:
    def test_equal_exponents_constant_is_one(self):
        rep = check_embedding_lq_from_explp(ground(), 2, 2)
        assert rep.extra["constant"] == pytest.approx(1.0, rel=1e-14)
        assert rep.passed

    def test_ground_two_four(self):
        rep = check_embedding_lq_from_explp(ground(), 2, 4)
        assert rep.passed and rep.margin > 0

    def test_zero_field(self):
        assert check_embedding_lq_from_explp(zero(), 1, 2).lhs == 0.0
        rep = check_embedding_explp_from_lq_linf(zero(), 2, 1)
        assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.passed

    def test_order_errors(self):
        with pytest.raises(ValueError):
            check_embedding_lq_from_explp(ground(), 2, 1)
        with pytest.raises(ValueError):
            check_embedding_explp_from_lq_linf(ground(), 1, 2)

    def test_ground_upper(self):
        rep = check_embedding_explp_from_lq_linf(ground(), 2, 2)
        assert rep.passed and rep.margin > 0

    def test_indicator_upper(self):
        rep = check_embedding_explp_from_lq_linf(indicator(), 2, 1)
        assert rep.lhs == pytest.approx(1.2011, abs=2e-3)
        assert rep.rhs == pytest.approx(2 / math.sqrt(LOG2), rel=1e-3)

    @pytest.mark.parametrize("name,f", FAMILY_1D)
    def test_family(self, name, f):
        for p, q in [(1, 1), (1, 2), (2, 2), (2, 4), (1, 4)]:
            assert check_embedding_lq_from_explp(f, p, q).passed, (name, p, q)
        for p, q in [(1, 1), (2, 1), (3, 2)]:
            assert check_embedding_explp_from_lq_linf(f, p, q).passed, (name, p, q)

    def test_classical_constant_reported(self):
        rep = check_embedding_lq_from_explp(ground(), 1, 3)
        assert rep.extra["classical_constant"] == pytest.approx(gamma(4) ** (1 / 3))


class TestExpMoment:
    def test_boundary_budget(self):
        u = ground() * 0.3
        K = float(exp_lp_norm(u, 2))
        rep = check_exp_moment_bound(u, 1 / (2 * K ** 2), 2, 2, K)
        assert rep.rhs == pytest.approx(1.0)
        assert rep.passed

    def test_zero_field(self):
        assert check_exp_moment_bound(zero(), 0.5, 2, 2, 1.0).lhs == 0.0

    def test_scaled_ground(self):
        u = ground() * 0.3
        K = float(exp_lp_norm(u, 2))
        rep = check_exp_moment_bound(u, 0.5, 2, 2, K)
        assert rep.passed and rep.margin > 0

    def test_budget_violation_named(self):
        with pytest.raises(ValueError, match="lam\\*q\\*K\\^p"):
            check_exp_moment_bound(ground(), 2.0, 2, 2, 1.0)

    def test_norm_hypothesis_named(self):
        u = ground() * 3.0
        with pytest.raises(ValueError, match="expLp"):
            check_exp_moment_bound(u, 0.1, 2, 1, 0.5)

    @given(st.floats(0.2, 3), st.sampled_from([1.0, 2.0]), st.floats(1, 4), st.floats(1, 1.5),
           st.floats(0.05, 1), st.sampled_from(range(8)))
    def test_random_admissible(self, amp, p, q, slack, frac, j):
        u = FAMILY_1D[j][1] * amp
        K = float(exp_lp_norm(u, p)) * slack
        assert check_exp_moment_bound(u, frac / (q * K ** p), p, q, K).passed


class TestEquivalence:
    def test_scale_invariant(self):
        g = FAMILY_1D[5][1]
        assert equivalence_e32(g, 2).ratio == pytest.approx(equivalence_e32(g * 3, 2).ratio, rel=1e-7)

    def test_ground_grid_stable(self):
        coarse = equivalence_e32(ground(1, 701), 2).ratio
        fine = equivalence_e32(ground(1, 2801), 2).ratio
        assert 0 < fine < math.inf
        assert coarse == pytest.approx(fine, rel=0.02)

    def test_spread_over_trio(self):
        trio = [dict(FAMILY_1D)[k] for k in ("ground", "ground_plus_2", "indicator")]
        r = [equivalence_e32(g, 2).ratio for g in trio]
        assert max(r) / min(r) <= 10

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            equivalence_e32(zero(), 2)

    def test_p_must_exceed_one(self):
        with pytest.raises(ValueError):
            equivalence_e32(ground(), 1.0)


@pytest.mark.parametrize("name,f", FAMILY_1D)
def test_norms_stable_under_grid_doubling(name, f):
    fine = sample(dict(fields.family(1))[name], uniform_grid(1, 2801), kind="uniform")
    for q in (1, 2, math.inf):
        assert float(lq_norm(f, q)) == pytest.approx(float(lq_norm(fine, q)), rel=5e-3)
    assert float(exp_lp_norm(f, 2)) == pytest.approx(float(exp_lp_norm(fine, 2)), rel=5e-3)


class TestEnvelopes:
    def test_kappa_regime(self):
        with pytest.raises(ValueError, match="d > 2 beta p"):
            kappa_envelope(1.0, 2, 3, 4, 1.0)
        with pytest.raises(ValueError, match="r > d"):
            kappa_envelope(1.0, 2, 2, 5, 1.0)
        with pytest.raises(ValueError, match="beta"):
            kappa_envelope(1.0, 2, 3, 5, 1.5)

    def test_zeta_regime(self):
        with pytest.raises(ValueError, match="p/\\(p-1\\)"):
            zeta_envelope(1.0, 2, 3, 5, 1.0)

    def test_kappa_tail_integrable(self):
        # large t: t^{-D} log(1 + t^{-D})^{-1/p} ~ t^{-D(1 - 1/p)}, D = 5/2
        t = np.array([1e4, 1e8])
        vals = kappa_envelope(t, 2, 3, 5, 1.0)
        slope = np.diff(np.log(vals)) / np.diff(np.log(t))
        assert slope[0] == pytest.approx(-1.25, rel=1e-6)

    def test_kappa_small_time_branch(self):
        t = 1e-6
        assert kappa_envelope(t, 2, 3, 5, 1.0) == pytest.approx(
            LOG2 ** -0.5 * (t ** (-2.5 / 3) + 1), rel=1e-12)

    @pytest.mark.parametrize("func,d", [(kappa_envelope, 5), (zeta_envelope, 4)])
    def test_integrals_finite_and_stable(self, func, d):
        vals = [integrate_envelope(lambda t: func(t, 2, 3, d, 1.0), panels=n) for n in (8, 16, 32)]
        assert all(math.isfinite(v) and v > 0 for v in vals)
        assert vals[-1] == pytest.approx(vals[-2], rel=0.01)
