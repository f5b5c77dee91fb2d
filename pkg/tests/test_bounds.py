import math
from fractions import Fraction

import pytest

from dpnoise import (
    L1,
    L2,
    Power,
    PrivacyParams,
    Table,
    expected_cost,
    gap_report,
    lb_eps_delta,
    lb_multi_eps_delta,
    lb_multi_zero_delta,
    lb_zero_delta,
    lp_lower_bound,
    ub_laplace,
    ub_laplace_multi,
    ub_uniform_1d,
    ub_uniform_multi,
    uniform_mechanism_1d,
    uniform_mechanism_multi,
)
from dpnoise.bounds import EpsDeltaSeriesParams, zero_delta_condition
from dpnoise.errors import EpsilonZero, IntegralityViolated, InvalidCost, ZeroPrivacyBudget

from oracles import (
    frac_multi_l1_zero_delta,
    frac_multi_l2_zero_delta,
    frac_uniform_cost,
    frac_zero_delta_series,
    geometric_series_cost,
)

GRID = [(s, Fraction(1, n)) for s in (1, 2, 3, 5) for n in (4, 10, 20, 50)]


class TestZeroDelta:
    def test_examples(self):
        rep = lb_zero_delta(L1(), 3, 0.05)
        assert rep.value == pytest.approx(14.5, abs=1e-12) and rep.preconditions_ok
        rep = lb_zero_delta(L1(), 1, 0.25)
        assert rep.value == pytest.approx(1.5, abs=1e-12) and not rep.preconditions_ok
        assert any("NOT a certified" in n for n in rep.notes)
        rep = lb_zero_delta(L2(), 3, 0.05)
        assert rep.value == pytest.approx(284.5, abs=1e-9) and rep.preconditions_ok

    def test_integrality(self):
        with pytest.raises(IntegralityViolated):
            lb_zero_delta(L1(), 1, 0.3)

    @pytest.mark.parametrize("s,delta", GRID)
    @pytest.mark.parametrize("kind", ["l1", "l2", "power:3"])
    def test_exact_rational_oracle(self, s, delta, kind):
        cost = {"l1": L1(), "l2": L2(), "power:3": Power(3)}[kind]
        exact = frac_zero_delta_series(kind, s, delta)
        assert lb_zero_delta(cost, s, float(delta)).value == pytest.approx(float(exact), rel=1e-12)
        if (Fraction(s) / (2 * delta)).denominator == 1:
            ub = frac_uniform_cost(kind, s, delta)
            assert ub_uniform_1d(cost, s, float(delta)).value == pytest.approx(float(ub), rel=1e-12)

    @pytest.mark.parametrize("s,delta", GRID)
    def test_uniform_corollaries(self, s, delta):
        d = float(delta)
        assert ub_uniform_1d(L1(), s, d).value == pytest.approx(s / (4 * d), abs=1e-12)
        assert ub_uniform_1d(L2(), s, d).value == pytest.approx(s * s / (12 * d * d) + 1 / 6, abs=1e-9)
        mech = uniform_mechanism_1d(PrivacyParams(0, d, s))
        assert ub_uniform_1d(L2(), s, d).value == pytest.approx(expected_cost(mech, L2()), rel=1e-12)

    def test_uniform_examples(self):
        assert ub_uniform_1d(L1(), 2, 0.05).value == pytest.approx(10.0)
        assert ub_uniform_1d(L2(), 1, 0.05).value == pytest.approx(33.5)
        assert ub_uniform_1d(L1(), 3, 0.05).value == pytest.approx(15.0)

    @pytest.mark.parametrize("cost", [L1(), L2(), Power(3)])
    @pytest.mark.parametrize("s,delta", [(1, 0.05), (2, 0.05), (3, 0.05), (3, 0.025), (2, 0.1)])
    def test_sandwich(self, cost, s, delta):
        lb = lb_zero_delta(cost, s, delta)
        lp = lp_lower_bound(cost, PrivacyParams(0, delta, s))
        ub = ub_uniform_1d(cost, s, delta)
        assert lp.preconditions_ok
        if lb.preconditions_ok:
            assert lb.value <= lp.value + 1e-9 * max(1, lp.value)
        assert lp.value <= ub.value + 1e-9

    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_polynomial_ratio_tends_to_one(self, m):
        ratios = []
        for delta in (0.05, 0.01, 0.005):
            lb = lb_zero_delta(Power(m), 3, delta)
            assert lb.preconditions_ok
            ratios.append(ub_uniform_1d(Power(m), 3, delta).value / lb.value)
        assert ratios == sorted(ratios, reverse=True)
        assert ratios[-1] == pytest.approx(1.0, rel=0.10)

    def test_general_cost_ratio_bound(self):
        s, tail_start = 3, 10
        table = Table([k**1.5 for k in range(4000)])
        c = max(table.axis(k) / table.axis(k - s + 1) for k in range(tail_start, 3000))
        lb = lb_zero_delta(table, s, 0.005)
        assert lb.preconditions_ok
        ratio = ub_uniform_1d(table, s, 0.005).value / lb.value
        assert ratio <= 1 + (1 + 1 / (2 * s)) * c + 0.05

    def test_condition_helper(self):
        assert zero_delta_condition(L1(), 3, 0.05)
        assert not zero_delta_condition(L1(), 1, 0.25)


class TestEpsDeltaSeries:
    def test_zero_epsilon(self):
        p = EpsDeltaSeriesParams.from_privacy(0.0, 0.05)
        assert (p.a, p.b, p.n_star) == (0.05, 1.0, 10.0)
        assert p.partial_sum(10) == pytest.approx(0.5, abs=1e-12)

    def test_exact_integer_length(self):
        eps, n = 0.1, 5
        b = math.exp(-eps)
        a = (1 - b) / (2 * (1 - b**n))
        delta = a * math.exp(eps) - math.expm1(eps) / 2
        p = EpsDeltaSeriesParams.from_privacy(eps, delta)
        assert p.n_star == pytest.approx(5.0, abs=1e-9)
        assert p.partial_sum(5) == pytest.approx(0.5, abs=1e-12)
        assert p.a > 0 and 0 < p.b <= 1

    def test_zero_delta_is_infinite(self):
        assert EpsDeltaSeriesParams.from_privacy(0.5, 0.0).n_star == math.inf


class TestEpsDelta:
    def test_l1(self):
        rep = lb_eps_delta(L1(), 1, 0.001, 0.001)
        assert rep.preconditions_ok
        assert rep.value == pytest.approx(189.07, rel=0.02)

    def test_l2(self):
        rep = lb_eps_delta(L2(), 1, 0.001, 0.001)
        assert rep.preconditions_ok
        assert rep.value == pytest.approx(49336, rel=0.03)
        constant = 2 - 4 * math.log(1.5) - 2 * math.log(1.5) ** 2
        assert rep.value * 0.001**2 == pytest.approx(constant, rel=0.03)

    def test_series_certificate_used_when_feasible(self):
        rep = lb_eps_delta(L1(), 3, 0.001, 0.001)
        assert rep.method.startswith("certificate:eps-delta-1d")
        assert rep.value == pytest.approx(566.92674150, rel=1e-8)

    def test_unit_sensitivity_falls_back_to_lp_dual(self):
        rep = lb_eps_delta(L1(), 1, 0.01, 0.01)
        assert rep.method == "lp-dual"
        assert any("infeasible" in n for n in rep.notes)

    @pytest.mark.slow
    def test_pure_epsilon_below_lp(self):
        rep = lb_eps_delta(L1(), 1, 0.001, 0.0)
        lp = lp_lower_bound(L1(), PrivacyParams(0.001, 0.0, 1))
        assert rep.preconditions_ok
        assert rep.value <= lp.value * (1 + 1e-9)
        assert rep.value <= ub_laplace(L1(), 1, 0.001).value

    def test_zero_budget(self):
        with pytest.raises(ZeroPrivacyBudget):
            lb_eps_delta(L1(), 1, 0.0, 0.0)

    @pytest.mark.parametrize("cost", [L1(), L2()])
    @pytest.mark.parametrize("s,eps,delta", [(1, 0.1, 0.05), (2, 0.3, 0.01), (3, 0.05, 0.05)])
    def test_sandwich(self, cost, s, eps, delta):
        lb = lb_eps_delta(cost, s, eps, delta)
        lp = lp_lower_bound(cost, PrivacyParams(eps, delta, s))
        assert lb.value <= lp.value * (1 + 1e-9) + 1e-9
        assert lp.value <= ub_laplace(cost, s, eps).value


class TestLaplace:
    def test_examples(self):
        assert ub_laplace(L1(), 1, 1.0).value == pytest.approx(0.850918, abs=1e-6)
        # 2 lam / (1 - lam)^2 at lam = 1/e, confirmed by direct summation
        assert ub_laplace(L2(), 1, 1.0).value == pytest.approx(1.841347, abs=1e-6)
        assert ub_laplace(L2(), 1, 1.0).value == pytest.approx(geometric_series_cost(math.exp(-1), 2), rel=1e-12)
        assert ub_laplace(L1(), 2, 0.001).value == pytest.approx(2000, rel=1e-3)

    def test_general_cost(self):
        lam = math.exp(-0.5)
        series = math.fsum(2 * (1 - lam) / (1 + lam) * lam**k * k**3 for k in range(1, 400))
        assert ub_laplace(Power(3), 1, 0.5).value == pytest.approx(series, rel=1e-10)

    def test_eps_zero(self):
        with pytest.raises(EpsilonZero):
            ub_laplace(L1(), 1, 0.0)
        with pytest.raises(EpsilonZero):
            ub_laplace_multi(L1(), 2, 1, 0.0)

    def test_multi(self):
        assert ub_laplace_multi(L1(), 2, 1, 1.0).value == pytest.approx(1.701836, abs=1e-6)
        assert ub_laplace_multi(L2(), 3, 1, 1.0).value == pytest.approx(5.524042, abs=1e-6)
        assert ub_laplace_multi(L1(), 1, 1, 0.001).value == pytest.approx(1000, rel=1e-3)


class TestMulti:
    def test_zero_delta_examples(self):
        assert lb_multi_zero_delta(L1(), 2, 2, 0.05).value == pytest.approx(19.0)
        assert lb_multi_zero_delta(L2(), 2, 1, 0.05).value == pytest.approx(67.0)
        assert lb_multi_zero_delta(L1(), 1, 1, 0.05).value == pytest.approx(5.0)
        assert lb_multi_zero_delta(L2(), 1, 2, 0.05).value == pytest.approx(123.5)

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("s,delta", [(1, Fraction(1, 20)), (2, Fraction(1, 10)), (3, Fraction(1, 4))])
    def test_exact_rational_oracle(self, d, s, delta):
        l1 = lb_multi_zero_delta(L1(), d, s, float(delta))
        l2 = lb_multi_zero_delta(L2(), d, s, float(delta))
        assert l1.value == pytest.approx(float(frac_multi_l1_zero_delta(d, s, delta)), rel=1e-12)
        assert l2.value == pytest.approx(float(frac_multi_l2_zero_delta(d, s, delta)), rel=1e-12)
        assert l1.preconditions_ok and l2.preconditions_ok

    def test_l2_integrality(self):
        with pytest.raises(IntegralityViolated):
            lb_multi_zero_delta(L2(), 2, 1, 0.3)

    def test_l1_off_grid_is_not_certified(self):
        rep = lb_multi_zero_delta(L1(), 2, 1, 0.3)
        assert not rep.preconditions_ok

    def test_uniform_examples(self):
        assert ub_uniform_multi(L1(), 3, 1, 0.05).value == pytest.approx(15.0)
        assert ub_uniform_multi(L2(), 2, 1, 0.05).value == pytest.approx(67.0)
        assert ub_uniform_multi(L1(), 1, 2, 0.05).value == pytest.approx(10.0)

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("s,delta", [(1, 0.05), (2, 0.05), (1, 0.25)])
    def test_d_additivity(self, d, s, delta):
        for cost in (L1(), L2()):
            multi = ub_uniform_multi(cost, d, s, delta).value
            assert multi == pytest.approx(d * ub_uniform_1d(cost, s, delta).value, rel=1e-12)
            mech = uniform_mechanism_multi(PrivacyParams(0, delta, s, d))
            assert multi == pytest.approx(expected_cost(mech, cost), rel=1e-12)

    def test_rejects_other_costs(self):
        with pytest.raises(InvalidCost):
            lb_multi_zero_delta(Power(3), 2, 1, 0.05)

    def test_eps_delta_examples(self):
        one = lb_multi_eps_delta(L1(), 1, 1, 0.001, 0.001)
        assert one.value == pytest.approx(117.8, rel=0.05)
        two = lb_multi_eps_delta(L1(), 2, 1, 0.001, 0.001)
        assert two.value == pytest.approx(2 * one.value, rel=0.05)
        assert lb_multi_eps_delta(L2(), 1, 1, 0.001, 0.001).value == pytest.approx(17700, rel=0.10)

    def test_eps_delta_negative_objective_clamped(self):
        rep = lb_multi_eps_delta(L2(), 1, 1, 0.9, 0.9)
        assert rep.value == 0.0
        assert any("trivial" in n for n in rep.notes)


class TestGap:
    def test_l1(self):
        gap = gap_report(L1(), PrivacyParams(0.001, 0.001, 1))
        assert gap.ratio <= 1.35
        assert gap.ratio == pytest.approx(1.322, rel=0.03)

    def test_l2(self):
        gap = gap_report(L2(), PrivacyParams(0.001, 0.001, 1))
        assert gap.ratio <= 1.72

    @pytest.mark.slow
    def test_laplace_vs_lower(self):
        gap = gap_report(L1(), PrivacyParams(0.001, 1e-6, 1))
        assert gap.upper_laplace.value / gap.lower.value <= 5.6

    def test_zero_delta(self):
        gap = gap_report(L1(), PrivacyParams(0, 0.05, 3))
        assert gap.lower.value == pytest.approx(14.5)
        assert gap.upper.value == pytest.approx(15.0)
        assert gap.upper_laplace is None

    def test_integrality_flag_keeps_lp(self):
        gap = gap_report(L1(), PrivacyParams(0, 0.3, 1))
        assert "integrality" in gap.flags
        assert gap.upper_uniform is None
        assert gap.lower is not None and gap.lower.method == "lp-dual"

    def test_multi(self):
        gap = gap_report(L2(), PrivacyParams(0, 0.05, 1, 2))
        assert gap.ratio == pytest.approx(1.0, abs=1e-12)
        gap = gap_report(L1(), PrivacyParams(0.01, 0.01, 1, 2))
        assert gap.lower.method == "certificate:multi-eps-delta"
        assert gap.ratio is not None

    def test_json(self):
        out = gap_report(L1(), PrivacyParams(0, 0.05, 3)).to_json()
        assert out["lower"]["value"] == 14.5
        assert out["upper"]["method"] == "mechanism:uniform"
