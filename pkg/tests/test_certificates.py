import math
from decimal import Decimal
from fractions import Fraction

import pytest

from dpnoise import (
    L1,
    L2,
    AxisWeights,
    DualCertificate,
    PrivacyParams,
    Regime,
    build_cert_eps_delta_1d,
    build_cert_multi_eps_delta_l1,
    build_cert_multi_eps_delta_l2,
    build_cert_multi_l1_zero_delta,
    build_cert_multi_l2_zero_delta,
    build_cert_zero_delta_1d,
    build_relaxed_lp,
    certificate_from_lp_dual,
    expected_cost,
    l2_growth_root,
    solve_lp,
    uniform_mechanism_1d,
    verify_certificate,
)
from dpnoise.bounds import EpsDeltaSeriesParams
from dpnoise.certificates import certificate_to_json, joint_column_slack
from dpnoise.lp import default_truncation
from dpnoise.errors import IntegralityViolated, InvalidParams, NoFeasibleCertificate, RegimeMismatch

from oracles import (
    frac_multi_l1_zero_delta,
    frac_multi_l2_zero_delta,
    frac_zero_delta_series,
    joint_dual_min_slack,
)


def series_n(eps, delta):
    return EpsDeltaSeriesParams.from_privacy(eps, delta).n_star


class TestZeroDelta1D:
    @pytest.mark.parametrize("cost,expected", [(L1(), 14.5), (L2(), 284.5)])
    def test_feasible(self, cost, expected):
        cert = build_cert_zero_delta_1d(cost, 3, 0.05)
        rep = verify_certificate(cert, cost, PrivacyParams(0, 0.05, 3))
        assert rep.feasible and rep.worst_violation <= 1e-9
        assert rep.objective == pytest.approx(expected, abs=1e-9)
        kind = "l1" if isinstance(cost, L1) else "l2"
        assert rep.objective == pytest.approx(float(frac_zero_delta_series(kind, 3, Fraction(1, 20))), abs=1e-9)

    def test_condition_failure_is_infeasible(self):
        cert = build_cert_zero_delta_1d(L1(), 1, 0.25)
        rep = verify_certificate(cert, L1(), PrivacyParams(0, 0.25, 1))
        assert not rep.feasible
        assert rep.worst_violation > 1e-9

    def test_integrality(self):
        with pytest.raises(IntegralityViolated):
            build_cert_zero_delta_1d(L1(), 1, 0.3)

    @pytest.mark.parametrize("s,delta", [(2, 0.05), (3, 0.025), (5, 0.1)])
    def test_weak_duality_against_lp_and_uniform(self, s, delta):
        for cost in (L1(), L2()):
            params = PrivacyParams(0, delta, s)
            rep = verify_certificate(build_cert_zero_delta_1d(cost, s, delta), cost, params)
            if not rep.feasible:
                continue
            lp = solve_lp(build_relaxed_lp(cost, s, 0.0, delta, int((1 / (2 * delta) + 6) * s)))
            assert rep.objective <= lp.optimal_value + 1e-9
            assert rep.objective <= expected_cost(uniform_mechanism_1d(params), cost) + 1e-9


class TestEpsDelta1D:
    @pytest.mark.parametrize("s", [3, 5])
    @pytest.mark.parametrize("cost", [L1(), L2()])
    def test_feasible_for_wider_sensitivity(self, s, cost):
        eps = delta = 0.001
        n = math.floor(series_n(eps, delta))
        cert = build_cert_eps_delta_1d(cost, s, eps, delta, n)
        rep = verify_certificate(cert, cost, PrivacyParams(eps, delta, s))
        assert rep.feasible
        lp = solve_lp(build_relaxed_lp(cost, s, eps, delta, default_truncation(s, eps, delta)))
        assert rep.objective <= lp.optimal_value * (1 + 1e-9) + 1e-9

    @pytest.mark.parametrize("cost", [L1(), L2()])
    def test_unit_sensitivity_fails_at_column_zero(self, cost):
        # the construction's own side condition does not hold for sensitivity 1
        eps = delta = 0.001
        n = math.floor(series_n(eps, delta))
        rep = verify_certificate(build_cert_eps_delta_1d(cost, 1, eps, delta, n), cost, PrivacyParams(eps, delta, 1))
        assert not rep.feasible
        assert rep.worst_constraint == "column 0"

    def test_series_objective(self):
        eps, delta, s = 0.001, 0.001, 3
        series = EpsDeltaSeriesParams.from_privacy(eps, delta)
        n = math.ceil(series.n_star)
        rep = verify_certificate(build_cert_eps_delta_1d(L1(), s, eps, delta, n), L1(), PrivacyParams(eps, delta, s))
        lp = solve_lp(build_relaxed_lp(L1(), s, eps, delta, default_truncation(s, eps, delta))).optimal_value
        assert rep.feasible
        assert rep.objective == pytest.approx(566.92674150, rel=1e-8)
        assert rep.objective <= lp * (1 + 1e-9)
        # at non-integer n* the raw series overshoots the LP optimum, so only the verified objective is a bound
        assert series.series_value(L1(), s, n) > lp

    def test_degenerate_length(self):
        with pytest.raises(InvalidParams):
            build_cert_eps_delta_1d(L1(), 1, 0.5, 0.5, 1)


class TestMultiZeroDelta:
    @pytest.mark.parametrize(
        "d,s,delta,expected", [(2, 2, Fraction(1, 20), 19.0), (1, 1, Fraction(1, 4), 1.0), (3, 2, Fraction(1, 20), 28.5)]
    )
    def test_l1(self, d, s, delta, expected):
        cert = build_cert_multi_l1_zero_delta(d, s, float(delta))
        rep = verify_certificate(cert, L1(), PrivacyParams(0, float(delta), s, d))
        assert rep.feasible
        assert rep.objective == pytest.approx(expected, abs=1e-9)
        assert rep.objective == pytest.approx(float(frac_multi_l1_zero_delta(d, s, delta)), abs=1e-9)

    @pytest.mark.parametrize(
        "d,s,delta,expected", [(2, 1, Fraction(1, 20), 67.0), (1, 2, Fraction(1, 20), 123.5), (1, 1, Fraction(1, 4), 1.5)]
    )
    def test_l2(self, d, s, delta, expected):
        cert = build_cert_multi_l2_zero_delta(d, s, float(delta))
        rep = verify_certificate(cert, L2(), PrivacyParams(0, float(delta), s, d))
        assert rep.feasible
        assert rep.objective == pytest.approx(expected, abs=1e-9)
        assert rep.objective == pytest.approx(float(frac_multi_l2_zero_delta(d, s, delta)), abs=1e-9)

    def test_l2_integrality(self):
        with pytest.raises(IntegralityViolated):
            build_cert_multi_l2_zero_delta(1, 1, 0.3)

    def test_negated_weight_is_infeasible(self):
        cert = build_cert_multi_l1_zero_delta(2, 2, 0.05)
        axis = cert.axes[0]
        j = next(i for i, v in enumerate(axis.values) if v > 0)
        bad_axis = axis.with_value(axis.offset + j, -axis.values[j])
        bad = DualCertificate(cert.mu, (bad_axis,) + cert.axes[1:], cert.regime, cert.beta)
        rep = verify_certificate(bad, L1(), PrivacyParams(0, 0.05, 2, 2))
        assert not rep.feasible and rep.worst_violation > 0


class TestMultiEpsDelta:
    def test_l1_constant(self):
        beta = 0.001
        rep = verify_certificate(build_cert_multi_eps_delta_l1(1, 1, beta), L1(), PrivacyParams(beta, beta, 1, 1))
        assert rep.feasible
        assert rep.objective == pytest.approx(math.log(9 / 8) / beta, rel=0.05)

    def test_l1_linear_in_dims(self):
        beta = 0.001
        one = verify_certificate(build_cert_multi_eps_delta_l1(1, 1, beta), L1(), PrivacyParams(beta, beta, 1, 1))
        two = verify_certificate(build_cert_multi_eps_delta_l1(2, 1, beta), L1(), PrivacyParams(beta, beta, 1, 2))
        assert two.feasible
        assert two.objective == pytest.approx(2 * one.objective, rel=0.05)

    def test_l1_large_beta_feasible(self):
        rep = verify_certificate(build_cert_multi_eps_delta_l1(1, 1, 0.5), L1(), PrivacyParams(0.5, 0.5, 1, 1))
        assert rep.feasible
        assert 0 < rep.objective < 0.1178 / 0.5

    def test_l1_very_large_beta_has_no_certificate(self):
        with pytest.raises(NoFeasibleCertificate):
            build_cert_multi_eps_delta_l1(1, 1, 0.9)

    def test_l2_constant(self):
        beta = 0.001
        rep = verify_certificate(build_cert_multi_eps_delta_l2(1, 1, beta), L2(), PrivacyParams(beta, beta, 1, 1))
        assert rep.feasible
        assert rep.objective == pytest.approx(0.0177 / beta**2, rel=0.10)

    def test_l2_quadratic_in_sensitivity(self):
        beta = 0.001
        one = verify_certificate(build_cert_multi_eps_delta_l2(1, 1, beta), L2(), PrivacyParams(beta, beta, 1, 1))
        two = verify_certificate(build_cert_multi_eps_delta_l2(1, 2, beta), L2(), PrivacyParams(beta, beta, 2, 1))
        assert two.feasible
        assert two.objective == pytest.approx(4 * one.objective, rel=0.10)

    def test_growth_root(self):
        gamma = l2_growth_root()
        assert gamma == pytest.approx(1.7468, abs=1e-3)
        alpha = 1.5
        assert gamma * alpha * (math.log(alpha) - 1) == pytest.approx(-(1 + math.log(gamma)), abs=1e-9)

    def test_weak_duality_against_uniform(self):
        # multi-dimensional objectives must not exceed d times the per-axis uniform cost
        for d in (1, 2):
            for s in (1, 2):
                beta = 0.01
                params = PrivacyParams(beta, beta, s, d)
                for cost, build in ((L1(), build_cert_multi_eps_delta_l1), (L2(), build_cert_multi_eps_delta_l2)):
                    rep = verify_certificate(build(d, s, beta), cost, params)
                    uniform = expected_cost(uniform_mechanism_1d(PrivacyParams(0, beta, s)), cost)
                    assert rep.feasible and rep.objective <= d * uniform + 1e-9


class TestVerifier:
    def test_regime_mismatch(self):
        cert = build_cert_multi_l1_zero_delta(2, 1, 0.05)
        with pytest.raises(RegimeMismatch):
            verify_certificate(cert, L1(), PrivacyParams(0, 0.05, 1, 3))
        with pytest.raises(RegimeMismatch):
            verify_certificate(cert, L2(), PrivacyParams(0, 0.05, 1, 2))
        with pytest.raises(RegimeMismatch):
            verify_certificate(build_cert_zero_delta_1d(L1(), 1, 0.05), L1(), PrivacyParams(0.1, 0.05, 1))
        with pytest.raises(RegimeMismatch):
            verify_certificate(build_cert_multi_eps_delta_l1(1, 1, 0.01), L1(), PrivacyParams(0.02, 0.01, 1, 1))

    def test_negative_mu_is_flagged(self):
        cert = DualCertificate(Decimal(-1), (AxisWeights(0, (Decimal(0),)),), Regime.ZeroDelta1D)
        rep = verify_certificate(cert, L1(), PrivacyParams(0, 0.1, 1))
        assert not rep.feasible and rep.worst_constraint == "mu >= 0"

    def test_raised_mu_breaks_feasibility(self):
        cert = build_cert_zero_delta_1d(L1(), 3, 0.05)
        bumped = DualCertificate(cert.mu + Decimal("0.001"), cert.axes, cert.regime)
        rep = verify_certificate(bumped, L1(), PrivacyParams(0, 0.05, 3))
        assert not rep.feasible

    def test_binding_count_and_json(self):
        rep = verify_certificate(build_cert_zero_delta_1d(L1(), 3, 0.05), L1(), PrivacyParams(0, 0.05, 3))
        assert rep.binding_constraints >= 1
        out = rep.to_json()
        assert set(out) == {"feasible", "worst_violation", "objective", "binding_constraints", "worst_constraint", "notes"}
        cert_json = certificate_to_json(build_cert_zero_delta_1d(L1(), 3, 0.05), include_weights=True)
        assert cert_json["regime"] == "zero-delta-1d" and len(cert_json["axes"]) == 1

    @pytest.mark.parametrize(
        "build,cost,params",
        [
            (lambda: build_cert_multi_l1_zero_delta(2, 2, 0.05), L1(), PrivacyParams(0, 0.05, 2, 2)),
            (lambda: build_cert_multi_l2_zero_delta(2, 1, 0.25), L2(), PrivacyParams(0, 0.25, 1, 2)),
            (lambda: build_cert_multi_l1_zero_delta(1, 1, 0.25), L1(), PrivacyParams(0, 0.25, 1, 1)),
            (lambda: build_cert_multi_eps_delta_l1(2, 1, 0.3), L1(), PrivacyParams(0.3, 0.1, 1, 2)),
            (lambda: build_cert_multi_eps_delta_l2(2, 2, 0.5), L2(), PrivacyParams(0.5, 0.5, 2, 2)),
        ],
    )
    def test_per_axis_reduction_matches_joint_enumeration(self, build, cost, params):
        cert = build()
        rep = verify_certificate(cert, cost, params)
        tail = 0.0 if cert.regime in (Regime.MultiZeroDeltaL1, Regime.MultiZeroDeltaL2) else math.expm1(cert.beta)
        axes = [ax.as_dict() for ax in cert.axes]
        joint = joint_dual_min_slack(axes, float(cert.mu), cost.axis, params.sensitivity, tail, 10)
        if rep.feasible:
            assert joint >= -1e-9
        for point in [(0,) * params.dims, (1,) * params.dims, (-3, 2)[: params.dims], (10, -10)[: params.dims]]:
            g_sum = sum(
                cost.axis(k)
                + sum(ax.get(i, 0.0) for i in range(k - params.sensitivity + 1, k + 1))
                - tail * sum(w for i, w in ax.items() if i <= k - params.sensitivity)
                for ax, k in zip(axes, point)
            )
            assert joint_column_slack(cert, cost, params, point) == pytest.approx(float(cert.mu) - g_sum, abs=1e-9)

    def test_joint_enumeration_detects_violation(self):
        cert = build_cert_multi_l1_zero_delta(2, 1, 0.25)
        bumped = DualCertificate(cert.mu + Decimal("0.5"), cert.axes, cert.regime, cert.beta)
        params = PrivacyParams(0, 0.25, 1, 2)
        rep = verify_certificate(bumped, L1(), params)
        joint = joint_dual_min_slack([ax.as_dict() for ax in bumped.axes], float(bumped.mu), L1().axis, 1, 0.0, 10)
        assert not rep.feasible
        assert joint == pytest.approx(-rep.worst_violation, abs=1e-9)


class TestLpDual:
    @pytest.mark.parametrize("cost", [L1(), L2()])
    @pytest.mark.parametrize("s,eps,delta", [(1, 0.001, 0.001), (1, 0.1, 0.05), (2, 0.0, 0.1)])
    def test_polished_dual_verifies(self, cost, s, eps, delta):
        params = PrivacyParams(eps, delta, s)
        n = {0.001: 506, 0.1: 40, 0.0: 32}[eps]
        sol = solve_lp(build_relaxed_lp(cost, s, eps, delta, n))
        cert = certificate_from_lp_dual(sol.mu, sol.row_duals, cost, params)
        rep = verify_certificate(cert, cost, params)
        assert rep.feasible
        assert rep.objective <= sol.optimal_value * (1 + 1e-9) + 1e-9
        assert rep.objective == pytest.approx(sol.optimal_value, rel=1e-7)
