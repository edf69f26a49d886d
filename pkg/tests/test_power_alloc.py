"""Water-filling allocator tests: thresholds, policy branches, capacities."""

import math

import numpy as np
import pytest

from compfade import channel, power_alloc
from compfade.channel import ChannelParams, FadingParams
from compfade.numerics import McConfig, bisect
from compfade.power_alloc import PowerBudget

SQRT300 = math.sqrt(300.0)
LN2 = math.log(2.0)


def table_channel(k=3, n=8, m=2.0, ms=2.0, gain=5.0):
    return ChannelParams.homogeneous(k, FadingParams(m, ms, gain), n, SQRT300, SQRT300, 0.5)


def table_budget(avg=0.1, peak=1.0, n0=1e-13, bw=2e8):
    return PowerBudget(avg_power=avg, peak_power=peak, noise_psd=n0, bandwidth=bw)


class TestClosedFormThreshold:
    def test_plug_in_value(self):
        # K=1, N=1, m=2, m_s=1 gives KNm=2, KNm_s=1; unit distances; the
        # gamma ratio is 1, and Lambda=1 needs mean gain 2; with
        # avg_power = noise power the threshold is 1/(1+1)
        cp = ChannelParams.homogeneous(1, FadingParams(2, 1, 2.0), 1, 1.0, 1.0, 0.5)
        assert cp.lam == pytest.approx(1.0)
        pb = PowerBudget(avg_power=2e-5, peak_power=1.0, noise_psd=1e-13, bandwidth=2e8)
        assert pb.noise_power == pytest.approx(2e-5)
        h0 = power_alloc.threshold_closed_form(cp, pb)
        assert h0 == pytest.approx(0.5, rel=1e-12)

    def test_vanishes_as_budget_grows(self):
        cp = table_channel()
        h0s = [
            power_alloc.threshold_closed_form(cp, table_budget(avg=p, peak=max(p, 1.0)))
            for p in (0.01, 1.0, 100.0, 1e4)
        ]
        assert all(b < a for a, b in zip(h0s, h0s[1:]))
        assert h0s[-1] < 1e-4

    def test_requires_knm_above_one(self):
        cp = ChannelParams.homogeneous(1, FadingParams(1, 1, 1.0), 1, 1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            power_alloc.threshold_closed_form(cp, table_budget())


class TestExactThreshold:
    def test_balance_holds(self):
        cp = table_channel()
        pb = table_budget()
        pol = power_alloc.make_policy(cp, pb, method="exact")
        spent = power_alloc.average_spent_power(pol)
        assert spent == pytest.approx(pb.avg_power, rel=5e-3)

    def test_close_to_closed_form_in_small_threshold_regime(self):
        cp = table_channel()
        pb = table_budget(avg=1.0)
        hc = power_alloc.threshold_closed_form(cp, pb)
        hx = power_alloc.threshold_exact(cp, pb)
        assert hc * cp.lam / cp.k < 0.05  # the regime premise
        assert abs(hc - hx) / hx < 0.05
        assert hx >= hc  # dropping the below-threshold deficit lowers h0

    def test_monotone_in_budget(self):
        cp = table_channel()
        h0s = [
            power_alloc.threshold_exact(cp, table_budget(avg=p, peak=max(p, 1.0)))
            for p in np.linspace(0.05, 2.0, 10)
        ]
        assert all(b < a for a, b in zip(h0s, h0s[1:]))


class TestPolicyEval:
    @pytest.fixture()
    def policy(self):
        return power_alloc.make_policy(table_channel(), table_budget())

    def test_below_and_at_threshold(self, policy):
        assert policy(policy.threshold * 0.5) == 0.0
        assert policy(policy.threshold) == pytest.approx(0.0, abs=1e-18)

    def test_large_gain_limit(self, policy):
        want = min(policy.water_level, policy.peak)
        assert policy(1e12) == pytest.approx(want, rel=1e-6)

    def test_bounds_and_monotone(self, policy):
        h = np.linspace(0.0, 50.0, 2000)
        p = np.asarray(policy(h))
        assert np.all(p >= 0.0) and np.all(p <= policy.peak)
        assert np.all(np.diff(p) >= -1e-18)

    def test_peak_clamp(self):
        cp = table_channel()
        d2 = table_budget().noise_power
        pol = power_alloc.PowerPolicy(
            threshold=0.5, peak=1.5 * d2, noise_power=d2, channel=cp, budget=table_budget()
        )
        # water level is d2/h0 = 2 d2 > peak, so large gains clamp
        assert pol(1e9) == pytest.approx(1.5 * d2)

    def test_kkt_stationarity_in_unclamped_branch(self):
        cp = table_channel()
        pb = table_budget()
        pol = power_alloc.make_policy(cp, pb, method="exact")
        rng = np.random.default_rng(8)
        h = pol.threshold * (1.0 + rng.uniform(0.01, 30.0, size=100))
        p = np.asarray(pol(h))
        unclamped = p < pol.peak
        lam = (pb.bandwidth / LN2) * pol.threshold / pb.noise_power
        lhs = (pb.bandwidth / LN2) * (h / pb.noise_power) / (1.0 + h * p / pb.noise_power)
        resid = np.abs(lhs[unclamped] - lam) / lam
        assert np.max(resid) <= 1e-6


class TestAsymptoticPolicy:
    def test_exact_ratio_recovers_policy(self):
        cp = table_channel()
        pb = table_budget()
        pol = power_alloc.make_policy(cp, pb, method="closed-form")
        a, b = cp.composite_shapes
        eps = b / (a - 1.0)
        h = np.linspace(0.0, 50.0, 500)
        np.testing.assert_allclose(
            np.asarray(power_alloc.policy_eval_asymptotic(pol, h, eps)),
            np.asarray(power_alloc.policy_eval(pol, h)),
            rtol=1e-10,
            atol=1e-24,
        )

    def test_crossover_solves_branch_equation(self):
        # make the peak small enough to clamp inside the sweep
        cp = table_channel()
        d2 = 1e-13 * 2e8
        pb = PowerBudget(avg_power=0.1, peak_power=2.2e-5, noise_psd=1e-13, bandwidth=2e8)
        pol = power_alloc.make_policy(cp, pb, method="closed-form")
        a, b = cp.composite_shapes
        eps = b / (a - 1.0)
        pl = cp.pathloss_product
        level = (pb.avg_power + eps * cp.lam * d2 / cp.k * pl) / pl
        cross = d2 * pl / (pb.avg_power + (eps * cp.lam * d2 / cp.k - pb.peak_power) * pl)
        root = bisect(lambda h: (level - d2 / h) - pb.peak_power, pol.threshold, 1e9, tol=1e-12)
        assert cross == pytest.approx(root, rel=1e-6)
        # branch switch happens at the crossover
        below = power_alloc.policy_eval_asymptotic(pol, cross * 0.999, eps)
        above = power_alloc.policy_eval_asymptotic(pol, cross * 1.001, eps)
        assert below < pb.peak_power
        assert above == pb.peak_power

    def test_no_peak_reduces_to_water_filling(self):
        cp = table_channel()
        pb = table_budget(peak=1e6)
        pol = power_alloc.make_policy(cp, pb, method="closed-form")
        h = np.linspace(pol.threshold, 50.0, 200)
        got = np.asarray(power_alloc.policy_eval_asymptotic(pol, h, 1.0))
        d2 = pb.noise_power
        pl = cp.pathloss_product
        level = (pb.avg_power + cp.lam * d2 / cp.k * pl) / pl
        np.testing.assert_allclose(got, level - d2 / h, rtol=1e-12)


class TestCapacity:
    def test_vanishes_with_budget(self):
        cp = table_channel()
        pb = table_budget(avg=1e-12, peak=1.0)
        pol = power_alloc.make_policy(cp, pb, method="closed-form")
        cap = power_alloc.ergodic_capacity_p1(cp, pb, pol)
        ref = power_alloc.ergodic_capacity_p1(
            cp, table_budget(), power_alloc.make_policy(cp, table_budget(), "closed-form")
        )
        assert cap < 1e-3 * ref

    def test_monotone_in_budget(self):
        cp = table_channel()
        caps = []
        for p in np.linspace(0.05, 1.0, 10):
            pb = table_budget(avg=p)
            pol = power_alloc.make_policy(cp, pb, method="closed-form")
            caps.append(power_alloc.ergodic_capacity_p1(cp, pb, pol))
        assert all(b > a for a, b in zip(caps, caps[1:]))

    def test_increases_with_fading_parameter(self):
        pb = table_budget()
        caps = []
        for m in (1.0, 5.0, 10.0):
            cp = table_channel(m=m, ms=1.0)
            pol = power_alloc.make_policy(cp, pb, method="closed-form")
            caps.append(power_alloc.ergodic_capacity_p1(cp, pb, pol))
        assert caps[0] < caps[1] < caps[2]

    def test_mc_cross_check_where_model_exact(self):
        cp = ChannelParams.homogeneous(1, FadingParams(2, 2, 5.0), 1, SQRT300, SQRT300, 0.5)
        pb = table_budget()
        pol = power_alloc.make_policy(cp, pb, method="exact")
        quad = power_alloc.ergodic_capacity_p1(cp, pb, pol) / cp.pathloss_product
        mc, se = power_alloc.ergodic_capacity_p1_mc(cp, pb, pol, McConfig(seed=9, samples=200_000))
        assert abs(mc - quad) < 3.0 * se


class TestRayleighBaseline:
    def test_adapted_beats_baseline_under_real_fading(self):
        pb = table_budget()
        for m in (5.0, 10.0):
            cp = table_channel(m=m, ms=1.0)
            pol = power_alloc.make_policy(cp, pb, method="closed-form")
            adapted = power_alloc.ergodic_capacity_p1(cp, pb, pol)
            baseline = power_alloc.rayleigh_baseline_capacity(cp, pb)
            assert adapted > baseline

    def test_baseline_flat_in_fading_parameter(self):
        pb = table_budget()
        vals = [
            power_alloc.rayleigh_baseline_capacity(table_channel(m=m, ms=1.0), pb)
            for m in (1.0, 5.0, 10.0)
        ]
        spread = (max(vals) - min(vals)) / min(vals)
        assert spread <= 0.05

    def test_self_consistent_when_channel_is_rayleigh_like(self):
        # K = N = 1, m = 1, huge m_s: the true law is essentially
        # exponential, so the adapted and assumed-model capacities agree
        cp = ChannelParams.homogeneous(1, FadingParams(1.0, 1e4, 5.0), 1, SQRT300, SQRT300, 0.5)
        pb = table_budget()
        pol = power_alloc.make_policy(cp, pb, method="exact")
        adapted = power_alloc.ergodic_capacity_p1(cp, pb, pol)
        baseline = power_alloc.rayleigh_baseline_capacity(cp, pb)
        assert baseline == pytest.approx(adapted, rel=0.02)


class TestBudgetValidation:
    def test_rejects_bad_budgets(self):
        with pytest.raises(ValueError):
            PowerBudget(avg_power=2.0, peak_power=1.0, noise_psd=1e-13, bandwidth=2e8)
        with pytest.raises(ValueError):
            PowerBudget(avg_power=0.0, peak_power=1.0, noise_psd=1e-13, bandwidth=2e8)
