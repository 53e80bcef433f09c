"""Shadow chain tests against a tractable Gaussian auxiliary family.

With t(x) = x and x ~ N(theta, 1) the auxiliary density is
exp(theta x - x^2 / 2) / Z(theta), an exponential family whose mean
parameter equals theta.  The maximum likelihood estimate for observed
t_obs is therefore t_obs itself, and the posterior under a wide uniform
prior is close to N(t_obs, 1).  This gives exact targets for both the
annealing and the constant temperature drivers without any pattern
machinery.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowsa.core import ConfigError, ContractViolation, PriorBox
from shadowsa.shadow import (
    Schedule,
    ShadowConfig,
    abc_shadow_run,
    shadow_acceptance,
    shadow_inner_update,
    ssa_run,
)


class GaussianAux:
    """Exact auxiliary sampler for the N(theta, 1) exponential family."""

    def __init__(self, seed, dim=1):
        self.rng = np.random.default_rng(seed)
        self.dim = dim

    def refresh(self, theta, n_steps):
        return np.asarray(theta, dtype=float) + self.rng.standard_normal(self.dim)


class LinearAux:
    """Noise free refresher returning t_obs + A (theta - theta_star).

    The statistic discrepancy is then -A (theta - theta_star), which
    points back toward theta_star whenever A is positive definite.
    """

    def __init__(self, a_matrix, theta_star, t_obs):
        self.a = np.asarray(a_matrix, dtype=float)
        self.star = np.asarray(theta_star, dtype=float)
        self.t_obs = np.asarray(t_obs, dtype=float)

    def refresh(self, theta, n_steps):
        th = np.asarray(theta, dtype=float)
        return self.t_obs + self.a @ (th - self.star)


class TestSchedule:
    def test_constant(self):
        sched = Schedule.constant(2.5)
        assert sched.temperature(0) == 2.5
        assert sched.temperature(1000) == 2.5
        assert sched.delta_scale(1000) == 1.0

    def test_geometric_closed_form(self):
        sched = Schedule.geometric(t0=10.0, k_t=0.999, k_delta=0.9995)
        assert sched.temperature(0) == 10.0
        assert sched.temperature(7) == 10.0 * 0.999**7
        assert sched.delta_scale(7) == 0.9995**7

    def test_logarithmic_closed_form(self):
        sched = Schedule.logarithmic(3.0)
        assert sched.temperature(0) == 3.0 / math.log(2.0)
        assert sched.temperature(98) == 3.0 / math.log(100.0)

    def test_temperatures_never_increase(self):
        geo = Schedule.geometric(t0=5.0, k_t=0.995, k_delta=0.999)
        log = Schedule.logarithmic(2.0)
        for sched in (geo, log):
            temps = [sched.temperature(j) for j in range(0, 5000, 17)]
            assert all(a >= b for a, b in zip(temps, temps[1:]))
            assert all(t > 0.0 for t in temps)
        scales = [geo.delta_scale(j) for j in range(0, 5000, 17)]
        assert all(a >= b for a, b in zip(scales, scales[1:]))

    def test_logarithmic_identity(self):
        """T_j * log(j + 2) recovers the scale at every index."""
        sched = Schedule.logarithmic(7.5)
        for j in (0, 1, 10, 999, 123_456):
            assert sched.temperature(j) * math.log(j + 2) == pytest.approx(
                7.5, rel=1e-12
            )

    def test_validation(self):
        with pytest.raises(ConfigError):
            Schedule("quadratic")
        with pytest.raises(ConfigError):
            Schedule.geometric(t0=-1.0, k_t=0.99)
        with pytest.raises(ConfigError):
            Schedule.geometric(t0=1.0, k_t=1.2)
        with pytest.raises(ConfigError):
            Schedule.geometric(t0=1.0, k_t=0.99, k_delta=0.0)


class TestShadowConfig:
    def test_normalizes_delta(self):
        config = ShadowConfig(delta=[0.1, 0.2], m=10, n_outer=5, aux_steps=3)
        assert config.delta == (0.1, 0.2)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ConfigError):
            ShadowConfig(delta=(0.1,), m=0, n_outer=5, aux_steps=3)
        with pytest.raises(ConfigError):
            ShadowConfig(delta=(0.1,), m=10, n_outer=5, aux_steps=3, keep_every=0)
        with pytest.raises(ConfigError):
            ShadowConfig(delta=(-0.1,), m=10, n_outer=5, aux_steps=3)


class TestAcceptance:
    def test_hand_values(self):
        theta = (0.0, 0.0)
        t_obs = (5.0, 3.0)
        t_aux = (4.0, 6.0)
        # (psi - theta) . (t_obs - t_aux) = 0.1 * 1 + (-0.2) * (-3) = 0.7
        assert shadow_acceptance(theta, (0.1, -0.2), t_obs, t_aux) == 1.0
        down = shadow_acceptance(theta, (-0.1, 0.2), t_obs, t_aux)
        assert abs(down - math.exp(-0.7)) < 1e-15
        tempered = shadow_acceptance(theta, (-0.1, 0.2), t_obs, t_aux, temperature=2.0)
        assert abs(tempered - math.exp(-0.35)) < 1e-15

    def test_prior_box_hand_value(self):
        """Inside the box the indicator drops out; outside it forces zero."""
        prior = PriorBox((0.0, -7.0), (7.0, 0.0))
        theta = (4.6, -0.7)
        t_obs = (45.3, 18.0)
        t_aux = (50.0, 20.0)
        # (0.01, 0) . (-4.7, -2.0) = -0.047
        inside = shadow_acceptance(theta, (4.61, -0.7), t_obs, t_aux, prior)
        assert abs(inside - math.exp(-0.047)) < 1e-13
        assert abs(inside - 0.9541) < 1e-4
        outside = shadow_acceptance(theta, (7.2, -0.7), t_obs, t_aux, prior)
        assert outside == 0.0
        below = shadow_acceptance(theta, (4.61, 0.4), t_obs, t_aux, prior)
        assert below == 0.0

    def test_guards(self):
        with pytest.raises(ContractViolation):
            shadow_acceptance((0.0,), (0.0, 0.0), (1.0,), (1.0,))
        with pytest.raises(ContractViolation):
            shadow_acceptance((0.0,), (0.1,), (1.0,), (1.0,), temperature=0.0)

    @given(
        st.lists(st.floats(-2, 2), min_size=2, max_size=2),
        st.lists(st.floats(-2, 2), min_size=2, max_size=2),
        st.lists(st.floats(-3, 3), min_size=2, max_size=2),
        st.floats(-50, 50),
    )
    @settings(max_examples=60, deadline=None)
    def test_shift_invariance(self, theta, psi, diff, shift):
        """Translating theta, psi and the box together leaves acceptance
        unchanged: only the difference psi - theta enters the exponent."""
        prior = PriorBox((-4.0, -4.0), (4.0, 4.0))
        moved = PriorBox((-4.0 + shift, -4.0 + shift), (4.0 + shift, 4.0 + shift))
        t_aux = [0.0, 0.0]
        base = shadow_acceptance(theta, psi, diff, t_aux, prior)
        shifted = shadow_acceptance(
            [t + shift for t in theta], [p + shift for p in psi], diff, t_aux, moved
        )
        if base == 0.0:
            assert shifted == 0.0
        else:
            assert math.isclose(base, shifted, rel_tol=1e-9)

    @given(
        st.lists(st.floats(-3, 3), min_size=2, max_size=2),
        st.lists(st.floats(-3, 3), min_size=2, max_size=2),
        st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    )
    @settings(max_examples=60, deadline=None)
    def test_detailed_balance_ratio(self, theta, psi, diff):
        """acc(theta->psi) / acc(psi->theta) must equal the density ratio."""
        t_aux = [0.0, 0.0]
        fwd = shadow_acceptance(theta, psi, diff, t_aux)
        bwd = shadow_acceptance(psi, theta, diff, t_aux)
        s = sum((p - t) * d for p, t, d in zip(psi, theta, diff))
        assert math.isclose(fwd / bwd, math.exp(s), rel_tol=1e-9)


class TestInnerUpdate:
    def test_consumes_fixed_draw_count(self):
        prior = PriorBox((-5.0, -5.0), (5.0, 5.0))
        rng = np.random.default_rng(42)
        shadow_inner_update(
            (0.0, 0.0), (1.0, 1.0), (0.5, 0.5), (0.2, 0.2), prior, rng
        )
        probe = np.random.default_rng(42)
        probe.random(3)
        assert rng.random() == probe.random()

    def test_zero_diff_always_accepts_inside_box(self):
        prior = PriorBox((-5.0,), (5.0,))
        rng = np.random.default_rng(0)
        theta = np.array([0.0])
        for _ in range(50):
            theta, accepted = shadow_inner_update(
                theta, (2.0,), (2.0,), (0.3,), prior, rng
            )
            assert accepted
            assert prior.contains(theta)

    def test_proposals_outside_box_rejected(self):
        prior = PriorBox((-0.01,), (0.01,))
        rng = np.random.default_rng(1)
        theta = np.array([0.0])
        moved = 0
        for _ in range(100):
            new, accepted = shadow_inner_update(
                theta, (0.0,), (0.0,), (5.0,), prior, rng
            )
            if accepted:
                moved += 1
                assert prior.contains(new)
            else:
                assert np.array_equal(new, theta)
            theta = new
        assert moved < 5


class TestRuns:
    def _config(self, **kw):
        base = dict(delta=(0.4,), m=20, n_outer=4000, aux_steps=1, keep_every=1)
        base.update(kw)
        return ShadowConfig(**base)

    def test_annealing_converges_to_mle(self):
        """The late-run wander scale is about m * delta / 4 per outer
        iteration, so delta must shrink enough for a tight estimate."""
        target = 0.7
        prior = PriorBox((-5.0,), (5.0,))
        config = self._config(m=5)
        sched = Schedule.geometric(t0=1.0, k_t=0.998, k_delta=0.999)
        out = ssa_run(
            GaussianAux(314),
            (target,),
            prior,
            config,
            sched,
            np.random.default_rng(2718),
            theta0=(4.0,),
        )
        assert abs(out.theta_hat[0] - target) < 0.1
        assert out.final_temperature == pytest.approx(0.998**3999, rel=1e-12)

    def test_annealing_two_dimensional(self):
        target = np.array([1.2, -0.4])
        prior = PriorBox((-5.0, -5.0), (5.0, 5.0))
        config = ShadowConfig(delta=(0.4, 0.4), m=5, n_outer=4000, aux_steps=1)
        sched = Schedule.geometric(t0=1.0, k_t=0.998, k_delta=0.999)
        out = ssa_run(
            GaussianAux(99, dim=2),
            target,
            prior,
            config,
            sched,
            np.random.default_rng(100),
        )
        assert np.all(np.abs(out.theta_hat - target) < 0.15)

    def test_constant_temperature_posterior_mean(self):
        """At T = 1 the kept thetas should center on the posterior mean."""
        target = 1.5
        prior = PriorBox((-6.0,), (6.0,))
        config = self._config(delta=(0.3,), m=10)
        out = abc_shadow_run(
            GaussianAux(7),
            (target,),
            prior,
            config,
            np.random.default_rng(8),
            theta0=(0.0,),
        )
        kept = out.thetas[500:, 0]
        assert abs(kept.mean() - target) < 0.2
        assert 0.7 < kept.std() < 1.6

    def test_constant_schedule_reduction_is_bitwise(self):
        target = (0.5,)
        prior = PriorBox((-5.0,), (5.0,))
        config = self._config(n_outer=300)
        a = abc_shadow_run(
            GaussianAux(11), target, prior, config, np.random.default_rng(12)
        )
        b = ssa_run(
            GaussianAux(11),
            target,
            prior,
            config,
            Schedule.constant(1.0),
            np.random.default_rng(12),
        )
        assert np.array_equal(a.thetas, b.thetas)
        assert np.array_equal(a.theta_hat, b.theta_hat)
        assert np.array_equal(a.accept_rates, b.accept_rates)

    def test_trajectory_bookkeeping(self):
        prior = PriorBox((-5.0,), (5.0,))
        config = self._config(n_outer=95, keep_every=10)
        sched = Schedule.geometric(t0=2.0, k_t=0.99, k_delta=0.995)
        out = ssa_run(
            GaussianAux(1), (0.0,), prior, config, sched, np.random.default_rng(2)
        )
        assert list(out.iterations) == [10, 20, 30, 40, 50, 60, 70, 80, 90]
        assert out.n_kept == 9
        for row, it in enumerate(out.iterations):
            j = it - 1
            assert out.temperatures[row] == 2.0 * 0.99**j
            assert out.deltas[row, 0] == 0.4 * 0.995**j
        assert out.total_inner == 95 * 20
        assert 0.0 <= out.accept_rates[-1] <= 1.0
        assert out.thetas.shape == (9, 1)

    def test_deterministic_refresher_lands_near_fixed_point(self):
        """With t_aux = t_obs + A (theta - star) the acceptance always
        favors steps toward star, so the annealed driver must finish
        within a few final proposal widths of it."""
        star = np.array([1.1, -0.7])
        t_obs = np.array([45.0, 18.0])
        aux = LinearAux([[3.0, 0.5], [0.5, 2.0]], star, t_obs)
        prior = PriorBox((-5.0, -5.0), (5.0, 5.0))
        config = ShadowConfig(
            delta=(0.08, 0.08), m=4, n_outer=3000, aux_steps=1, keep_every=10
        )
        sched = Schedule.geometric(t0=1.0, k_t=0.997, k_delta=0.999)
        out = ssa_run(
            aux, t_obs, prior, config, sched,
            np.random.default_rng(5), theta0=(4.0, 4.0),
        )
        assert np.all(np.abs(out.theta_hat - star) < 0.05)
        assert np.all(np.array(out.final_delta) < 0.005)

    def test_kept_thetas_stay_in_box_and_concentrate(self):
        star = np.array([0.3, -1.2])
        t_obs = np.array([10.0, -4.0])
        aux = LinearAux(np.diag([2.0, 3.0]), star, t_obs)
        prior = PriorBox((-3.0, -3.0), (3.0, 3.0))
        config = ShadowConfig(
            delta=(0.2, 0.2), m=4, n_outer=2000, aux_steps=1, keep_every=5
        )
        sched = Schedule.geometric(t0=1.0, k_t=0.996, k_delta=0.998)
        out = ssa_run(
            aux, t_obs, prior, config, sched,
            np.random.default_rng(77), theta0=(2.5, 2.5),
        )
        inside = [bool(prior.contains(row)) for row in out.thetas]
        assert all(inside)
        tenth = out.n_kept // 10
        head = out.thetas[:tenth].var(axis=0)
        tail = out.thetas[-tenth:].var(axis=0)
        assert np.all(tail < head)

    def test_run_validation(self):
        prior = PriorBox((-1.0,), (1.0,))
        config = self._config(n_outer=5)
        with pytest.raises(ConfigError):
            ssa_run(
                GaussianAux(0), (0.0,), prior, config,
                Schedule.constant(), np.random.default_rng(0), theta0=(2.0,),
            )
        with pytest.raises(ConfigError):
            ssa_run(
                GaussianAux(0), (0.0, 0.0), prior, config,
                Schedule.constant(), np.random.default_rng(0),
            )
        bad = ShadowConfig(delta=(0.1, 0.1), m=2, n_outer=5, aux_steps=1)
        with pytest.raises(ConfigError):
            ssa_run(
                GaussianAux(0), (0.0,), prior, bad,
                Schedule.constant(), np.random.default_rng(0),
            )
