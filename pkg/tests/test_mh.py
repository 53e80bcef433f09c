"""Birth/death/move chain tests against exact Poisson-case oracles.

With the interaction component set to zero the chain targets a plain
Poisson process, whose count distribution and pair-count expectation are
known in closed form.  Those give sharp end-to-end checks of the
acceptance ratios, including window boundary handling.
"""

import math

import numpy as np
import pytest
from scipy.stats import poisson

from shadowsa.core import ConfigError, ContractViolation, Pattern, Window
from shadowsa.mh import (
    ChainState,
    MoveMix,
    PatternChain,
    mean_statistics,
    mh_step,
    sample_pattern,
)
from shadowsa.models import (
    AreaInteractionModel,
    CandyModel,
    GalaxyModel,
    StraussModel,
    sufficient_statistics,
)

UNIT = Window((0.0, 0.0), (1.0, 1.0))


def poisson_pair_integral(r: float) -> float:
    """Integral of 1(|x - y| < r) over the unit square squared.

    Computed from the set covariance of the unit square:
    pi r^2 - (8/3) r^3 + r^4 / 2 for r <= 1.
    """
    return math.pi * r**2 - (8.0 / 3.0) * r**3 + 0.5 * r**4


class TestMoveMix:
    def test_default_sums_to_one(self):
        mix = MoveMix()
        assert abs(mix.p_birth + mix.p_death + mix.p_move - 1.0) < 1e-12

    def test_rejects_bad_sum(self):
        with pytest.raises(ConfigError):
            MoveMix(0.5, 0.5, 0.5)

    def test_rejects_negative(self):
        with pytest.raises(ConfigError):
            MoveMix(-0.1, 0.6, 0.5)

    def test_rejects_birth_without_death(self):
        with pytest.raises(ConfigError):
            MoveMix(0.5, 0.0, 0.5)

    def test_move_only_allowed(self):
        MoveMix(0.0, 0.0, 1.0)


class TestPoissonCalibration:
    """theta = (log beta, 0) makes the Strauss chain an exact Poisson sampler."""

    def test_mean_count_and_pair_count(self):
        beta = 50.0
        r = 0.1
        model = StraussModel(r=r)
        rng = np.random.default_rng(20240811)
        out = mean_statistics(
            model,
            (math.log(beta), 0.0),
            UNIT,
            n_samples=300,
            steps_between=150,
            burn_in=4000,
            rng=rng,
        )
        expected_n = beta * UNIT.volume
        expected_sr = 0.5 * beta**2 * poisson_pair_integral(r)
        mcse_n = out.std[0] / math.sqrt(out.n_samples)
        mcse_sr = out.std[1] / math.sqrt(out.n_samples)
        assert abs(out.mean[0] - expected_n) < 5.0 * mcse_n
        assert abs(out.mean[1] - expected_sr) < 5.0 * mcse_sr

    def test_count_distribution_total_variation(self):
        beta = 1.5
        model = StraussModel(r=0.1)
        chain = ChainState.from_model(model, UNIT, rng=np.random.default_rng(7))
        theta = (math.log(beta), 0.0)
        chain.run(theta, 500)
        counts: dict[int, int] = {}
        n_samples = 4000
        for _ in range(n_samples):
            chain.run(theta, 40)
            counts[chain.n] = counts.get(chain.n, 0) + 1
        top = max(counts) + 1
        empirical = np.array([counts.get(k, 0) / n_samples for k in range(top)])
        pmf = poisson.pmf(np.arange(top), beta)
        tv = 0.5 * (np.abs(empirical - pmf).sum() + (1.0 - pmf.sum()))
        assert tv < 0.05


class TestChainMechanics:
    def test_empty_pattern_move_only_stays_empty(self):
        model = StraussModel(r=0.1)
        chain = ChainState.from_model(model, UNIT, rng=np.random.default_rng(3))
        accepted = chain.run((1.0, 0.0), 200, MoveMix(0.0, 0.0, 1.0))
        assert accepted == 0
        assert chain.n == 0
        assert chain.steps == 200

    def test_move_only_preserves_count(self):
        model = StraussModel(r=0.1)
        rng = np.random.default_rng(11)
        init = Pattern(UNIT, rng.random((12, 2)))
        chain = ChainState.from_model(model, UNIT, rng=rng, init=init)
        chain.run((2.0, -0.5), 500, MoveMix(0.0, 0.0, 1.0))
        assert chain.n == 12
        recomputed = sufficient_statistics(model, chain.pattern())
        assert np.array_equal(chain.stats(), recomputed)

    def test_determinism_same_seed(self):
        model = StraussModel(r=0.1)
        theta = (4.0, -0.7)
        pats = []
        for _ in range(2):
            chain = ChainState.from_model(
                model, UNIT, rng=np.random.default_rng(99)
            )
            chain.run(theta, 3000)
            pats.append(chain.pattern())
        assert np.array_equal(pats[0].points, pats[1].points)

    def test_different_seeds_differ(self):
        model = StraussModel(r=0.1)
        theta = (4.0, -0.7)
        a = sample_pattern(model, theta, UNIT, 3000, rng=np.random.default_rng(1))
        b = sample_pattern(model, theta, UNIT, 3000, rng=np.random.default_rng(2))
        assert a.points.shape != b.points.shape or not np.array_equal(
            a.points, b.points
        )

    def test_theta_length_guard(self):
        model = StraussModel(r=0.1)
        chain = ChainState.from_model(model, UNIT, rng=np.random.default_rng(0))
        with pytest.raises(ContractViolation):
            chain.run((1.0,), 10)

    def test_mh_step_advances_one_step(self):
        model = StraussModel(r=0.1)
        chain = ChainState.from_model(model, UNIT, rng=np.random.default_rng(0))
        mh_step(chain, (3.0, 0.0))
        assert chain.steps == 1

    def test_mean_statistics_guards(self):
        model = StraussModel(r=0.1)
        with pytest.raises(ConfigError):
            mean_statistics(model, (1.0, 0.0), UNIT, n_samples=0)
        with pytest.raises(ConfigError):
            mean_statistics(model, (1.0, 0.0), UNIT, steps_between=0)

    def test_initial_pattern_window_mismatch(self):
        model = StraussModel(r=0.1)
        other = Window((0.0, 0.0), (2.0, 2.0))
        init = Pattern(other, [[0.5, 0.5]])
        with pytest.raises(ConfigError):
            ChainState.from_model(model, UNIT, init=init)


class TestCacheConsistencyThroughChain:
    """After a long run the cached statistics must match a fresh recompute."""

    def _assert_consistent(self, model, chain, exact_components):
        cached = chain.stats()
        recomputed = sufficient_statistics(model, chain.pattern())
        for i in range(cached.shape[0]):
            if i in exact_components:
                assert cached[i] == recomputed[i]
            else:
                assert abs(cached[i] - recomputed[i]) <= 1e-6 * max(
                    1.0, abs(recomputed[i])
                )

    def test_strauss(self):
        model = StraussModel(r=0.12)
        chain = ChainState.from_model(model, UNIT, rng=np.random.default_rng(21))
        chain.run((4.2, -1.0), 4000)
        assert chain.n > 0
        self._assert_consistent(model, chain, {0, 1})

    def test_area_interaction(self):
        model = AreaInteractionModel(r=0.1)
        chain = ChainState.from_model(model, UNIT, rng=np.random.default_rng(22))
        chain.run((4.0, 1.0), 1200)
        assert chain.n > 0
        self._assert_consistent(model, chain, {0})

    def test_candy(self):
        window = Window((0.0, 0.0), (1.5, 1.0))
        model = CandyModel(length=0.12, r_c=0.01, tau_c=0.5, tau_r=0.5)
        chain = ChainState.from_model(model, window, rng=np.random.default_rng(23))
        chain.run((4.5, 4.0, 1.5, -1.0), 1500)
        assert chain.n > 0
        pattern = chain.pattern()
        assert pattern.orientation is not None
        assert np.all(pattern.orientation >= 0.0)
        assert np.all(pattern.orientation < math.pi)
        self._assert_consistent(model, chain, {0, 1, 2, 3})

    def test_galaxy(self):
        cube = Window((0.0, 0.0, 0.0), (2.0, 2.0, 2.0))
        spine = [[(0.2, 1.0, 1.0), (1.8, 1.0, 1.0)]]
        model = GalaxyModel(r=0.4, spines=spine)
        chain = ChainState.from_model(model, cube, rng=np.random.default_rng(24))
        chain.run((2.0, 1.5, 0.5), 800)
        assert chain.n > 0
        self._assert_consistent(model, chain, {0})


class TestPatternChain:
    def test_refresh_returns_stats_and_persists(self):
        model = StraussModel(r=0.1)
        aux = PatternChain(model, UNIT, rng=np.random.default_rng(5))
        s1 = aux.refresh((4.0, -0.5), 300)
        n_after_first = aux.chain.n
        assert s1[0] == n_after_first
        s2 = aux.refresh((4.0, -0.5), 100)
        assert aux.chain.steps == 400
        assert s2.shape == (2,)
