"""Birth, death and move Metropolis-Hastings sampler for Gibbs patterns.

The chain targets p(y | theta) proportional to exp(theta . t(y)) with
respect to the unit rate Poisson process on the window.  Births propose a
uniform location (segments also draw a fresh uniform orientation), deaths
remove a uniformly chosen item, moves relocate one item to a fresh uniform
location.  Acceptance ratios follow the standard birth/death form

    birth:  exp(theta . dt) * |W| * (p_death / p_birth) / (n + 1)
    death:  exp(theta . dt) * n * (p_birth / p_death) / |W|
    move:   exp(theta . dt)

with n the item count before the update.  A death or move proposed on an
empty pattern is rejected outright.  Rejected proposals leave the chain
state bitwise unchanged; only the random stream advances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, ContractViolation, Pattern, Window, pattern_validate

__all__ = [
    "MoveMix",
    "ChainState",
    "ThinnedStats",
    "mh_step",
    "sample_pattern",
    "mean_statistics",
    "PatternChain",
]


@dataclass(frozen=True)
class MoveMix:
    """Proposal mix for the three update types (must sum to one)."""

    p_birth: float = 1.0 / 3.0
    p_death: float = 1.0 / 3.0
    p_move: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        probs = (self.p_birth, self.p_death, self.p_move)
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise ConfigError("move mix probabilities must lie in [0, 1]")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ConfigError(f"move mix probabilities must sum to 1, got {sum(probs)}")
        if (self.p_birth > 0.0) != (self.p_death > 0.0):
            raise ConfigError("births and deaths must be enabled together")


DEFAULT_MIX = MoveMix()


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _empty_pattern(model, window: Window) -> Pattern:
    if model.kind == "segments":
        return Pattern(
            window, np.empty((0, 2)), orientation=[], seg_length=model.length
        )
    return Pattern(window, np.empty((0, window.dim)))


class ChainState:
    """A running pattern chain: model state, window geometry and rng."""

    __slots__ = (
        "model", "window", "state", "rng", "volume",
        "stat_dim", "segments", "dim", "accepted", "steps",
    )

    def __init__(self, model, pattern: Pattern, rng=None):
        violation = pattern_validate(pattern)
        if violation is not None:
            raise ContractViolation(
                f"initial pattern item {violation.index}: {violation.reason}"
            )
        self.model = model
        self.window = pattern.window
        self.state = model.new_state(pattern)
        self.rng = _as_generator(rng)
        self.volume = pattern.window.volume
        self.stat_dim = len(model.stat_names)
        self.segments = model.kind == "segments"
        self.dim = pattern.window.dim
        self.accepted = 0
        self.steps = 0

    @classmethod
    def from_model(cls, model, window: Window, rng=None, init: Pattern | None = None):
        pattern = init if init is not None else _empty_pattern(model, window)
        if init is not None and init.window is not window and not (
            np.array_equal(init.window.lower, window.lower)
            and np.array_equal(init.window.upper, window.upper)
        ):
            raise ConfigError("initial pattern window does not match the run window")
        return cls(model, pattern, rng=rng)

    @property
    def n(self) -> int:
        return self.state.n

    def stats(self) -> np.ndarray:
        return self.state.stats()

    def pattern(self) -> Pattern:
        return self.state.pattern()

    def acceptance_rate(self) -> float:
        return self.accepted / self.steps if self.steps else 0.0

    def run(self, theta, n_steps: int, mix: MoveMix = DEFAULT_MIX) -> int:
        """Advance the chain ``n_steps`` updates at fixed theta.

        Returns the number of accepted updates.  The loop is the hot path
        of every calibration and inference run, hence the scalar style.
        """
        th = tuple(float(v) for v in theta)
        if len(th) != self.stat_dim:
            raise ContractViolation(
                f"theta has {len(th)} components, model expects {self.stat_dim}"
            )
        if n_steps < 0:
            raise ContractViolation("n_steps must be nonnegative")
        st = self.state
        rand = self.rng.random
        exp = math.exp
        log = math.log
        p_birth = mix.p_birth
        p_bd = mix.p_birth + mix.p_death
        with_bd = mix.p_birth > 0.0
        log_vol_bd = (
            log(self.volume * mix.p_death / mix.p_birth) if with_bd else 0.0
        )
        lo = tuple(float(v) for v in self.window.lower)
        side = tuple(float(v) for v in self.window.upper - self.window.lower)
        three_d = self.dim == 3
        segments = self.segments
        pi = math.pi
        accepted = 0

        for _ in range(n_steps):
            u = rand()
            if u < p_birth:
                if three_d:
                    item = (
                        lo[0] + side[0] * rand(),
                        lo[1] + side[1] * rand(),
                        lo[2] + side[2] * rand(),
                    )
                elif segments:
                    item = (lo[0] + side[0] * rand(), lo[1] + side[1] * rand(), pi * rand())
                else:
                    item = (lo[0] + side[0] * rand(), lo[1] + side[1] * rand())
                delta = st.birth_delta(item)
                s = 0.0
                for a, b in zip(th, delta):
                    s += a * b
                log_r = s + log_vol_bd - log(st.n + 1.0)
                if log_r >= 0.0 or rand() < exp(log_r):
                    st.commit_birth()
                    accepted += 1
            elif u < p_bd:
                n = st.n
                if n == 0:
                    continue
                index = int(rand() * n)
                delta = st.death_delta(index)
                s = 0.0
                for a, b in zip(th, delta):
                    s += a * b
                log_r = s + log(float(n)) - log_vol_bd
                if log_r >= 0.0 or rand() < exp(log_r):
                    st.commit_death()
                    accepted += 1
            else:
                n = st.n
                if n == 0:
                    continue
                index = int(rand() * n)
                if three_d:
                    item = (
                        lo[0] + side[0] * rand(),
                        lo[1] + side[1] * rand(),
                        lo[2] + side[2] * rand(),
                    )
                elif segments:
                    item = (lo[0] + side[0] * rand(), lo[1] + side[1] * rand(), pi * rand())
                else:
                    item = (lo[0] + side[0] * rand(), lo[1] + side[1] * rand())
                d1 = st.death_delta(index)
                token = st.commit_death()
                d2 = st.birth_delta(item)
                s = 0.0
                for a, b1, b2 in zip(th, d1, d2):
                    s += a * (b1 + b2)
                if s >= 0.0 or rand() < exp(s):
                    st.commit_birth()
                    accepted += 1
                else:
                    st.undo_death(token)

        self.accepted += accepted
        self.steps += n_steps
        return accepted


def mh_step(chain: ChainState, theta, mix: MoveMix = DEFAULT_MIX) -> bool:
    """One update of the pattern chain; True when the proposal was accepted."""
    return chain.run(theta, 1, mix) == 1


def sample_pattern(
    model,
    theta,
    window: Window,
    n_steps: int,
    *,
    rng=None,
    init: Pattern | None = None,
    mix: MoveMix = DEFAULT_MIX,
) -> Pattern:
    """Pattern after ``n_steps`` chain updates from ``init`` (default empty)."""
    chain = ChainState.from_model(model, window, rng=rng, init=init)
    chain.run(theta, n_steps, mix)
    return chain.pattern()


@dataclass(frozen=True)
class ThinnedStats:
    """Thinned chain statistics: one row of t(X) per kept sample."""

    samples: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]


def mean_statistics(
    model,
    theta,
    window: Window,
    *,
    n_samples: int = 200,
    steps_between: int = 500,
    burn_in: int = 10_000,
    rng=None,
    init: Pattern | None = None,
    mix: MoveMix = DEFAULT_MIX,
    chain: ChainState | None = None,
) -> ThinnedStats:
    """Mean and spread of t(X) over a thinned chain at fixed theta."""
    if n_samples < 1:
        raise ConfigError("n_samples must be at least 1")
    if steps_between < 1:
        raise ConfigError("steps_between must be at least 1")
    if chain is None:
        chain = ChainState.from_model(model, window, rng=rng, init=init)
    chain.run(theta, burn_in, mix)
    rows = np.empty((n_samples, chain.stat_dim))
    for k in range(n_samples):
        chain.run(theta, steps_between, mix)
        rows[k] = chain.stats()
    mean = rows.mean(axis=0)
    std = rows.std(axis=0, ddof=1) if n_samples > 1 else np.zeros(chain.stat_dim)
    return ThinnedStats(samples=rows, mean=mean, std=std)


class PatternChain:
    """Persistent auxiliary pattern chain for the shadow drivers.

    The pattern survives between refreshes, so each refresh only needs a
    modest number of updates to track the current parameter value.
    ``refresh`` advances the chain and returns the statistic vector of the
    refreshed pattern.
    """

    def __init__(
        self,
        model,
        window: Window,
        rng=None,
        init: Pattern | None = None,
        mix: MoveMix = DEFAULT_MIX,
    ):
        self.chain = ChainState.from_model(model, window, rng=rng, init=init)
        self.mix = mix

    def refresh(self, theta, n_steps: int) -> np.ndarray:
        self.chain.run(theta, n_steps, self.mix)
        return self.chain.stats()

    def pattern(self) -> Pattern:
        return self.chain.pattern()
