"""Shadow parameter chains: posterior sampling and simulated annealing.

Both drivers share one loop.  Each outer iteration refreshes an auxiliary
pattern chain with ``aux_steps`` updates at the current parameter value,
then performs ``m`` parameter updates.  A parameter update proposes psi
uniformly in a per-component box of widths delta around theta and accepts
with probability

    min{1, exp((psi - theta) . (t_obs - t_aux) / T)}

multiplied by the uniform prior box indicator of psi.  With constant
temperature T = 1 the chain samples the approximate posterior; with a
decreasing temperature and shrinking delta it anneals toward the maximum
a posteriori value, which for a uniform prior is the maximum likelihood
estimate.  The estimate reported by an annealing run is the final chain
state.

The auxiliary chain is any object with ``refresh(theta, n_steps)``
returning the statistic vector of the refreshed pattern; the pattern
persists between refreshes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, ContractViolation, PriorBox

__all__ = [
    "Schedule",
    "ShadowConfig",
    "SsaTrajectory",
    "shadow_acceptance",
    "shadow_inner_update",
    "ssa_run",
    "abc_shadow_run",
]

_SCHEDULE_KINDS = ("constant", "geometric", "logarithmic")


@dataclass(frozen=True)
class Schedule:
    """Cooling schedule: temperature and proposal-width decay per iteration.

    ``temperature(j)`` and ``delta_scale(j)`` give the values in force
    during outer iteration ``j`` (0 based), evaluated in closed form so a
    trajectory can be reproduced from the iteration index alone.
    """

    kind: str
    t0: float = 1.0
    k_t: float = 1.0
    k_delta: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in _SCHEDULE_KINDS:
            raise ConfigError(
                f"unknown schedule kind {self.kind!r}, expected one of {_SCHEDULE_KINDS}"
            )
        if not (self.t0 > 0.0 and math.isfinite(self.t0)):
            raise ConfigError("schedule t0 must be positive and finite")
        if not (0.0 < self.k_t <= 1.0):
            raise ConfigError("schedule k_t must lie in (0, 1]")
        if not (0.0 < self.k_delta <= 1.0):
            raise ConfigError("schedule k_delta must lie in (0, 1]")

    @classmethod
    def constant(cls, t0: float = 1.0, k_delta: float = 1.0) -> "Schedule":
        return cls("constant", t0=t0, k_delta=k_delta)

    @classmethod
    def geometric(cls, t0: float, k_t: float, k_delta: float = 1.0) -> "Schedule":
        return cls("geometric", t0=t0, k_t=k_t, k_delta=k_delta)

    @classmethod
    def logarithmic(cls, scale: float, k_delta: float = 1.0) -> "Schedule":
        """T_j = scale / log(j + 2)."""
        return cls("logarithmic", t0=scale, k_delta=k_delta)

    def temperature(self, j: int) -> float:
        if self.kind == "constant":
            return self.t0
        if self.kind == "geometric":
            return self.t0 * self.k_t**j
        return self.t0 / math.log(j + 2.0)

    def delta_scale(self, j: int) -> float:
        return self.k_delta**j


@dataclass(frozen=True)
class ShadowConfig:
    """Run sizes for a shadow chain.

    delta is the initial per-component proposal box width, m the number
    of parameter updates per outer iteration, aux_steps the number of
    pattern updates per auxiliary refresh, keep_every the thinning
    stride of the recorded trajectory.
    """

    delta: tuple
    m: int
    n_outer: int
    aux_steps: int
    keep_every: int = 1

    def __post_init__(self) -> None:
        delta = tuple(float(d) for d in np.atleast_1d(np.asarray(self.delta, dtype=float)))
        object.__setattr__(self, "delta", delta)
        if any(not (d > 0.0 and math.isfinite(d)) for d in delta):
            raise ConfigError("all proposal widths must be positive and finite")
        for name in ("m", "n_outer", "aux_steps", "keep_every"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")


@dataclass(frozen=True)
class SsaTrajectory:
    """Thinned record of a shadow run plus the final chain state.

    Row ``i`` stores iteration number, temperature and proposal widths in
    force during that outer iteration, the parameter after it, and the
    cumulative fraction of accepted parameter updates so far.
    """

    iterations: np.ndarray
    temperatures: np.ndarray
    deltas: np.ndarray
    thetas: np.ndarray
    accept_rates: np.ndarray
    theta_hat: np.ndarray
    final_temperature: float
    final_delta: np.ndarray
    accepted_inner: int
    total_inner: int
    stat_names: tuple = field(default=())

    @property
    def n_kept(self) -> int:
        return self.thetas.shape[0]


def _inner_updates(theta, diff, delta, temperature, lower, upper, m, rand):
    """m in-place parameter updates; returns the number accepted.

    Every update consumes exactly k + 1 uniforms (k proposal components
    plus one acceptance draw), so the random stream position depends only
    on the update count.
    """
    k = len(theta)
    inv_t = 1.0 / temperature
    accepted = 0
    for _ in range(m):
        inside = True
        psi = [0.0] * k
        for i in range(k):
            v = theta[i] + delta[i] * (rand() - 0.5)
            psi[i] = v
            if v < lower[i] or v > upper[i]:
                inside = False
        u = rand()
        if not inside:
            continue
        s = 0.0
        for i in range(k):
            s += (psi[i] - theta[i]) * diff[i]
        s *= inv_t
        if s >= 0.0 or u < math.exp(s):
            for i in range(k):
                theta[i] = psi[i]
            accepted += 1
    return accepted


def shadow_acceptance(
    theta, psi, t_obs, t_aux, prior: PriorBox | None = None, temperature: float = 1.0
) -> float:
    """Acceptance probability of psi given theta.

    Zero when psi falls outside the prior box; otherwise
    min{1, exp((psi - theta) . (t_obs - t_aux) / T)}.  The uniform prior
    density cancels inside the box, so only the indicator remains.
    """
    theta = np.asarray(theta, dtype=float)
    psi = np.asarray(psi, dtype=float)
    t_obs = np.asarray(t_obs, dtype=float)
    t_aux = np.asarray(t_aux, dtype=float)
    if not (theta.shape == psi.shape == t_obs.shape == t_aux.shape):
        raise ContractViolation("theta, psi and statistic vectors must share a shape")
    if temperature <= 0.0:
        raise ContractViolation("temperature must be positive")
    if prior is not None and not prior.contains(psi):
        return 0.0
    s = float(np.dot(psi - theta, t_obs - t_aux)) / temperature
    if s >= 0.0:
        return 1.0
    return math.exp(s)


def shadow_inner_update(
    theta,
    t_obs,
    t_aux,
    delta,
    prior: PriorBox,
    rng: np.random.Generator,
    temperature: float = 1.0,
):
    """One parameter update; returns (new_theta, accepted)."""
    th = [float(v) for v in np.atleast_1d(np.asarray(theta, dtype=float))]
    t_obs = np.asarray(t_obs, dtype=float)
    t_aux = np.asarray(t_aux, dtype=float)
    widths = [float(d) for d in np.atleast_1d(np.asarray(delta, dtype=float))]
    k = len(th)
    if prior.dim != k or t_obs.shape != (k,) or t_aux.shape != (k,) or len(widths) != k:
        raise ContractViolation("inconsistent dimensions in parameter update")
    if temperature <= 0.0:
        raise ContractViolation("temperature must be positive")
    diff = [float(t_obs[i] - t_aux[i]) for i in range(k)]
    lower = [float(v) for v in prior.lower]
    upper = [float(v) for v in prior.upper]
    accepted = _inner_updates(
        th, diff, widths, float(temperature), lower, upper, 1, rng.random
    )
    return np.array(th), accepted == 1


def ssa_run(
    aux,
    t_obs,
    prior: PriorBox,
    config: ShadowConfig,
    schedule: Schedule,
    rng: np.random.Generator,
    theta0=None,
    stat_names: tuple = (),
) -> SsaTrajectory:
    """Run a shadow chain under the given cooling schedule.

    ``aux`` supplies the auxiliary statistics via ``refresh(theta,
    n_steps)``.  ``rng`` drives the parameter proposals only; the
    auxiliary chain carries its own generator.  ``theta0`` defaults to
    the prior box center and must lie inside the prior box.
    """
    k = prior.dim
    t_obs = np.asarray(t_obs, dtype=float)
    if t_obs.shape != (k,):
        raise ConfigError(
            f"observed statistics have shape {t_obs.shape}, prior has dimension {k}"
        )
    if len(config.delta) != k:
        raise ConfigError(
            f"config.delta has {len(config.delta)} components, prior has dimension {k}"
        )
    if theta0 is None:
        theta0 = prior.center
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (k,):
        raise ConfigError(f"theta0 has shape {theta0.shape}, expected ({k},)")
    if not prior.contains(theta0):
        raise ConfigError("theta0 lies outside the prior box")

    th = [float(v) for v in theta0]
    t_obs_list = [float(v) for v in t_obs]
    lower = [float(v) for v in prior.lower]
    upper = [float(v) for v in prior.upper]
    delta0 = list(config.delta)
    rand = rng.random
    m = config.m
    aux_steps = config.aux_steps
    keep_every = config.keep_every

    kept_iter: list[int] = []
    kept_temp: list[float] = []
    kept_delta: list[list[float]] = []
    kept_theta: list[list[float]] = []
    kept_rate: list[float] = []
    accepted = 0
    temperature = schedule.t0
    delta = delta0

    for j in range(config.n_outer):
        temperature = schedule.temperature(j)
        scale = schedule.delta_scale(j)
        delta = [d * scale for d in delta0]
        t_aux = aux.refresh(th, aux_steps)
        diff = [t_obs_list[i] - float(t_aux[i]) for i in range(k)]
        accepted += _inner_updates(
            th, diff, delta, temperature, lower, upper, m, rand
        )
        if (j + 1) % keep_every == 0:
            kept_iter.append(j + 1)
            kept_temp.append(temperature)
            kept_delta.append(delta)
            kept_theta.append(list(th))
            kept_rate.append(accepted / ((j + 1) * m))

    return SsaTrajectory(
        iterations=np.array(kept_iter, dtype=int),
        temperatures=np.array(kept_temp),
        deltas=np.array(kept_delta, dtype=float).reshape(len(kept_iter), k),
        thetas=np.array(kept_theta, dtype=float).reshape(len(kept_iter), k),
        accept_rates=np.array(kept_rate),
        theta_hat=np.array(th),
        final_temperature=temperature,
        final_delta=np.array(delta),
        accepted_inner=accepted,
        total_inner=config.n_outer * m,
        stat_names=tuple(stat_names),
    )


def abc_shadow_run(
    aux,
    t_obs,
    prior: PriorBox,
    config: ShadowConfig,
    rng: np.random.Generator,
    theta0=None,
    stat_names: tuple = (),
) -> SsaTrajectory:
    """Posterior-sampling shadow chain: the annealing run at constant T = 1.

    The kept thetas form the (thinned) posterior sample.
    """
    return ssa_run(
        aux,
        t_obs,
        prior,
        config,
        Schedule.constant(1.0),
        rng,
        theta0=theta0,
        stat_names=stat_names,
    )
