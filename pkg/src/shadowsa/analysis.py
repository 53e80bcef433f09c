"""Chain output analysis: summaries, mode estimates and error bars.

The estimators here operate on plain sample arrays, so they apply equally
to parameter trajectories and to statistic chains.  The asymptotic error
report combines the exponential family identity Var_theta(t) = Fisher
information with a batch means estimate of the Monte Carlo noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as student_t

from .core import ConfigError, ContractViolation
from .mh import ChainState, MoveMix, DEFAULT_MIX

__all__ = [
    "quantiles",
    "epanechnikov_map",
    "one_sample_t_test",
    "batch_means_covariance",
    "mcse",
    "tv_distance",
    "error_propagation",
    "asymptotic_errors",
    "ErrorReport",
    "SampleSummary",
    "summarize_samples",
]


def _as_samples(samples, min_size: int = 1) -> np.ndarray:
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ConfigError(f"samples must be 1 or 2 dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_size:
        raise ConfigError(f"need at least {min_size} samples, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError("samples contain non finite values")
    return arr


def quantiles(samples, qs=(0.25, 0.5, 0.75)) -> np.ndarray:
    """Linearly interpolated quantiles, one row per requested level.

    The midpoint convention follows linear interpolation between order
    statistics, so the median of (1, 2, 3, 4) is 2.5.
    """
    arr = _as_samples(samples)
    qs = np.atleast_1d(np.asarray(qs, dtype=float))
    if np.any((qs < 0.0) | (qs > 1.0)):
        raise ConfigError("quantile levels must lie in [0, 1]")
    return np.quantile(arr, qs, axis=0)


def epanechnikov_map(samples, grid_size: int = 512, bandwidth: float | None = None):
    """Mode of an Epanechnikov kernel density estimate on a uniform grid.

    The kernel is K(u) = 0.75 (1 - u^2) on |u| <= 1; the default
    bandwidth is 2.34 sigma n^(-1/5).  The grid spans [min, max] of the
    samples with ``grid_size`` points and the first maximizer wins ties.
    A degenerate sample (zero spread) returns its common value.
    """
    flat = _as_samples(samples)
    if flat.shape[1] != 1:
        raise ConfigError("mode estimation expects a single component")
    arr = flat[:, 0]
    n = arr.size
    lo = float(arr.min())
    hi = float(arr.max())
    sigma = float(arr.std(ddof=1)) if n > 1 else 0.0
    if hi == lo or sigma == 0.0:
        return lo
    h = float(bandwidth) if bandwidth is not None else 2.34 * sigma * n ** (-0.2)
    if h <= 0.0:
        raise ConfigError("bandwidth must be positive")
    grid = np.linspace(lo, hi, grid_size)
    density = np.zeros(grid_size)
    chunk = max(1, 2_000_000 // grid_size)
    for start in range(0, n, chunk):
        u = (grid[None, :] - arr[start : start + chunk, None]) / h
        density += np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0).sum(axis=0)
    return float(grid[int(np.argmax(density))])


def one_sample_t_test(samples, mu0: float) -> tuple[float, float]:
    """Two sided one sample t test of mean equal to mu0.

    Returns (statistic, p value).  A zero variance sample gives p = 1
    when every value equals mu0 and p = 0 otherwise.
    """
    arr = _as_samples(samples, min_size=2)
    if arr.shape[1] != 1:
        raise ConfigError("t test expects a single component")
    x = arr[:, 0]
    n = x.size
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        if mean == mu0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean - mu0), 0.0
    stat = (mean - mu0) / (sd / math.sqrt(n))
    p_value = 2.0 * float(student_t.sf(abs(stat), df=n - 1))
    return stat, p_value


def batch_means_covariance(samples, batch_size: int | None = None) -> np.ndarray:
    """Batch means estimate of the long run covariance n Var(sample mean).

    Splits the chain into floor(n / b) consecutive batches of length
    b = floor(sqrt(n)) by default and scales the batch mean covariance
    by b.  Trailing samples beyond the last full batch are dropped.
    """
    arr = _as_samples(samples, min_size=4)
    n, k = arr.shape
    b = int(batch_size) if batch_size is not None else int(math.isqrt(n))
    if b < 1 or b > n // 2:
        raise ConfigError(f"batch size {b} must satisfy 1 <= b <= n / 2")
    nb = n // b
    means = arr[: nb * b].reshape(nb, b, k).mean(axis=1)
    centered = means - means.mean(axis=0)
    cov = centered.T @ centered / (nb - 1)
    return b * cov


def mcse(samples, batch_size: int | None = None) -> np.ndarray:
    """Monte Carlo standard error of the sample mean, per component."""
    arr = _as_samples(samples, min_size=4)
    sigma_b = batch_means_covariance(arr, batch_size)
    return np.sqrt(np.diag(sigma_b) / arr.shape[0])


def tv_distance(p, q, atol: float = 1e-8) -> float:
    """Total variation distance between two distributions on one support."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ContractViolation("distributions must share a support")
    if np.any(p < -atol) or np.any(q < -atol):
        raise ContractViolation("distributions must be nonnegative")
    if abs(p.sum() - 1.0) > atol or abs(q.sum() - 1.0) > atol:
        raise ContractViolation("distributions must sum to one")
    return 0.5 * float(np.abs(p - q).sum())


@dataclass(frozen=True)
class ErrorReport:
    """Asymptotic and Monte Carlo error bars for a parameter estimate."""

    theta_hat: np.ndarray
    sigma: np.ndarray
    sigma_mc: np.ndarray
    information: np.ndarray
    long_run_covariance: np.ndarray
    stat_mean: np.ndarray
    n_mc: int
    singular: bool


def error_propagation(information, long_run_cov, n_mc: int):
    """(sigma, sigma_mc, singular) from the information and noise matrices.

    sigma is sqrt(diag(I^-1)); sigma_mc propagates the Monte Carlo noise
    of the statistic mean through the same inverse,
    sqrt(diag(I^-1 Sigma_b I^-1) / n_mc).  A singular information matrix
    falls back to the pseudoinverse and raises the ``singular`` flag.
    """
    info = np.asarray(information, dtype=float)
    sigma_b = np.asarray(long_run_cov, dtype=float)
    k = info.shape[0]
    if info.shape != (k, k) or sigma_b.shape != (k, k):
        raise ContractViolation("information and covariance must be square and matched")
    singular = False
    try:
        inv = np.linalg.inv(info)
        if not np.all(np.isfinite(inv)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        inv = np.linalg.pinv(info)
        singular = True
    diag_inv = np.diag(inv).copy()
    if np.any(diag_inv < 0.0):
        singular = True
        diag_inv = np.abs(diag_inv)
    sigma = np.sqrt(diag_inv)
    mc_cov = inv @ sigma_b @ inv
    sigma_mc = np.sqrt(np.abs(np.diag(mc_cov)) / n_mc)
    return sigma, sigma_mc, singular


def asymptotic_errors(
    model,
    theta_hat,
    window,
    *,
    n_mc: int = 15_000,
    steps_between: int = 50,
    burn_in: int = 20_000,
    rng=None,
    mix: MoveMix = DEFAULT_MIX,
    init=None,
) -> ErrorReport:
    """Estimate parameter error bars by sampling the model at theta_hat.

    Runs a pattern chain at theta_hat, takes the thinned statistic
    covariance as the Fisher information estimate and the batch means
    covariance as the Monte Carlo noise, then propagates both through
    the inverse information.
    """
    if n_mc < 100:
        raise ConfigError("n_mc must be at least 100")
    theta_hat = np.asarray(theta_hat, dtype=float)
    chain = ChainState.from_model(model, window, rng=rng, init=init)
    chain.run(theta_hat, burn_in, mix)
    rows = np.empty((n_mc, chain.stat_dim))
    for i in range(n_mc):
        chain.run(theta_hat, steps_between, mix)
        rows[i] = chain.stats()
    info = np.cov(rows, rowvar=False, ddof=1)
    info = np.atleast_2d(info)
    sigma_b = batch_means_covariance(rows)
    sigma, sigma_mc, singular = error_propagation(info, sigma_b, n_mc)
    return ErrorReport(
        theta_hat=theta_hat,
        sigma=sigma,
        sigma_mc=sigma_mc,
        information=info,
        long_run_covariance=sigma_b,
        stat_mean=rows.mean(axis=0),
        n_mc=n_mc,
        singular=singular,
    )


@dataclass(frozen=True)
class SampleSummary:
    """Per component location and spread summary of a sample matrix."""

    mean: np.ndarray
    std: np.ndarray
    q25: np.ndarray
    median: np.ndarray
    q75: np.ndarray
    mode: np.ndarray
    mcse: np.ndarray
    n: int


def summarize_samples(samples) -> SampleSummary:
    arr = _as_samples(samples, min_size=4)
    qs = quantiles(arr, (0.25, 0.5, 0.75))
    modes = np.array([epanechnikov_map(arr[:, j]) for j in range(arr.shape[1])])
    return SampleSummary(
        mean=arr.mean(axis=0),
        std=arr.std(axis=0, ddof=1),
        q25=qs[0],
        median=qs[1],
        q75=qs[2],
        mode=modes,
        mcse=mcse(arr),
        n=arr.shape[0],
    )
