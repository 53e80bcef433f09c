"""Core types for exponential family Gibbs point process models.

A pattern is a finite configuration of points, or of fixed length line
segments, living in a rectangular window.  Model densities are taken with
respect to the unit rate Poisson process on the window and have the shape

    p(y | theta) = exp(theta . t(y)) / Z(theta)

where t(y) is the vector of sufficient statistics.  The normalizing
constant Z(theta) is intractable and is never evaluated by this package;
everything downstream works with the unnormalized log density theta . t(y).

Parameter vectors and statistic vectors are plain 1-D float arrays of equal
length.  Interaction parameters are handled on the log scale throughout
(log beta, log gamma), so the linear form above holds for every model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigError",
    "ContractViolation",
    "Window",
    "Pattern",
    "PriorBox",
    "Violation",
    "wrap_orientation",
    "log_unnorm_density",
    "prior_log_density",
    "pattern_validate",
]


class ConfigError(ValueError):
    """Invalid user-supplied configuration (bad field, bad file, bad shape)."""


class ContractViolation(RuntimeError):
    """An internal invariant was broken at runtime (library misuse or bug)."""


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigError(f"{name} must be a non-empty 1-D float vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class Window:
    """Axis aligned rectangular observation window in 2 or 3 dimensions."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lo = _as_vector(self.lower, "window lower bound")
        hi = _as_vector(self.upper, "window upper bound")
        if lo.shape != hi.shape:
            raise ConfigError("window bounds must have equal length")
        if lo.size not in (2, 3):
            raise ConfigError(f"window must be 2-D or 3-D, got dimension {lo.size}")
        if not np.all(hi > lo):
            raise ConfigError("window upper bound must exceed lower bound in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def contains(self, coords) -> np.ndarray:
        """Boolean mask of rows of ``coords`` lying in the closed window."""
        pts = np.atleast_2d(np.asarray(coords, dtype=float))
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


def wrap_orientation(phi):
    """Normalize undirected segment orientations into [0, pi)."""
    wrapped = np.asarray(phi, dtype=float) % math.pi
    # x % pi can round up to pi itself for tiny negative x.
    return np.where(wrapped >= math.pi, 0.0, wrapped)


class Pattern:
    """A point or segment configuration inside a window.

    Points are stored as an (n, dim) coordinate array.  Segment patterns
    additionally carry an orientation per item (normalized into [0, pi) at
    construction, orientations are undirected) and one shared segment
    length.  Item order carries no meaning; statistics are invariant under
    relabeling.
    """

    __slots__ = ("window", "points", "orientation", "seg_length")

    def __init__(self, window: Window, points, orientation=None, seg_length: float | None = None):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            pts = np.empty((0, window.dim))
        if pts.ndim != 2 or pts.shape[1] != window.dim:
            raise ConfigError(
                f"points must have shape (n, {window.dim}) for this window, got {pts.shape}"
            )
        if (orientation is None) != (seg_length is None):
            raise ConfigError("segment patterns need both an orientation array and a length")
        if orientation is not None:
            if window.dim != 2:
                raise ConfigError("segment patterns are only supported in 2-D windows")
            orientation = wrap_orientation(np.asarray(orientation, dtype=float).reshape(-1))
            if orientation.shape[0] != pts.shape[0]:
                raise ConfigError(
                    f"orientation length {orientation.shape[0]} does not match {pts.shape[0]} items"
                )
            seg_length = float(seg_length)
            if not (math.isfinite(seg_length) and seg_length > 0.0):
                raise ConfigError("segment length must be a positive finite number")
        self.window = window
        self.points = pts
        self.orientation = orientation
        self.seg_length = seg_length

    @property
    def kind(self) -> str:
        return "points" if self.orientation is None else "segments"

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def endpoints(self) -> np.ndarray:
        """Segment endpoints as an (n, 2, 2) array (pairs of xy points)."""
        if self.orientation is None:
            raise ContractViolation("endpoints are only defined for segment patterns")
        half = 0.5 * self.seg_length
        direction = np.stack(
            [np.cos(self.orientation), np.sin(self.orientation)], axis=1
        )
        offset = half * direction
        return np.stack([self.points - offset, self.points + offset], axis=1)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Pattern(kind={self.kind!r}, n={self.n}, dim={self.window.dim})"


@dataclass(frozen=True)
class Violation:
    """First offending item found by :func:`pattern_validate`."""

    index: int
    reason: str


def pattern_validate(pattern: Pattern) -> Violation | None:
    """Check pattern invariants item by item.

    Returns ``None`` for a clean pattern, otherwise a :class:`Violation`
    naming the first offending item.  Checked per item: finite coordinates,
    containment of the item center in the closed window, and for segments an
    orientation inside [0, pi).
    """
    pts = pattern.points
    finite = np.all(np.isfinite(pts), axis=1)
    inside = pattern.window.contains(pts) if pattern.n else np.empty(0, dtype=bool)
    for i in range(pattern.n):
        if not finite[i]:
            return Violation(i, "non-finite coordinate")
        if not inside[i]:
            return Violation(i, "center outside window")
        if pattern.orientation is not None:
            phi = pattern.orientation[i]
            if not (0.0 <= phi < math.pi):
                return Violation(i, "orientation outside [0, pi)")
    return None


@dataclass(frozen=True, eq=False)
class PriorBox:
    """Uniform prior over a closed axis aligned box in parameter space."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lo = _as_vector(self.lower, "prior lower bound")
        hi = _as_vector(self.upper, "prior upper bound")
        if lo.shape != hi.shape:
            raise ConfigError("prior bounds must have equal length")
        if not np.all(hi > lo):
            raise ConfigError("prior upper bound must exceed lower bound in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, theta) -> bool:
        t = np.asarray(theta, dtype=float)
        if t.shape != self.lower.shape:
            raise ContractViolation(
                f"parameter has dimension {t.size}, prior box has dimension {self.dim}"
            )
        return bool(np.all(t >= self.lower) and np.all(t <= self.upper))

    def log_density(self, theta) -> float:
        if self.contains(theta):
            return -float(np.sum(np.log(self.widths)))
        return -math.inf

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.lower + self.widths * rng.random(self.dim)


def log_unnorm_density(theta, stats) -> float:
    """Unnormalized log density theta . t(y) of an exponential family model."""
    th = np.asarray(theta, dtype=float)
    t = np.asarray(stats, dtype=float)
    if th.shape != t.shape or th.ndim != 1:
        raise ContractViolation(
            f"parameter shape {th.shape} does not match statistic shape {t.shape}"
        )
    return float(np.dot(th, t))


def prior_log_density(theta, box: PriorBox) -> float:
    """Log density of the uniform box prior (-inf outside the closed box)."""
    return box.log_density(theta)
