"""The four Gibbs model families and their incremental statistic engines.

Each model pairs a full recompute of its sufficient statistic vector with a
mutable chain state that applies births, deaths and moves incrementally.
Both paths share the same float expressions for every geometric predicate,
so the incremental counters agree exactly with a recompute from scratch:
integer statistics match bit for bit, accumulated float sums drift only at
rounding level.

States follow a prepare/commit protocol.  ``birth_delta``/``death_delta``
compute the statistic change of a hypothetical update and cache the work
needed to apply it; ``commit_birth``/``commit_death`` then apply the cached
plan.  ``commit_death`` returns an undo token so a tentatively removed item
can be restored exactly (used by move proposals).  Deltas are returned as
plain float tuples to keep the samplers' inner loops cheap; the module
level helpers wrap them in arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .core import ConfigError, ContractViolation, Pattern, Window
from .geometry import (
    CandyParams,
    SpatialGrid,
    SpineSet,
    _close_pair_is_rejected,
    ball_cell_lattice,
    pair_count,
    segment_connection,
)

__all__ = [
    "StraussModel",
    "AreaInteractionModel",
    "CandyModel",
    "GalaxyModel",
    "sufficient_statistics",
    "statistic_delta_birth",
    "statistic_delta_death",
    "model_from_name",
]


def _check_kind(model, pattern: Pattern) -> None:
    if pattern.kind != model.kind:
        raise ContractViolation(
            f"{type(model).__name__} needs a {model.kind} pattern, got {pattern.kind}"
        )
    if model.space_dim is not None and pattern.window.dim != model.space_dim:
        raise ContractViolation(
            f"{type(model).__name__} lives in {model.space_dim}-D, window is {pattern.window.dim}-D"
        )


def _covered_cell_count(points, r: float, window: Window, rho: float, clip: bool) -> int:
    """Cells of the window anchored lattice covered by a union of balls.

    The lattice is anchored at the window's lower corner and extends past
    the window far enough to hold every ball around an inside point.  A
    cell counts as covered when its center is within ``r`` of at least one
    point; with ``clip`` set the center must also lie inside the window.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0
    dim = window.dim
    anchor = window.lower
    margin = math.ceil(r / rho) + 2
    side = np.ceil((window.upper - window.lower) / rho).astype(np.int64) + 1
    shape = side + 2 * margin
    strides = np.ones(dim, dtype=np.int64)
    for a in range(dim - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]
    chunks = []
    for p in pts:
        lattice = ball_cell_lattice(p, r, anchor, rho)
        if lattice[0].size == 0:
            continue
        if clip:
            inside = np.ones(lattice[0].shape, dtype=bool)
            for a in range(dim):
                centers = anchor[a] + (lattice[a] + 0.5) * rho
                inside &= (centers >= window.lower[a]) & (centers <= window.upper[a])
            lattice = tuple(l[inside] for l in lattice)
            if lattice[0].size == 0:
                continue
        flat = (lattice[0] + margin) * strides[0]
        for a in range(1, dim):
            flat = flat + (lattice[a] + margin) * strides[a]
        chunks.append(flat)
    if not chunks:
        return 0
    return int(np.unique(np.concatenate(chunks)).size)


class _CoverageLattice:
    """Local midpoint lattice queries for the coverage based statistics.

    Precomputes the integer cell offsets that can fall inside a ball of
    radius ``r`` around an arbitrary location, so a single query only
    touches the cells near one point.  Center coordinates are evaluated
    with the exact same expression as :func:`ball_cell_lattice`, keeping
    incremental and full recomputes consistent.
    """

    __slots__ = ("r", "r2", "rho", "dim", "anchor", "offs", "clip", "wlo", "whi")

    def __init__(self, window: Window, r: float, rho: float, clip: bool):
        self.r = r
        self.r2 = r * r
        self.rho = rho
        self.dim = window.dim
        self.anchor = tuple(float(a) for a in window.lower)
        self.clip = clip
        self.wlo = tuple(float(a) for a in window.lower)
        self.whi = tuple(float(a) for a in window.upper)
        k = math.ceil(r / rho) + 1
        span = np.arange(-k, k + 1, dtype=np.int64)
        gap = np.maximum(np.abs(span) - 0.5, 0.0) * rho
        mesh = np.meshgrid(*([span] * self.dim), indexing="ij")
        gaps = np.meshgrid(*([gap] * self.dim), indexing="ij")
        reach2 = sum(g * g for g in gaps)
        keep = reach2 <= self.r2
        self.offs = tuple(m[keep] for m in mesh)

    def solo_covered(self, u, neighbors) -> int:
        """Number of cell centers within r of ``u`` but of no neighbor point."""
        rho = self.rho
        r2 = self.r2
        centers = []
        d2 = None
        for a in range(self.dim):
            base = math.floor((u[a] - self.anchor[a]) / rho)
            c = self.anchor[a] + (base + self.offs[a] + 0.5) * rho
            centers.append(c)
            diff = c - u[a]
            d2 = diff * diff if d2 is None else d2 + diff * diff
        mask = d2 <= r2
        if self.clip:
            for a in range(self.dim):
                mask &= (centers[a] >= self.wlo[a]) & (centers[a] <= self.whi[a])
        centers = [c[mask] for c in centers]
        if not neighbors:
            return int(centers[0].size)
        # Nearest neighbors cover the most cells, so process them first and
        # shrink the surviving cell set as we go.
        order = sorted(
            neighbors, key=lambda p: sum((p[a] - u[a]) ** 2 for a in range(self.dim))
        )
        for p in order:
            if centers[0].size == 0:
                return 0
            d2n = None
            for a in range(self.dim):
                diff = centers[a] - p[a]
                d2n = diff * diff if d2n is None else d2n + diff * diff
            alive = d2n > r2
            centers = [c[alive] for c in centers]
        return int(centers[0].size)


# ---------------------------------------------------------------------------
# Strauss model: pairwise interaction through a close pair count.


@dataclass(frozen=True)
class StraussModel:
    """Pairwise interaction point model with statistics (n, s_r).

    ``s_r`` counts unordered point pairs strictly closer than ``r``.  The
    parameter vector is (log beta, log gamma); negative log gamma penalizes
    close pairs (repulsion), zero is Poisson.
    """

    r: float

    kind: ClassVar[str] = "points"
    space_dim: ClassVar[None] = None
    stat_names: ClassVar[tuple[str, ...]] = ("n", "s_r")
    param_names: ClassVar[tuple[str, ...]] = ("log_beta", "log_gamma")
    report_names: ClassVar[tuple[str, ...]] = ("n", "s_r")

    def __post_init__(self) -> None:
        if not (self.r > 0.0 and math.isfinite(self.r)):
            raise ConfigError("interaction radius r must be positive and finite")

    def statistics(self, pattern: Pattern) -> np.ndarray:
        _check_kind(self, pattern)
        return np.array([float(pattern.n), float(pair_count(pattern.points, self.r))])

    def report_statistics(self, stats) -> np.ndarray:
        return np.asarray(stats, dtype=float)

    def new_state(self, pattern: Pattern) -> "_StraussState":
        _check_kind(self, pattern)
        return _StraussState(self, pattern)


class _StraussState:
    kind = "points"

    __slots__ = ("model", "window", "dim", "r2", "xs", "ys", "zs", "grid", "n", "sr", "_plan")

    def __init__(self, model: StraussModel, pattern: Pattern):
        self.model = model
        self.window = pattern.window
        self.dim = pattern.window.dim
        self.r2 = model.r * model.r
        pts = pattern.points
        self.xs = pts[:, 0].tolist()
        self.ys = pts[:, 1].tolist()
        self.zs = pts[:, 2].tolist() if self.dim == 3 else None
        self.grid = SpatialGrid(model.r, self.dim)
        for i in range(pts.shape[0]):
            self.grid.insert(i, self.item(i))
        self.n = pts.shape[0]
        self.sr = pair_count(pts, model.r)
        self._plan = None

    def item(self, i: int):
        if self.zs is None:
            return (self.xs[i], self.ys[i])
        return (self.xs[i], self.ys[i], self.zs[i])

    def stats(self) -> np.ndarray:
        return np.array([float(self.n), float(self.sr)])

    def _neighbor_count(self, u, skip: int = -1) -> int:
        r2 = self.r2
        xs, ys = self.xs, self.ys
        count = 0
        if self.zs is None:
            ux, uy = u
            for bucket in self.grid.iter_buckets(u):
                for j in bucket:
                    if j == skip:
                        continue
                    dx = xs[j] - ux
                    dy = ys[j] - uy
                    if dx * dx + dy * dy < r2:
                        count += 1
        else:
            ux, uy, uz = u
            zs = self.zs
            for bucket in self.grid.iter_buckets(u):
                for j in bucket:
                    if j == skip:
                        continue
                    dx = xs[j] - ux
                    dy = ys[j] - uy
                    dz = zs[j] - uz
                    if dx * dx + dy * dy + dz * dz < r2:
                        count += 1
        return count

    def birth_delta(self, item) -> tuple:
        close = self._neighbor_count(item)
        self._plan = ("birth", item, close)
        return (1.0, float(close))

    def commit_birth(self) -> None:
        if self._plan is None or self._plan[0] != "birth":
            raise ContractViolation("commit_birth without a prepared birth")
        _, item, close = self._plan
        self._plan = None
        self.xs.append(item[0])
        self.ys.append(item[1])
        if self.zs is not None:
            self.zs.append(item[2])
        self.grid.insert(self.n, item)
        self.n += 1
        self.sr += close

    def death_delta(self, index: int) -> tuple:
        close = self._neighbor_count(self.item(index), skip=index)
        self._plan = ("death", index, close)
        return (-1.0, -float(close))

    def commit_death(self):
        if self._plan is None or self._plan[0] != "death":
            raise ContractViolation("commit_death without a prepared death")
        _, i, close = self._plan
        self._plan = None
        item = self.item(i)
        self.grid.remove(i, item)
        last = self.n - 1
        if i != last:
            moved = self.item(last)
            self.xs[i] = moved[0]
            self.ys[i] = moved[1]
            if self.zs is not None:
                self.zs[i] = moved[2]
            self.grid.relabel(last, i, moved)
        self.xs.pop()
        self.ys.pop()
        if self.zs is not None:
            self.zs.pop()
        self.n = last
        self.sr -= close
        return (i, item, close)

    def undo_death(self, token) -> None:
        i, item, close = token
        last = self.n
        self.xs.append(item[0])
        self.ys.append(item[1])
        if self.zs is not None:
            self.zs.append(item[2])
        self.grid.insert(last, item)
        self.n += 1
        self.sr += close
        if i != last:
            moved = self.item(i)
            self.grid.remove(i, moved)
            self.grid.remove(last, item)
            self.xs[i], self.xs[last] = self.xs[last], self.xs[i]
            self.ys[i], self.ys[last] = self.ys[last], self.ys[i]
            if self.zs is not None:
                self.zs[i], self.zs[last] = self.zs[last], self.zs[i]
            self.grid.insert(i, item)
            self.grid.insert(last, moved)

    def pattern(self) -> Pattern:
        cols = [self.xs, self.ys] + ([self.zs] if self.zs is not None else [])
        pts = np.array(cols, dtype=float).T if self.n else np.empty((0, self.dim))
        return Pattern(self.window, pts)

    def recompute(self) -> np.ndarray:
        return self.model.statistics(self.pattern())


# ---------------------------------------------------------------------------
# Area interaction model: coverage of the union of disks.


@dataclass(frozen=True)
class AreaInteractionModel:
    """Area interaction point model with statistics (n, a_r).

    ``a_r`` is minus the area of the union of disks of radius ``r`` around
    the points, divided by pi r^2, so it is nonpositive and the density is
    exp(theta . t).  Positive log gamma rewards overlapping disks
    (clustering), negative log gamma penalizes them.  The union area is
    evaluated by midpoint counting on a lattice anchored at the window's
    lower corner; disks reaching outside the window are kept whole unless
    ``clip_to_window`` is set.
    """

    r: float
    resolution: float | None = None
    clip_to_window: bool = False

    kind: ClassVar[str] = "points"
    space_dim: ClassVar[int] = 2
    stat_names: ClassVar[tuple[str, ...]] = ("n", "a_r")
    param_names: ClassVar[tuple[str, ...]] = ("log_beta", "log_gamma")
    report_names: ClassVar[tuple[str, ...]] = ("n", "a_r")

    def __post_init__(self) -> None:
        if not (self.r > 0.0 and math.isfinite(self.r)):
            raise ConfigError("interaction radius r must be positive and finite")
        if self.resolution is None:
            object.__setattr__(self, "resolution", self.r / 20.0)
        if not (0.0 < self.resolution <= self.r):
            raise ConfigError("quadrature resolution must be in (0, r]")

    def _stat_scale(self) -> float:
        return self.resolution**2 / (math.pi * self.r * self.r)

    def statistics(self, pattern: Pattern) -> np.ndarray:
        _check_kind(self, pattern)
        covered = _covered_cell_count(
            pattern.points, self.r, pattern.window, self.resolution, self.clip_to_window
        )
        return np.array([float(pattern.n), -covered * self._stat_scale()])

    def report_statistics(self, stats) -> np.ndarray:
        return np.asarray(stats, dtype=float)

    def new_state(self, pattern: Pattern) -> "_AreaState":
        _check_kind(self, pattern)
        return _AreaState(self, pattern)


class _AreaState:
    kind = "points"

    __slots__ = (
        "model", "window", "dim", "r2", "scale", "xs", "ys",
        "grid", "lattice", "n", "covered", "_plan",
    )

    def __init__(self, model: AreaInteractionModel, pattern: Pattern):
        self.model = model
        self.window = pattern.window
        self.dim = 2
        self.r2 = model.r * model.r
        self.scale = model._stat_scale()
        pts = pattern.points
        self.xs = pts[:, 0].tolist()
        self.ys = pts[:, 1].tolist()
        self.grid = SpatialGrid(model.r, 2)
        for i in range(pts.shape[0]):
            self.grid.insert(i, (self.xs[i], self.ys[i]))
        self.lattice = _CoverageLattice(
            pattern.window, model.r, model.resolution, model.clip_to_window
        )
        self.n = pts.shape[0]
        self.covered = _covered_cell_count(
            pts, model.r, pattern.window, model.resolution, model.clip_to_window
        )
        self._plan = None

    def item(self, i: int):
        return (self.xs[i], self.ys[i])

    def stats(self) -> np.ndarray:
        return np.array([float(self.n), -self.covered * self.scale])

    def _cover_neighbors(self, u, skip: int = -1) -> list:
        """Points within 2r of ``u``: the only ones sharing coverage cells."""
        limit = 4.0 * self.r2
        out = []
        xs, ys = self.xs, self.ys
        ux, uy = u
        for bucket in self.grid.iter_buckets(u, rings=2):
            for j in bucket:
                if j == skip:
                    continue
                dx = xs[j] - ux
                dy = ys[j] - uy
                if dx * dx + dy * dy <= limit:
                    out.append((xs[j], ys[j]))
        return out

    def birth_delta(self, item) -> tuple:
        fresh = self.lattice.solo_covered(item, self._cover_neighbors(item))
        self._plan = ("birth", item, fresh)
        return (1.0, -fresh * self.scale)

    def commit_birth(self) -> None:
        if self._plan is None or self._plan[0] != "birth":
            raise ContractViolation("commit_birth without a prepared birth")
        _, item, fresh = self._plan
        self._plan = None
        self.xs.append(item[0])
        self.ys.append(item[1])
        self.grid.insert(self.n, item)
        self.n += 1
        self.covered += fresh

    def death_delta(self, index: int) -> tuple:
        u = self.item(index)
        lost = self.lattice.solo_covered(u, self._cover_neighbors(u, skip=index))
        self._plan = ("death", index, lost)
        return (-1.0, lost * self.scale)

    def commit_death(self):
        if self._plan is None or self._plan[0] != "death":
            raise ContractViolation("commit_death without a prepared death")
        _, i, lost = self._plan
        self._plan = None
        item = self.item(i)
        self.grid.remove(i, item)
        last = self.n - 1
        if i != last:
            moved = self.item(last)
            self.xs[i] = moved[0]
            self.ys[i] = moved[1]
            self.grid.relabel(last, i, moved)
        self.xs.pop()
        self.ys.pop()
        self.n = last
        self.covered -= lost
        return (i, item, lost)

    def undo_death(self, token) -> None:
        i, item, lost = token
        last = self.n
        self.xs.append(item[0])
        self.ys.append(item[1])
        self.grid.insert(last, item)
        self.n += 1
        self.covered += lost
        if i != last:
            moved = self.item(i)
            self.grid.remove(i, moved)
            self.grid.remove(last, item)
            self.xs[i], self.xs[last] = self.xs[last], self.xs[i]
            self.ys[i], self.ys[last] = self.ys[last], self.ys[i]
            self.grid.insert(i, item)
            self.grid.insert(last, moved)

    def pattern(self) -> Pattern:
        pts = np.array([self.xs, self.ys], dtype=float).T if self.n else np.empty((0, 2))
        return Pattern(self.window, pts)

    def recompute(self) -> np.ndarray:
        return self.model.statistics(self.pattern())


# ---------------------------------------------------------------------------
# Candy model: connectivity classes of fixed length segments.


@dataclass(frozen=True)
class CandyModel:
    """Interacting segment model with statistics (n_d, n_s, n_f, n_r).

    Segments of one fixed ``length`` are classified by their endpoint
    connections: doubly connected (both endpoints linked), singly connected
    (one endpoint linked) and free.  ``n_r`` counts close center pairs at a
    non orthogonal angle.  The rejection radius ``r_r`` defaults to half
    the segment length; it is a modeling choice, so runs record it in their
    metadata.
    """

    length: float
    r_c: float
    tau_c: float
    tau_r: float
    r_r: float | None = None

    kind: ClassVar[str] = "segments"
    space_dim: ClassVar[int] = 2
    stat_names: ClassVar[tuple[str, ...]] = ("n_d", "n_s", "n_f", "n_r")
    param_names: ClassVar[tuple[str, ...]] = ("theta_d", "theta_s", "theta_f", "theta_r")
    report_names: ClassVar[tuple[str, ...]] = ("n_d", "n_s", "n_f", "n_r")

    def __post_init__(self) -> None:
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise ConfigError("segment length must be positive and finite")
        if self.r_r is None:
            object.__setattr__(self, "r_r", self.length / 2.0)
        # Delegate range checks to CandyParams.
        self.params

    @property
    def params(self) -> CandyParams:
        return CandyParams(r_c=self.r_c, tau_c=self.tau_c, r_r=self.r_r, tau_r=self.tau_r)

    def statistics(self, pattern: Pattern) -> np.ndarray:
        _check_kind(self, pattern)
        if pattern.n and abs(pattern.seg_length - self.length) > 1e-12:
            raise ContractViolation(
                f"pattern segment length {pattern.seg_length} does not match model {self.length}"
            )
        state = _CandyState(self, pattern)
        return state.stats()

    def report_statistics(self, stats) -> np.ndarray:
        return np.asarray(stats, dtype=float)

    def new_state(self, pattern: Pattern) -> "_CandyState":
        _check_kind(self, pattern)
        return _CandyState(self, pattern)


def _endpoint_coords(x: float, y: float, phi: float, length: float):
    dx = 0.5 * length * math.cos(phi)
    dy = 0.5 * length * math.sin(phi)
    return (x - dx, y - dy, x + dx, y + dy)


def _class_index(l0: int, l1: int) -> int:
    """0 doubly, 1 singly, 2 free."""
    return 2 - ((l0 > 0) + (l1 > 0))


class _CandyState:
    kind = "segments"

    __slots__ = (
        "model", "window", "dim", "params", "length", "rc2", "rr2",
        "xs", "ys", "phis", "e0x", "e0y", "e1x", "e1y", "l0", "l1",
        "grid", "n", "class_counts", "nr", "_plan",
    )

    def __init__(self, model: CandyModel, pattern: Pattern):
        self.model = model
        self.window = pattern.window
        self.dim = 2
        self.params = model.params
        self.length = model.length
        self.rc2 = self.params.r_c**2
        self.rr2 = self.params.r_r**2
        pts = pattern.points
        self.xs = pts[:, 0].tolist()
        self.ys = pts[:, 1].tolist()
        self.phis = pattern.orientation.tolist() if pattern.n else []
        self.e0x, self.e0y, self.e1x, self.e1y = [], [], [], []
        for i in range(pattern.n):
            a0, b0, a1, b1 = _endpoint_coords(self.xs[i], self.ys[i], self.phis[i], self.length)
            self.e0x.append(a0)
            self.e0y.append(b0)
            self.e1x.append(a1)
            self.e1y.append(b1)
        cell = max(self.length + self.params.r_c, self.params.r_r)
        self.grid = SpatialGrid(cell, 2)
        for i in range(pattern.n):
            self.grid.insert(i, (self.xs[i], self.ys[i]))
        self.n = pattern.n
        self.l0 = [0] * self.n
        self.l1 = [0] * self.n
        self.nr = 0
        for i in range(self.n):
            for j in range(i + 1, self.n):
                self._accumulate_pair(i, j)
        self.class_counts = [0, 0, 0]
        for i in range(self.n):
            self.class_counts[_class_index(self.l0[i], self.l1[i])] += 1
        self._plan = None

    def _accumulate_pair(self, i: int, j: int) -> None:
        dx = self.xs[i] - self.xs[j]
        dy = self.ys[i] - self.ys[j]
        if dx * dx + dy * dy < self.rr2 and _close_pair_is_rejected(
            self.phis[i], self.phis[j], self.params
        ):
            self.nr += 1
        conn = self._connection(
            self.phis[i],
            (self.e0x[i], self.e0y[i], self.e1x[i], self.e1y[i]),
            self.phis[j],
            (self.e0x[j], self.e0y[j], self.e1x[j], self.e1y[j]),
        )
        if conn is not None:
            if conn[0] == 0:
                self.l0[i] += 1
            else:
                self.l1[i] += 1
            if conn[1] == 0:
                self.l0[j] += 1
            else:
                self.l1[j] += 1

    def _connection(self, phi_i, ends_i, phi_j, ends_j):
        ei = ((ends_i[0], ends_i[1]), (ends_i[2], ends_i[3]))
        ej = ((ends_j[0], ends_j[1]), (ends_j[2], ends_j[3]))
        return segment_connection(phi_i, ei, phi_j, ej, self.params)

    def item(self, i: int):
        return (self.xs[i], self.ys[i], self.phis[i])

    def stats(self) -> np.ndarray:
        return np.array(
            [
                float(self.class_counts[0]),
                float(self.class_counts[1]),
                float(self.class_counts[2]),
                float(self.nr),
            ]
        )

    def _scan_partners(self, x, y, phi, ends, skip: int = -1):
        """Connections and rejected pairs between a candidate segment and the rest."""
        records = []
        d_nr = 0
        for bucket in self.grid.iter_buckets((x, y)):
            for j in bucket:
                if j == skip:
                    continue
                dx = x - self.xs[j]
                dy = y - self.ys[j]
                if dx * dx + dy * dy < self.rr2 and _close_pair_is_rejected(
                    phi, self.phis[j], self.params
                ):
                    d_nr += 1
                conn = self._connection(
                    phi,
                    ends,
                    self.phis[j],
                    (self.e0x[j], self.e0y[j], self.e1x[j], self.e1y[j]),
                )
                if conn is not None:
                    records.append((j, conn[1], conn[0]))
        return records, d_nr

    def birth_delta(self, item) -> tuple:
        x, y, phi = item
        phi = phi % math.pi
        if phi >= math.pi:
            phi = 0.0
        item = (x, y, phi)
        ends = _endpoint_coords(x, y, phi, self.length)
        records, d_nr = self._scan_partners(x, y, phi, ends)
        dclass = [0, 0, 0]
        my0 = my1 = 0
        for j, ej, mine in records:
            before = _class_index(self.l0[j], self.l1[j])
            after = _class_index(self.l0[j] + (ej == 0), self.l1[j] + (ej == 1))
            dclass[before] -= 1
            dclass[after] += 1
            if mine == 0:
                my0 += 1
            else:
                my1 += 1
        dclass[_class_index(my0, my1)] += 1
        self._plan = ("birth", item, ends, records, my0, my1, d_nr, tuple(dclass))
        return (float(dclass[0]), float(dclass[1]), float(dclass[2]), float(d_nr))

    def commit_birth(self) -> None:
        if self._plan is None or self._plan[0] != "birth":
            raise ContractViolation("commit_birth without a prepared birth")
        _, item, ends, records, my0, my1, d_nr, dclass = self._plan
        self._plan = None
        x, y, phi = item
        self.xs.append(x)
        self.ys.append(y)
        self.phis.append(phi)
        self.e0x.append(ends[0])
        self.e0y.append(ends[1])
        self.e1x.append(ends[2])
        self.e1y.append(ends[3])
        self.l0.append(my0)
        self.l1.append(my1)
        self.grid.insert(self.n, (x, y))
        self.n += 1
        for j, ej, _ in records:
            if ej == 0:
                self.l0[j] += 1
            else:
                self.l1[j] += 1
        self.nr += d_nr
        for c in range(3):
            self.class_counts[c] += dclass[c]

    def death_delta(self, index: int) -> tuple:
        x, y, phi = self.item(index)
        ends = (self.e0x[index], self.e0y[index], self.e1x[index], self.e1y[index])
        records, d_nr = self._scan_partners(x, y, phi, ends, skip=index)
        dclass = [0, 0, 0]
        for j, ej, _ in records:
            before = _class_index(self.l0[j], self.l1[j])
            after = _class_index(self.l0[j] - (ej == 0), self.l1[j] - (ej == 1))
            dclass[before] -= 1
            dclass[after] += 1
        dclass[_class_index(self.l0[index], self.l1[index])] -= 1
        self._plan = ("death", index, records, -d_nr, tuple(dclass))
        return (float(dclass[0]), float(dclass[1]), float(dclass[2]), float(-d_nr))

    def _column_values(self, i: int):
        return (
            self.xs[i], self.ys[i], self.phis[i],
            self.e0x[i], self.e0y[i], self.e1x[i], self.e1y[i],
            self.l0[i], self.l1[i],
        )

    def _columns(self):
        return (
            self.xs, self.ys, self.phis,
            self.e0x, self.e0y, self.e1x, self.e1y,
            self.l0, self.l1,
        )

    def commit_death(self):
        if self._plan is None or self._plan[0] != "death":
            raise ContractViolation("commit_death without a prepared death")
        _, i, records, d_nr, dclass = self._plan
        self._plan = None
        for j, ej, _ in records:
            if ej == 0:
                self.l0[j] -= 1
            else:
                self.l1[j] -= 1
        saved = self._column_values(i)
        pos = (self.xs[i], self.ys[i])
        self.grid.remove(i, pos)
        last = self.n - 1
        cols = self._columns()
        if i != last:
            moved_pos = (self.xs[last], self.ys[last])
            for col in cols:
                col[i] = col[last]
            self.grid.relabel(last, i, moved_pos)
        for col in cols:
            col.pop()
        self.n = last
        self.nr += d_nr
        for c in range(3):
            self.class_counts[c] += dclass[c]
        return (i, saved, records, d_nr, dclass)

    def undo_death(self, token) -> None:
        i, saved, records, d_nr, dclass = token
        last = self.n
        cols = self._columns()
        for col, value in zip(cols, saved):
            col.append(value)
        pos = (saved[0], saved[1])
        self.grid.insert(last, pos)
        self.n += 1
        if i != last:
            moved_pos = (self.xs[i], self.ys[i])
            self.grid.remove(i, moved_pos)
            self.grid.remove(last, pos)
            for col in cols:
                col[i], col[last] = col[last], col[i]
            self.grid.insert(i, pos)
            self.grid.insert(last, moved_pos)
        for j, ej, _ in records:
            if ej == 0:
                self.l0[j] += 1
            else:
                self.l1[j] += 1
        self.nr -= d_nr
        for c in range(3):
            self.class_counts[c] -= dclass[c]

    def pattern(self) -> Pattern:
        if self.n == 0:
            return Pattern(
                self.window, np.empty((0, 2)), orientation=[], seg_length=self.length
            )
        pts = np.array([self.xs, self.ys], dtype=float).T
        return Pattern(self.window, pts, orientation=self.phis, seg_length=self.length)

    def recompute(self) -> np.ndarray:
        return self.model.statistics(self.pattern())


# ---------------------------------------------------------------------------
# Galaxy model: spine attraction plus sphere coverage in 3-D.


@dataclass(frozen=True)
class GalaxyModel:
    """Spine attracted 3-D point model with statistics (n, d_F, -a_r).

    ``d_F`` is minus the summed distance of points to the filament spine
    set F.  ``a_r`` is the volume of the union of balls of radius ``r``
    around the points divided by the single ball volume 4 pi r^3 / 3; it is
    stored negated so that the density keeps the form exp(theta . t) with
    theta = (log beta1, log beta2, log gamma).  Reports flip the sign back
    to the conventional positive a_r.
    """

    r: float
    spines: SpineSet
    resolution: float | None = None
    clip_to_window: bool = False

    kind: ClassVar[str] = "points"
    space_dim: ClassVar[int] = 3
    stat_names: ClassVar[tuple[str, ...]] = ("n", "d_F", "neg_a_r")
    param_names: ClassVar[tuple[str, ...]] = ("log_beta1", "log_beta2", "log_gamma")
    report_names: ClassVar[tuple[str, ...]] = ("n", "d_F", "a_r")

    def __post_init__(self) -> None:
        if not (self.r > 0.0 and math.isfinite(self.r)):
            raise ConfigError("interaction radius r must be positive and finite")
        if not isinstance(self.spines, SpineSet):
            object.__setattr__(self, "spines", SpineSet(self.spines))
        if self.spines.dim != 3:
            raise ConfigError("galaxy spines must be 3-D polylines")
        if self.resolution is None:
            object.__setattr__(self, "resolution", self.r / 8.0)
        if not (0.0 < self.resolution <= self.r):
            raise ConfigError("quadrature resolution must be in (0, r]")

    def _stat_scale(self) -> float:
        return self.resolution**3 * 3.0 / (4.0 * math.pi * self.r**3)

    def statistics(self, pattern: Pattern) -> np.ndarray:
        _check_kind(self, pattern)
        covered = _covered_cell_count(
            pattern.points, self.r, pattern.window, self.resolution, self.clip_to_window
        )
        if pattern.n:
            d_f = -float(np.sum(self.spines.distance(pattern.points)))
        else:
            d_f = 0.0
        return np.array([float(pattern.n), d_f, -covered * self._stat_scale()])

    def report_statistics(self, stats) -> np.ndarray:
        out = np.asarray(stats, dtype=float).copy()
        out[2] = -out[2]
        return out

    def new_state(self, pattern: Pattern) -> "_GalaxyState":
        _check_kind(self, pattern)
        return _GalaxyState(self, pattern)


class _GalaxyState:
    kind = "points"

    __slots__ = (
        "model", "window", "dim", "r2", "scale", "xs", "ys", "zs", "ds",
        "grid", "lattice", "n", "covered", "dsum", "_plan",
    )

    def __init__(self, model: GalaxyModel, pattern: Pattern):
        self.model = model
        self.window = pattern.window
        self.dim = 3
        self.r2 = model.r * model.r
        self.scale = model._stat_scale()
        pts = pattern.points
        self.xs = pts[:, 0].tolist()
        self.ys = pts[:, 1].tolist()
        self.zs = pts[:, 2].tolist()
        if pts.shape[0]:
            self.ds = [float(d) for d in np.atleast_1d(model.spines.distance(pts))]
        else:
            self.ds = []
        self.grid = SpatialGrid(model.r, 3)
        for i in range(pts.shape[0]):
            self.grid.insert(i, (self.xs[i], self.ys[i], self.zs[i]))
        self.lattice = _CoverageLattice(
            pattern.window, model.r, model.resolution, model.clip_to_window
        )
        self.n = pts.shape[0]
        self.covered = _covered_cell_count(
            pts, model.r, pattern.window, model.resolution, model.clip_to_window
        )
        self.dsum = math.fsum(self.ds)
        self._plan = None

    def item(self, i: int):
        return (self.xs[i], self.ys[i], self.zs[i])

    def stats(self) -> np.ndarray:
        return np.array([float(self.n), -self.dsum, -self.covered * self.scale])

    def _cover_neighbors(self, u, skip: int = -1) -> list:
        limit = 4.0 * self.r2
        out = []
        xs, ys, zs = self.xs, self.ys, self.zs
        ux, uy, uz = u
        for bucket in self.grid.iter_buckets(u, rings=2):
            for j in bucket:
                if j == skip:
                    continue
                dx = xs[j] - ux
                dy = ys[j] - uy
                dz = zs[j] - uz
                if dx * dx + dy * dy + dz * dz <= limit:
                    out.append((xs[j], ys[j], zs[j]))
        return out

    def birth_delta(self, item) -> tuple:
        fresh = self.lattice.solo_covered(item, self._cover_neighbors(item))
        dist = float(self.model.spines.distance(np.asarray(item, dtype=float)))
        self._plan = ("birth", item, fresh, dist)
        return (1.0, -dist, -fresh * self.scale)

    def commit_birth(self) -> None:
        if self._plan is None or self._plan[0] != "birth":
            raise ContractViolation("commit_birth without a prepared birth")
        _, item, fresh, dist = self._plan
        self._plan = None
        self.xs.append(item[0])
        self.ys.append(item[1])
        self.zs.append(item[2])
        self.ds.append(dist)
        self.grid.insert(self.n, item)
        self.n += 1
        self.covered += fresh
        self.dsum += dist

    def death_delta(self, index: int) -> tuple:
        u = self.item(index)
        lost = self.lattice.solo_covered(u, self._cover_neighbors(u, skip=index))
        self._plan = ("death", index, lost)
        return (-1.0, self.ds[index], lost * self.scale)

    def commit_death(self):
        if self._plan is None or self._plan[0] != "death":
            raise ContractViolation("commit_death without a prepared death")
        _, i, lost = self._plan
        self._plan = None
        item = self.item(i)
        dist = self.ds[i]
        old_dsum = self.dsum
        self.grid.remove(i, item)
        last = self.n - 1
        if i != last:
            moved = self.item(last)
            self.xs[i] = moved[0]
            self.ys[i] = moved[1]
            self.zs[i] = moved[2]
            self.ds[i] = self.ds[last]
            self.grid.relabel(last, i, moved)
        self.xs.pop()
        self.ys.pop()
        self.zs.pop()
        self.ds.pop()
        self.n = last
        self.covered -= lost
        self.dsum -= dist
        return (i, item, dist, lost, old_dsum)

    def undo_death(self, token) -> None:
        i, item, dist, lost, old_dsum = token
        last = self.n
        self.xs.append(item[0])
        self.ys.append(item[1])
        self.zs.append(item[2])
        self.ds.append(dist)
        self.grid.insert(last, item)
        self.n += 1
        self.covered += lost
        # Restore the saved accumulator so a rollback is bitwise exact.
        self.dsum = old_dsum
        if i != last:
            moved = self.item(i)
            self.grid.remove(i, moved)
            self.grid.remove(last, item)
            self.xs[i], self.xs[last] = self.xs[last], self.xs[i]
            self.ys[i], self.ys[last] = self.ys[last], self.ys[i]
            self.zs[i], self.zs[last] = self.zs[last], self.zs[i]
            self.ds[i], self.ds[last] = self.ds[last], self.ds[i]
            self.grid.insert(i, item)
            self.grid.insert(last, moved)

    def pattern(self) -> Pattern:
        if self.n == 0:
            return Pattern(self.window, np.empty((0, 3)))
        pts = np.array([self.xs, self.ys, self.zs], dtype=float).T
        return Pattern(self.window, pts)

    def recompute(self) -> np.ndarray:
        return self.model.statistics(self.pattern())


# ---------------------------------------------------------------------------
# Module level helpers.


def sufficient_statistics(model, pattern: Pattern) -> np.ndarray:
    """Full recompute of t(y) for a model and pattern."""
    return model.statistics(pattern)


def statistic_delta_birth(model, pattern: Pattern, item) -> np.ndarray:
    """t(y + u) - t(y) computed incrementally from a fresh state."""
    state = model.new_state(pattern)
    return np.asarray(state.birth_delta(tuple(item)), dtype=float)


def statistic_delta_death(model, pattern: Pattern, index: int) -> np.ndarray:
    """t(y - y_index) - t(y) computed incrementally from a fresh state."""
    state = model.new_state(pattern)
    if not 0 <= index < pattern.n:
        raise ContractViolation(f"death index {index} out of range for n={pattern.n}")
    return np.asarray(state.death_delta(index), dtype=float)


_MODEL_NAMES = {
    "strauss": StraussModel,
    "area_interaction": AreaInteractionModel,
    "candy": CandyModel,
    "galaxy": GalaxyModel,
}


def model_from_name(name: str):
    """Model class registered under a configuration name."""
    try:
        return _MODEL_NAMES[name]
    except KeyError:
        raise ConfigError(
            f"unknown model '{name}', expected one of {sorted(_MODEL_NAMES)}"
        ) from None
