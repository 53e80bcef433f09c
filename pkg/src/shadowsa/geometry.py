"""Geometric primitives shared by the point process models.

Everything here is deterministic: quadrature grids have a fixed anchor and a
fixed reduction order, so repeated evaluation on the same inputs is bitwise
reproducible.  Distances are Euclidean; close pair predicates are strict
(``< r``) so that integer valued statistics are unambiguous.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, ContractViolation, Pattern

__all__ = [
    "SpatialGrid",
    "SpineSet",
    "CandyParams",
    "pair_count",
    "union_balls_measure",
    "ball_cell_lattice",
    "polyline_distance",
    "orientation_difference",
    "candy_counts",
]


class SpatialGrid:
    """Uniform bucket grid for radius bounded neighbor candidate queries.

    Buckets are keyed by integer cell coordinates (floor division by the
    cell size), each holding a list of item indices.  A query with radius
    ``rings * cell_size`` or less only needs to inspect ``(2 rings + 1)^dim``
    cells around the query point, so candidate lists stay short for the
    pattern sizes used here.
    """

    __slots__ = ("cell_size", "dim", "_inv", "buckets", "_offsets")

    def __init__(self, cell_size: float, dim: int):
        if not (cell_size > 0.0 and math.isfinite(cell_size)):
            raise ConfigError("grid cell size must be positive and finite")
        if dim not in (2, 3):
            raise ConfigError("grid dimension must be 2 or 3")
        self.cell_size = float(cell_size)
        self.dim = dim
        self._inv = 1.0 / self.cell_size
        self.buckets: dict[tuple, list[int]] = {}
        self._offsets: dict[int, list[tuple]] = {}

    def key(self, coords) -> tuple:
        inv = self._inv
        return tuple(math.floor(c * inv) for c in coords)

    def insert(self, index: int, coords) -> None:
        k = self.key(coords)
        bucket = self.buckets.get(k)
        if bucket is None:
            self.buckets[k] = [index]
        else:
            bucket.append(index)

    def remove(self, index: int, coords) -> None:
        k = self.key(coords)
        bucket = self.buckets.get(k)
        if bucket is None or index not in bucket:
            raise ContractViolation(f"index {index} is not stored in grid cell {k}")
        bucket.remove(index)
        if not bucket:
            del self.buckets[k]

    def relabel(self, old_index: int, new_index: int, coords) -> None:
        """Rename a stored index in place (used when items are swapped)."""
        bucket = self.buckets[self.key(coords)]
        bucket[bucket.index(old_index)] = new_index

    def _ring_offsets(self, rings: int) -> list[tuple]:
        cached = self._offsets.get(rings)
        if cached is None:
            span = range(-rings, rings + 1)
            cached = list(itertools.product(span, repeat=self.dim))
            self._offsets[rings] = cached
        return cached

    def iter_buckets(self, coords, rings: int = 1):
        """Yield the bucket lists of the (2 rings + 1)^dim cells around a location."""
        k = self.key(coords)
        buckets = self.buckets
        for off in self._ring_offsets(rings):
            bucket = buckets.get(tuple(a + b for a, b in zip(k, off)))
            if bucket:
                yield bucket

    def candidates(self, coords, rings: int = 1) -> list[int]:
        """All indices stored within ``rings`` cells of the query location."""
        out: list[int] = []
        for bucket in self.iter_buckets(coords, rings):
            out.extend(bucket)
        return out


def pair_count(coords, r: float) -> int:
    """Number of unordered pairs of rows of ``coords`` strictly closer than ``r``.

    Counts through a bucket grid with cell size ``r``: points are inserted
    one at a time and compared against previously inserted neighbors only,
    so every close pair is seen exactly once.
    """
    if not (r > 0.0 and math.isfinite(r)):
        raise ConfigError("pair distance threshold r must be positive and finite")
    pts = np.asarray(coords, dtype=float)
    if pts.size == 0:
        return 0
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise ConfigError(f"coordinates must have shape (n, 2) or (n, 3), got {pts.shape}")
    grid = SpatialGrid(r, pts.shape[1])
    r2 = r * r
    count = 0
    rows = [tuple(row) for row in pts]
    for i, p in enumerate(rows):
        for bucket in grid.iter_buckets(p):
            for j in bucket:
                q = rows[j]
                s = 0.0
                for a, b in zip(p, q):
                    d = a - b
                    s += d * d
                if s < r2:
                    count += 1
        grid.insert(i, p)
    return count


def ball_cell_lattice(center, r: float, anchor, resolution: float):
    """Integer lattice coordinates of quadrature cells whose centers fall in a ball.

    The lattice is anchored at ``anchor``: cell ``(i, j, ...)`` has center
    ``anchor + (i + 0.5, j + 0.5, ...) * resolution``.  Returns one integer
    array per axis (equal lengths), possibly empty.
    """
    center = np.asarray(center, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    dim = center.size
    axes = []
    for a in range(dim):
        lo = math.ceil((center[a] - r - anchor[a]) / resolution - 0.5)
        hi = math.floor((center[a] + r - anchor[a]) / resolution - 0.5)
        if hi < lo:
            return tuple(np.empty(0, dtype=np.int64) for _ in range(dim))
        axes.append(np.arange(lo, hi + 1, dtype=np.int64))
    mesh = np.meshgrid(*axes, indexing="ij")
    dist2 = np.zeros(mesh[0].shape)
    for a in range(dim):
        offs = anchor[a] + (mesh[a] + 0.5) * resolution - center[a]
        dist2 += offs * offs
    mask = dist2 <= r * r
    return tuple(m[mask] for m in mesh)


def union_balls_measure(
    points,
    r: float,
    resolution: float | None = None,
    window=None,
    clip_to_window: bool = False,
) -> float:
    """Lebesgue measure of a union of equal balls by midpoint counting.

    The quadrature lattice is anchored at the lower corner of the union's
    bounding box, with cell edge ``resolution`` (default r/100 in 2-D and
    r/40 in 3-D).  A cell contributes its full measure when its center lies
    within ``r`` of at least one ball center.  Balls reaching outside the
    observation window are kept whole unless ``clip_to_window`` is set, in
    which case only cell centers inside the window are counted.
    """
    if not (r > 0.0 and math.isfinite(r)):
        raise ConfigError("ball radius r must be positive and finite")
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0.0
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise ConfigError(f"ball centers must have shape (n, 2) or (n, 3), got {pts.shape}")
    dim = pts.shape[1]
    if resolution is None:
        resolution = r / 100.0 if dim == 2 else r / 40.0
    if not (resolution > 0.0 and math.isfinite(resolution)):
        raise ConfigError("quadrature resolution must be positive and finite")
    if clip_to_window and window is None:
        raise ConfigError("clip_to_window requires an observation window")

    anchor = pts.min(axis=0) - r
    upper = pts.max(axis=0) + r
    shape = np.maximum(np.ceil((upper - anchor) / resolution).astype(np.int64) + 1, 1)
    strides = np.ones(dim, dtype=np.int64)
    for a in range(dim - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]

    chunks = []
    for p in pts:
        lattice = ball_cell_lattice(p, r, anchor, resolution)
        if lattice[0].size == 0:
            continue
        flat = lattice[0] * strides[0]
        for a in range(1, dim):
            flat = flat + lattice[a] * strides[a]
        chunks.append(flat)
    if not chunks:
        return 0.0
    covered = np.unique(np.concatenate(chunks))
    if clip_to_window:
        centers = np.empty((covered.size, dim))
        rest = covered
        for a in range(dim):
            idx, rest = np.divmod(rest, strides[a])
            centers[:, a] = anchor[a] + (idx + 0.5) * resolution
        inside = window.contains(centers)
        covered = covered[inside]
    return float(covered.size) * resolution**dim


class SpineSet:
    """A collection of polylines (galaxy filament spines) in 2-D or 3-D.

    Vertices of each polyline are stored as an (m, dim) array with m >= 2.
    Distance queries clamp to segment endpoints, so the distance to the set
    is the usual Euclidean distance to the nearest point on any polyline.
    """

    def __init__(self, polylines):
        cleaned = []
        dim = None
        for k, poly in enumerate(polylines):
            arr = np.asarray(poly, dtype=float)
            if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] not in (2, 3):
                raise ConfigError(
                    f"polyline {k} must be an (m >= 2, 2 or 3) vertex array, got {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"polyline {k} contains non-finite vertices")
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise ConfigError("all polylines must share one dimension")
            cleaned.append(arr)
        if not cleaned:
            raise ConfigError("a spine set needs at least one polyline")
        self.polylines = cleaned
        self.dim = dim
        starts = np.concatenate([p[:-1] for p in cleaned], axis=0)
        ends = np.concatenate([p[1:] for p in cleaned], axis=0)
        self._start = starts
        self._delta = ends - starts
        len2 = np.einsum("ij,ij->i", self._delta, self._delta)
        self._len2 = np.where(len2 > 0.0, len2, 1.0)
        self._degenerate = len2 == 0.0

    @property
    def n_segments(self) -> int:
        return self._start.shape[0]

    def distance(self, points) -> np.ndarray | float:
        """Distance from one point (dim,) or many points (n, dim) to the set."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise ContractViolation(
                f"query points have dimension {pts.shape[1]}, spines have {self.dim}"
            )
        rel = pts[:, None, :] - self._start[None, :, :]
        t = np.einsum("nsj,sj->ns", rel, self._delta) / self._len2
        t = np.clip(t, 0.0, 1.0)
        t = np.where(self._degenerate[None, :], 0.0, t)
        gap = rel - t[:, :, None] * self._delta[None, :, :]
        d = np.sqrt(np.einsum("nsj,nsj->ns", gap, gap).min(axis=1))
        return float(d[0]) if single else d


def polyline_distance(points, spines) -> np.ndarray | float:
    """Distance from point(s) to the nearest point of a set of polylines."""
    if not isinstance(spines, SpineSet):
        spines = SpineSet(spines)
    return spines.distance(points)


def orientation_difference(a, b):
    """Acute angle between two undirected orientations, in [0, pi/2]."""
    d = np.abs(np.asarray(a, dtype=float) % math.pi - np.asarray(b, dtype=float) % math.pi)
    out = np.minimum(d, math.pi - d)
    return float(out) if out.ndim == 0 else out


def _odiff(a: float, b: float) -> float:
    """Scalar orientation difference for inputs already wrapped to [0, pi)."""
    d = a - b
    if d < 0.0:
        d = -d
    alt = math.pi - d
    return d if d <= alt else alt


@dataclass(frozen=True)
class CandyParams:
    """Interaction ranges and angular tolerances for the segment model.

    ``r_c``/``tau_c`` gate endpoint connections: two segments connect when
    exactly one of the four endpoint pairs is closer than ``r_c`` and their
    orientations differ by less than ``tau_c``.  ``r_r``/``tau_r`` gate the
    crossing penalty: segment centers closer than ``r_r`` count as a bad
    pair unless the orientations are within ``tau_r`` of orthogonal.
    """

    r_c: float
    tau_c: float
    r_r: float
    tau_r: float

    def __post_init__(self) -> None:
        for name in ("r_c", "tau_c", "r_r", "tau_r"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ConfigError(f"candy parameter {name} must be positive and finite")
        if self.tau_c > math.pi / 2 or self.tau_r > math.pi / 2:
            raise ConfigError("angular tolerances cannot exceed pi/2")


def segment_connection(phii, ei, phij, ej, params: CandyParams):
    """Connection state of one segment pair.

    Returns ``None`` when the pair is not connected, otherwise the tuple of
    endpoint slots ``(e_i, e_j)`` realizing the unique close endpoint pair
    (slot 0 or 1 per segment).  Pairs with two or more close endpoint pairs
    do not connect.  ``ei``/``ej`` are (2, 2) endpoint arrays.
    """
    rc2 = params.r_c * params.r_c
    hit = None
    hits = 0
    for a in range(2):
        for b in range(2):
            dx = ei[a][0] - ej[b][0]
            dy = ei[a][1] - ej[b][1]
            if dx * dx + dy * dy < rc2:
                hits += 1
                hit = (a, b)
    if hits != 1:
        return None
    if _odiff(phii, phij) >= params.tau_c:
        return None
    return hit


def _close_pair_is_rejected(phii: float, phij: float, params: CandyParams) -> bool:
    return abs(_odiff(phii, phij) - math.pi / 2) > params.tau_r


def candy_counts(pattern: Pattern, params: CandyParams):
    """Sufficient statistics of the segment interaction model.

    Returns ``(n_d, n_s, n_f, n_r)``: the numbers of doubly connected,
    singly connected and free segments, plus the count of rejected close
    pairs (centers closer than ``r_r`` at a non orthogonal angle).  A
    segment is doubly connected when each of its two endpoints carries at
    least one connection, singly connected when exactly one endpoint does.
    """
    if pattern.kind != "segments":
        raise ContractViolation("candy statistics require a segment pattern")
    n = pattern.n
    if n == 0:
        return (0, 0, 0, 0)
    centers = pattern.points
    phi = pattern.orientation
    ends = pattern.endpoints()
    links = np.zeros((n, 2), dtype=np.int64)
    n_r = 0
    rr2 = params.r_r * params.r_r
    for i in range(n):
        for j in range(i + 1, n):
            dc = centers[i] - centers[j]
            dc2 = float(dc @ dc)
            if dc2 < rr2 and _close_pair_is_rejected(phi[i], phi[j], params):
                n_r += 1
            conn = segment_connection(phi[i], ends[i], phi[j], ends[j], params)
            if conn is not None:
                links[i, conn[0]] += 1
                links[j, conn[1]] += 1
    busy = links > 0
    ends_with_links = busy.sum(axis=1)
    n_d = int(np.sum(ends_with_links == 2))
    n_s = int(np.sum(ends_with_links == 1))
    n_f = int(np.sum(ends_with_links == 0))
    return (n_d, n_s, n_f, n_r)
