"""CSV and JSON input/output with round-trip numeric formatting.

Every float is written with ``repr``, the shortest decimal string that
parses back to the same binary value, so replaying a run reproduces its
output files byte for byte.  Pattern files carry coordinates only; the
window lives in the run configuration or metadata.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ConfigError, Pattern, Window

__all__ = [
    "format_float",
    "write_pattern",
    "read_pattern",
    "write_spines",
    "read_spines",
    "write_trajectory",
    "read_trajectory",
    "TrajectoryTable",
    "write_statistics",
    "read_statistics",
    "write_metadata",
    "read_metadata",
    "jsonable",
]

POINT_HEADERS = {2: ["x", "y"], 3: ["x", "y", "z"]}
SEGMENT_HEADER = ["cx", "cy", "orientation", "length"]


def format_float(value) -> str:
    """Shortest decimal representation that round-trips to the same float."""
    return repr(float(value))


def _parse_float(text: str, path, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(
            f"{path}, line {line}: column {column!r} has non numeric value {text!r}"
        ) from exc


def write_pattern(path, pattern: Pattern) -> Path:
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        if pattern.kind == "segments":
            writer.writerow(SEGMENT_HEADER)
            length = format_float(pattern.seg_length)
            for (cx, cy), phi in zip(pattern.points, pattern.orientation):
                writer.writerow(
                    [format_float(cx), format_float(cy), format_float(phi), length]
                )
        else:
            writer.writerow(POINT_HEADERS[pattern.points.shape[1]])
            for row in pattern.points:
                writer.writerow([format_float(v) for v in row])
    return path


def read_pattern(path, window: Window) -> Pattern:
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}, line 1: missing header row") from None
        header = [h.strip() for h in header]
        if header == SEGMENT_HEADER:
            return _read_segments(reader, path, window)
        for dim, names in POINT_HEADERS.items():
            if header == names:
                return _read_points(reader, path, window, dim)
        raise ConfigError(
            f"{path}, line 1: unrecognized header {header!r}; expected "
            f"'x,y', 'x,y,z' or 'cx,cy,orientation,length'"
        )


def _read_points(reader, path, window: Window, dim: int) -> Pattern:
    if window.dim != dim:
        raise ConfigError(
            f"{path}: pattern has dimension {dim} but the window has {window.dim}"
        )
    rows = []
    for line, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != dim:
            raise ConfigError(f"{path}, line {line}: expected {dim} columns, got {len(record)}")
        rows.append(
            [_parse_float(v, path, line, c) for v, c in zip(record, POINT_HEADERS[dim])]
        )
    points = np.array(rows, dtype=float).reshape(len(rows), dim)
    return Pattern(window, points)


def _read_segments(reader, path, window: Window) -> Pattern:
    if window.dim != 2:
        raise ConfigError(f"{path}: segment patterns require a 2 dimensional window")
    centers = []
    phis = []
    lengths = set()
    for line, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != 4:
            raise ConfigError(f"{path}, line {line}: expected 4 columns, got {len(record)}")
        cx, cy, phi, length = (
            _parse_float(v, path, line, c) for v, c in zip(record, SEGMENT_HEADER)
        )
        centers.append([cx, cy])
        phis.append(phi)
        lengths.add(length)
    if len(lengths) > 1:
        raise ConfigError(f"{path}: segment lengths differ, found {sorted(lengths)}")
    seg_length = lengths.pop() if lengths else 1.0
    points = np.array(centers, dtype=float).reshape(len(centers), 2)
    return Pattern(window, points, orientation=phis, seg_length=seg_length)


def write_spines(path, polylines) -> Path:
    path = Path(path)
    polylines = [np.asarray(p, dtype=float) for p in polylines]
    if not polylines:
        raise ConfigError("spine file needs at least one polyline")
    dim = polylines[0].shape[1]
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["polyline_id"] + POINT_HEADERS[dim])
        for pid, poly in enumerate(polylines):
            for vertex in poly:
                writer.writerow([str(pid)] + [format_float(v) for v in vertex])
    return path


def read_spines(path):
    """Polyline list from a spine CSV, vertices kept in file order per id."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}, line 1: missing header row") from None
        dim = None
        for d, names in POINT_HEADERS.items():
            if header == ["polyline_id"] + names:
                dim = d
        if dim is None:
            raise ConfigError(
                f"{path}, line 1: unrecognized header {header!r}; expected "
                f"'polyline_id,x,y' or 'polyline_id,x,y,z'"
            )
        order: list[str] = []
        groups: dict[str, list[list[float]]] = {}
        for line, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != dim + 1:
                raise ConfigError(
                    f"{path}, line {line}: expected {dim + 1} columns, got {len(record)}"
                )
            pid = record[0].strip()
            vertex = [
                _parse_float(v, path, line, c)
                for v, c in zip(record[1:], POINT_HEADERS[dim])
            ]
            if pid not in groups:
                groups[pid] = []
                order.append(pid)
            groups[pid].append(vertex)
    polylines = [np.array(groups[pid], dtype=float) for pid in order]
    for pid, poly in zip(order, polylines):
        if poly.shape[0] < 2:
            raise ConfigError(f"{path}: polyline {pid!r} needs at least 2 vertices")
    return polylines


@dataclass(frozen=True)
class TrajectoryTable:
    """Parsed trajectory file: one row per kept outer iteration."""

    iterations: np.ndarray
    temperatures: np.ndarray
    deltas: np.ndarray
    thetas: np.ndarray
    accept_rates: np.ndarray

    @property
    def dim(self) -> int:
        return self.thetas.shape[1]

    @property
    def n_kept(self) -> int:
        return self.thetas.shape[0]


def _trajectory_header(k: int) -> list[str]:
    return (
        ["iter", "T"]
        + [f"delta_{i + 1}" for i in range(k)]
        + [f"theta_{i + 1}" for i in range(k)]
        + ["accept_rate"]
    )


def write_trajectory(path, trajectory) -> Path:
    """Trajectory CSV: iter, T, delta_1..k, theta_1..k, accept_rate."""
    path = Path(path)
    k = trajectory.thetas.shape[1]
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_trajectory_header(k))
        for row in range(trajectory.thetas.shape[0]):
            record = [str(int(trajectory.iterations[row]))]
            record.append(format_float(trajectory.temperatures[row]))
            record.extend(format_float(v) for v in trajectory.deltas[row])
            record.extend(format_float(v) for v in trajectory.thetas[row])
            record.append(format_float(trajectory.accept_rates[row]))
            writer.writerow(record)
    return path


def read_trajectory(path) -> TrajectoryTable:
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}, line 1: missing header row") from None
        n_cols = len(header)
        if n_cols < 5 or (n_cols - 3) % 2 != 0:
            raise ConfigError(f"{path}, line 1: malformed trajectory header {header!r}")
        k = (n_cols - 3) // 2
        if header != _trajectory_header(k):
            raise ConfigError(
                f"{path}, line 1: header {header!r} does not match the "
                f"trajectory schema for {k} components"
            )
        iters = []
        temps = []
        deltas = []
        thetas = []
        rates = []
        for line, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != n_cols:
                raise ConfigError(
                    f"{path}, line {line}: expected {n_cols} columns, got {len(record)}"
                )
            values = [_parse_float(v, path, line, c) for v, c in zip(record, header)]
            iters.append(int(values[0]))
            temps.append(values[1])
            deltas.append(values[2 : 2 + k])
            thetas.append(values[2 + k : 2 + 2 * k])
            rates.append(values[-1])
    n = len(iters)
    return TrajectoryTable(
        iterations=np.array(iters, dtype=int),
        temperatures=np.array(temps),
        deltas=np.array(deltas, dtype=float).reshape(n, k),
        thetas=np.array(thetas, dtype=float).reshape(n, k),
        accept_rates=np.array(rates),
    )


def write_statistics(path, samples, stat_names, index_name: str = "sample") -> Path:
    """Statistics CSV: one row per sample, columns named after the model."""
    path = Path(path)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[1] != len(stat_names):
        raise ConfigError(
            f"statistics have {samples.shape[1]} columns, expected {len(stat_names)}"
        )
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([index_name] + list(stat_names))
        for i, row in enumerate(samples, start=1):
            writer.writerow([str(i)] + [format_float(v) for v in row])
    return path


def read_statistics(path):
    """(stat_names, index, values) from a statistics CSV."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}, line 1: missing header row") from None
        if len(header) < 2:
            raise ConfigError(f"{path}, line 1: malformed statistics header {header!r}")
        names = header[1:]
        index = []
        rows = []
        for line, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ConfigError(
                    f"{path}, line {line}: expected {len(header)} columns, got {len(record)}"
                )
            index.append(record[0])
            rows.append(
                [_parse_float(v, path, line, c) for v, c in zip(record[1:], names)]
            )
    return names, index, np.array(rows, dtype=float).reshape(len(rows), len(names))


def jsonable(value):
    """Recursively convert numpy scalars, arrays and paths for json.dump."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def write_metadata(path, metadata: dict) -> Path:
    path = Path(path)
    with path.open("w") as handle:
        json.dump(jsonable(metadata), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def read_metadata(path) -> dict:
    path = Path(path)
    try:
        with path.open() as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
