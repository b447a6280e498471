"""Drivable corridor: lateral bounds sampled along the path plus a stop
limit on progress.

Bounds are signed lateral offsets from the reference path (positive left),
piecewise-linear between uniform progress samples. The corridor is the
object the remote operator edits: lateral edits are a boolean union of the
corridor footprint with an operator polygon, longitudinal edits replace the
stop limit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from shapely.geometry import LineString, Polygon

from .path import ReferencePath, project_to_path

# extra clearance (beyond twice the body radius) a band must keep
WIDTH_MARGIN = 0.05
# default spacing of bound samples along the path
SAMPLE_SPACING = 0.5

_LENGTH_TOL = 1e-9
_MERGE_TOL = 1e-6


class RejectedModification(Exception):
    """Raised when a corridor edit cannot be applied unambiguously."""


@dataclass(frozen=True)
class Corridor:
    thetas: np.ndarray          # (M,) strictly increasing progress samples
    left: np.ndarray            # (M,) left bound offsets (positive left)
    right: np.ndarray           # (M,) right bound offsets
    stop_progress: float | None = None  # None means unbounded

    def __post_init__(self):
        t = np.asarray(self.thetas, dtype=float)
        l = np.asarray(self.left, dtype=float)
        r = np.asarray(self.right, dtype=float)
        if not (t.ndim == 1 and t.shape == l.shape == r.shape and len(t) >= 2):
            raise ValueError("corridor arrays must be 1-d and of equal length >= 2")
        if np.any(np.diff(t) <= 0):
            raise ValueError("progress samples must be strictly increasing")
        if np.any(l < r):
            raise ValueError("left bound below right bound")
        object.__setattr__(self, "thetas", t)
        object.__setattr__(self, "left", l)
        object.__setattr__(self, "right", r)

    def left_at(self, theta):
        return np.interp(theta, self.thetas, self.left)

    def right_at(self, theta):
        return np.interp(theta, self.thetas, self.right)

    def _slope_at(self, values, theta):
        idx = np.searchsorted(self.thetas, np.clip(theta, self.thetas[0], self.thetas[-1]), side="right") - 1
        idx = np.clip(idx, 0, len(self.thetas) - 2)
        slopes = np.diff(values) / np.diff(self.thetas)
        return slopes[idx]

    def left_slope_at(self, theta):
        return self._slope_at(self.left, theta)

    def right_slope_at(self, theta):
        return self._slope_at(self.right, theta)

    def min_width(self) -> float:
        return float(np.min(self.left - self.right))

    def to_json(self) -> dict:
        return {
            "thetas": self.thetas.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "stop_progress": self.stop_progress,
        }

    @staticmethod
    def from_json(doc: dict) -> "Corridor":
        return Corridor(
            thetas=np.asarray(doc["thetas"], dtype=float),
            left=np.asarray(doc["left"], dtype=float),
            right=np.asarray(doc["right"], dtype=float),
            stop_progress=doc.get("stop_progress"),
        )


def uniform_corridor(path: ReferencePath, left: float, right: float,
                     stop_progress: float | None = None,
                     spacing: float = SAMPLE_SPACING) -> Corridor:
    """Corridor with constant bounds sampled uniformly over the whole path."""
    n = max(1, int(np.ceil(path.length / spacing)))
    thetas = np.linspace(0.0, path.length, n + 1)
    return Corridor(thetas, np.full(n + 1, float(left)), np.full(n + 1, float(right)), stop_progress)


def band_polygon(corridor: Corridor, path: ReferencePath) -> Polygon:
    """Footprint swept by the lateral band along the path."""
    pts = path.point_at(corridor.thetas)
    normals = path.normal_at(corridor.thetas)
    left_pts = pts + corridor.left[:, None] * normals
    right_pts = pts + corridor.right[:, None] * normals
    shell = np.vstack((left_pts, right_pts[::-1]))
    poly = Polygon(shell)
    if not poly.is_valid:
        poly = poly.buffer(0.0)
    return poly


def _slice_intervals(geom: Polygon, origin: np.ndarray, normal: np.ndarray,
                     lo: float, hi: float) -> list[tuple[float, float]]:
    """Intersect the lateral line segment [lo, hi] at `origin` with a
    polygon; returns merged offset intervals sorted ascending."""
    line = LineString([origin + lo * normal, origin + hi * normal])
    inter = line.intersection(geom)
    if inter.is_empty:
        return []
    parts = getattr(inter, "geoms", [inter])
    raw = []
    for part in parts:
        coords = np.asarray(part.coords, dtype=float)
        taus = (coords - origin[None, :]) @ normal
        raw.append((float(taus.min()), float(taus.max())))
    raw.sort()
    merged = [list(raw[0])]
    for a, b in raw[1:]:
        if a <= merged[-1][1] + _MERGE_TOL:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def _validated_polygon(polygon) -> Polygon:
    coords = np.asarray(polygon, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 2 or coords.shape[0] < 3:
        raise RejectedModification("polygon needs at least three vertices")
    poly = Polygon(coords)
    if not poly.is_valid or poly.area <= _LENGTH_TOL:
        raise RejectedModification("polygon must be simple with nonzero area")
    return poly


def _polygon_theta_span(path: ReferencePath, poly: Polygon) -> tuple[float, float, float, float]:
    """Progress and offset extents of a polygon's vertices on the path."""
    thetas, offs = [], []
    for v in np.asarray(poly.exterior.coords, dtype=float)[:-1]:
        th, off = project_to_path(path, v)
        thetas.append(th)
        offs.append(off)
    return min(thetas), max(thetas), min(offs), max(offs)


def apply_lateral_modification(corridor: Corridor, path: ReferencePath, polygon,
                               min_width: float) -> Corridor:
    """Union an operator polygon into the corridor footprint.

    Bound samples whose progress lies in the polygon's span are re-extracted
    from the union as the lateral interval containing the original band;
    samples outside the span are untouched. The union never narrows the band.
    """
    poly = _validated_polygon(polygon)
    band = band_polygon(corridor, path)
    merged = band.union(poly)
    if merged.geom_type != "Polygon":
        raise RejectedModification("modification is disconnected from the corridor")

    t_lo, t_hi, off_lo, off_hi = _polygon_theta_span(path, poly)
    affected = np.nonzero((corridor.thetas >= t_lo - _MERGE_TOL) & (corridor.thetas <= t_hi + _MERGE_TOL))[0]
    new_left = corridor.left.copy()
    new_right = corridor.right.copy()
    for j in affected:
        theta = float(corridor.thetas[j])
        frame = path.frame_at(theta)
        lo = min(corridor.right[j], off_lo) - 1.0
        hi = max(corridor.left[j], off_hi) + 1.0
        intervals = _slice_intervals(merged, frame.point, frame.normal, lo, hi)
        mid = 0.5 * (corridor.left[j] + corridor.right[j])
        keep = None
        for a, b in intervals:
            if a - _MERGE_TOL <= mid <= b + _MERGE_TOL:
                keep = (a, b)
                break
        if keep is None:
            raise RejectedModification("union lost the original band")
        extras = [iv for iv in intervals if iv != keep and iv[1] - iv[0] > _MERGE_TOL]
        if extras:
            raise RejectedModification("union is split into multiple bands across the corridor")
        # the union can only widen; clamp out slicing noise
        new_left[j] = max(keep[1], corridor.left[j])
        new_right[j] = min(keep[0], corridor.right[j])

    result = Corridor(corridor.thetas, new_left, new_right, corridor.stop_progress)
    if result.min_width() < min_width - _LENGTH_TOL:
        raise RejectedModification("modified corridor narrower than the vehicle")
    return result


def apply_longitudinal_modification(corridor: Corridor, stop_progress: float | None) -> Corridor:
    """Replace the stop limit; None removes it."""
    if stop_progress is not None:
        stop_progress = float(stop_progress)
        if not (corridor.thetas[0] <= stop_progress <= corridor.thetas[-1]):
            raise RejectedModification("stop limit outside the path domain")
    return replace(corridor, stop_progress=stop_progress)


@dataclass(frozen=True)
class BlockedObstacle:
    index: int
    entry_theta: float


def carve_obstacles(corridor: Corridor, path: ReferencePath, footprints,
                    min_width: float) -> tuple[Corridor, list[BlockedObstacle]]:
    """Narrow the band around obstacles that leave a passable side.

    For each footprint overlapping the band, the side (left or right of the
    obstacle) with the larger worst-case clearance is kept if it admits the
    vehicle everywhere along the obstacle; otherwise the obstacle is reported
    as blocking together with the progress of its first intersection.
    """
    left = corridor.left.copy()
    right = corridor.right.copy()
    thetas = corridor.thetas
    band = band_polygon(corridor, path)
    blocked: list[BlockedObstacle] = []

    for idx, fp in enumerate(footprints):
        poly = Polygon(np.asarray(fp, dtype=float))
        if not poly.is_valid:
            poly = poly.buffer(0.0)
        overlap = poly.intersection(band)
        if overlap.is_empty or overlap.area <= _LENGTH_TOL:
            continue
        entry = min(
            project_to_path(path, v)[0]
            for part in getattr(overlap, "geoms", [overlap])
            if hasattr(part, "exterior")
            for v in np.asarray(part.exterior.coords, dtype=float)[:-1]
        )
        t_lo, t_hi, _, _ = _polygon_theta_span(path, poly)
        span = np.nonzero((thetas >= t_lo - _MERGE_TOL) & (thetas <= t_hi + _MERGE_TOL))[0]

        occupied = []  # (sample index, obstacle offset min, obstacle offset max)
        for j in span:
            frame = path.frame_at(float(thetas[j]))
            intervals = _slice_intervals(poly, frame.point, frame.normal, right[j], left[j])
            inside = [(max(a, right[j]), min(b, left[j])) for a, b in intervals]
            inside = [(a, b) for a, b in inside if b - a > _MERGE_TOL]
            if inside:
                occupied.append((j, min(a for a, _ in inside), max(b for _, b in inside)))
        if not occupied:
            continue

        left_gap = min(left[j] - omax for j, _, omax in occupied)
        right_gap = min(omin - right[j] for j, omin, _ in occupied)
        if max(left_gap, right_gap) < min_width:
            blocked.append(BlockedObstacle(index=idx, entry_theta=float(entry)))
            continue
        if right_gap >= left_gap:
            for j, omin, _ in occupied:
                left[j] = min(left[j], omin)
        else:
            for j, _, omax in occupied:
                right[j] = max(right[j], omax)

    carved = Corridor(thetas, left, right, corridor.stop_progress)
    return carved, blocked
