"""Reference path geometry: arc-length parametrized polyline with a
continuously interpolated heading.

The path is the domain of the progress variable used by the planner.
Positions are interpolated linearly between vertices; the heading is
interpolated linearly in arc length between per-vertex headings, which gives
a tangent/normal frame that rotates continuously along the path and a
piecewise-constant curvature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TANGENT_NORM_TOL = 1e-9


@dataclass(frozen=True)
class PathFrame:
    """Local frame at a given progress value."""

    point: np.ndarray       # (2,) position on the path
    tangent: np.ndarray     # (2,) unit tangent from interpolated heading
    normal: np.ndarray      # (2,) unit left normal
    curvature: float        # heading rate dphi/ds on this segment
    seg_direction: np.ndarray  # (2,) unit direction of the underlying segment


class ReferencePath:
    """Polyline reference path with cumulative arc length.

    Vertices must be distinct; arc length is strictly increasing. Per-vertex
    headings are the average of the adjacent segment headings (unwrapped), so
    the interpolated tangent turns smoothly on curved paths.
    """

    def __init__(self, vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 2:
            raise ValueError("path needs at least two (x, y) vertices")
        deltas = np.diff(verts, axis=0)
        seg_len = np.hypot(deltas[:, 0], deltas[:, 1])
        if np.any(seg_len <= 0.0):
            raise ValueError("arc length must be strictly increasing")

        self.vertices = verts
        self.seg_lengths = seg_len
        self.s = np.concatenate(([0.0], np.cumsum(seg_len)))
        self.length = float(self.s[-1])

        seg_heading = np.unwrap(np.arctan2(deltas[:, 1], deltas[:, 0]))
        vert_heading = np.empty(len(verts))
        vert_heading[0] = seg_heading[0]
        vert_heading[-1] = seg_heading[-1]
        vert_heading[1:-1] = 0.5 * (seg_heading[:-1] + seg_heading[1:])
        self.vertex_heading = vert_heading
        # dphi/ds, constant on each segment
        self.seg_curvature = np.diff(vert_heading) / seg_len
        self.seg_dir = deltas / seg_len[:, None]

        tangents = np.column_stack((np.cos(vert_heading), np.sin(vert_heading)))
        assert np.all(np.abs(np.hypot(tangents[:, 0], tangents[:, 1]) - 1.0) < TANGENT_NORM_TOL)
        self.vertex_tangent = tangents
        self.vertex_normal = np.column_stack((-tangents[:, 1], tangents[:, 0]))

    def _segment_index(self, theta):
        idx = np.searchsorted(self.s, theta, side="right") - 1
        return np.clip(idx, 0, len(self.seg_lengths) - 1)

    def point_at(self, theta):
        theta = np.clip(theta, 0.0, self.length)
        x = np.interp(theta, self.s, self.vertices[:, 0])
        y = np.interp(theta, self.s, self.vertices[:, 1])
        return np.stack(np.broadcast_arrays(x, y), axis=-1)

    def heading_at(self, theta):
        theta = np.clip(theta, 0.0, self.length)
        return np.interp(theta, self.s, self.vertex_heading)

    def tangent_at(self, theta):
        phi = self.heading_at(theta)
        return np.stack(np.broadcast_arrays(np.cos(phi), np.sin(phi)), axis=-1)

    def normal_at(self, theta):
        phi = self.heading_at(theta)
        return np.stack(np.broadcast_arrays(-np.sin(phi), np.cos(phi)), axis=-1)

    def curvature_at(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.seg_curvature[self._segment_index(np.clip(theta, 0.0, self.length))]

    def frame_at(self, theta: float) -> PathFrame:
        theta = float(np.clip(theta, 0.0, self.length))
        i = int(self._segment_index(theta))
        return PathFrame(
            point=self.point_at(theta).reshape(2),
            tangent=self.tangent_at(theta).reshape(2),
            normal=self.normal_at(theta).reshape(2),
            curvature=float(self.seg_curvature[i]),
            seg_direction=self.seg_dir[i],
        )

    def frames_at(self, thetas):
        """Batched frames: (points, tangents, normals, curvature, seg_dir)
        arrays over an array of progress values."""
        theta = np.clip(np.asarray(thetas, dtype=float), 0.0, self.length)
        idx = self._segment_index(theta)
        x = np.interp(theta, self.s, self.vertices[:, 0])
        y = np.interp(theta, self.s, self.vertices[:, 1])
        phi = np.interp(theta, self.s, self.vertex_heading)
        c, s = np.cos(phi), np.sin(phi)
        points = np.column_stack((x, y))
        tangents = np.column_stack((c, s))
        normals = np.column_stack((-s, c))
        return points, tangents, normals, self.seg_curvature[idx], self.seg_dir[idx]


def project_to_path(path: ReferencePath, position) -> tuple[float, float]:
    """Project a world point onto the path.

    Returns (theta, signed lateral offset). Theta is the arc length of the
    closest polyline point (clamped to the ends); the offset is measured
    along the interpolated left normal at theta, positive to the left.
    """
    p = np.asarray(position, dtype=float)
    a = path.vertices[:-1]
    d = path.seg_dir
    rel = p[None, :] - a
    t = np.einsum("ij,ij->i", rel, d)
    t = np.clip(t, 0.0, path.seg_lengths)
    closest = a + t[:, None] * d
    dist2 = np.einsum("ij,ij->i", p[None, :] - closest, p[None, :] - closest)
    i = int(np.argmin(dist2))
    theta = float(path.s[i] + t[i])
    frame = path.frame_at(theta)
    offset = float(np.dot(frame.normal, p - frame.point))
    return theta, offset


def straight_path(length: float, spacing: float = 1.0, start=(0.0, 0.0), heading: float = 0.0) -> ReferencePath:
    """Straight reference path, mostly for tests and synthetic maps."""
    n = max(2, int(round(length / spacing)) + 1)
    s = np.linspace(0.0, length, n)
    x = start[0] + s * np.cos(heading)
    y = start[1] + s * np.sin(heading)
    return ReferencePath(np.column_stack((x, y)))


def arc_path(radius: float, angle: float, spacing: float = 0.5, start=(0.0, 0.0), heading: float = 0.0) -> ReferencePath:
    """Circular arc of given radius and total turn angle (positive = left)."""
    n = max(2, int(round(abs(radius * angle) / spacing)) + 1)
    phi = heading + np.linspace(0.0, angle, n)
    cx = start[0] - radius * np.sin(heading)
    cy = start[1] + radius * np.cos(heading)
    x = cx + radius * np.sin(phi)
    y = cy - radius * np.cos(phi)
    return ReferencePath(np.column_stack((x, y)))
