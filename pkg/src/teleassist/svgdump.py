"""Top-down SVG snapshots for visual diffing.

Color coding: red left bound, green right bound, blue stop-limit marker,
dark-green trajectory, grey lane geometry.
"""

from __future__ import annotations

import numpy as np

from .corridor import Corridor
from .path import ReferencePath

_STYLE = {
    "path": "stroke:#999999;stroke-width:0.08;fill:none;stroke-dasharray:0.6 0.4",
    "left": "stroke:#cc2222;stroke-width:0.12;fill:none",
    "right": "stroke:#22aa22;stroke-width:0.12;fill:none",
    "stop": "stroke:#2244cc;stroke-width:0.18;fill:none",
    "trajectory": "stroke:#115511;stroke-width:0.15;fill:none",
    "obstacle": "fill:#555555;fill-opacity:0.8;stroke:none",
    "polygon": "fill:#888888;fill-opacity:0.25;stroke:#555555;stroke-width:0.06;stroke-dasharray:0.4 0.3",
    "ego": "fill:#1155cc;fill-opacity:0.7;stroke:none",
}


def _poly_points(coords) -> str:
    return " ".join(f"{x:.3f},{-y:.3f}" for x, y in coords)


def render_scene(path: ReferencePath, corridor: Corridor | None = None,
                 trajectory=None, obstacles=None, operator_polygon=None,
                 ego=None, padding: float = 6.0) -> str:
    """Render one scene to an SVG document string (y axis flipped up)."""
    xs = path.vertices[:, 0]
    ys = -path.vertices[:, 1]
    min_x, max_x = xs.min() - padding, xs.max() + padding
    min_y, max_y = ys.min() - padding, ys.max() + padding
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{min_x:.1f} {min_y:.1f} '
        f'{max_x - min_x:.1f} {max_y - min_y:.1f}" width="1200">'
    ]
    parts.append(f'<polyline style="{_STYLE["path"]}" points="{_poly_points(path.vertices)}"/>')

    if corridor is not None:
        pts = path.point_at(corridor.thetas)
        normals = path.normal_at(corridor.thetas)
        left = pts + corridor.left[:, None] * normals
        right = pts + corridor.right[:, None] * normals
        parts.append(f'<polyline style="{_STYLE["left"]}" points="{_poly_points(left)}"/>')
        parts.append(f'<polyline style="{_STYLE["right"]}" points="{_poly_points(right)}"/>')
        if corridor.stop_progress is not None:
            theta = float(corridor.stop_progress)
            center = path.point_at(theta)
            normal = path.normal_at(theta).reshape(2)
            a = center + float(corridor.left_at(theta)) * normal
            b = center + float(corridor.right_at(theta)) * normal
            parts.append(
                f'<line style="{_STYLE["stop"]}" x1="{a[0]:.3f}" y1="{-a[1]:.3f}" '
                f'x2="{b[0]:.3f}" y2="{-b[1]:.3f}"/>')

    for fp in obstacles or []:
        parts.append(f'<polygon style="{_STYLE["obstacle"]}" points="{_poly_points(np.asarray(fp))}"/>')

    if operator_polygon is not None:
        parts.append(
            f'<polygon style="{_STYLE["polygon"]}" points="{_poly_points(np.asarray(operator_polygon))}"/>')

    if trajectory is not None:
        coords = [(s.x, s.y) for s in trajectory.states]
        parts.append(f'<polyline style="{_STYLE["trajectory"]}" points="{_poly_points(coords)}"/>')

    if ego is not None:
        parts.append(f'<circle style="{_STYLE["ego"]}" cx="{ego.x:.3f}" cy="{-ego.y:.3f}" r="1.0"/>')

    parts.append("</svg>")
    return "\n".join(parts)
