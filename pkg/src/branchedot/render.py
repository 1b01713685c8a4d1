"""Static SVG rendering of a solved network: sources red, sinks blue, BPs black, widths ~ flow^alpha."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RenderStyle:
    size: int = 600
    margin: float = 0.08  # fraction of the drawing
    source_color: str = "#d62728"
    sink_color: str = "#1f77b4"
    bp_color: str = "#222222"
    edge_color: str = "#444444"
    max_disk_radius: float = 10.0
    max_stroke: float = 8.0
    min_stroke: float = 0.5
    bp_radius: float = 2.0


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def render_svg(solution, style: RenderStyle = RenderStyle()) -> str:
    """SVG text for a Solution. Coordinates beyond the first two axes are dropped with a warning."""
    problem = solution.problem
    coords = solution.coords
    if problem.dim > 2:
        warnings.warn(f"rendering a {problem.dim}-dimensional solution on its first two axes", stacklevel=2)
        coords = coords[:, :2]
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    inner = style.size * (1.0 - 2.0 * style.margin)
    pad = style.size * style.margin

    def to_px(p):
        # y axis points up in the drawing
        return pad + (p[0] - lo[0]) / span * inner, style.size - pad - (p[1] - lo[1]) / span * inner

    alpha = problem.alpha
    flows = np.abs(solution.flows)
    fmax = float(flows.max()) if len(flows) else 1.0
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.size}" height="{style.size}" '
        f'viewBox="0 0 {style.size} {style.size}">',
        f'<rect width="{style.size}" height="{style.size}" fill="white"/>',
        '<g id="edges">',
    ]
    for (u, v), f in zip(solution.topology.edges, flows):
        x1, y1 = to_px(coords[u])
        x2, y2 = to_px(coords[v])
        w = style.max_stroke * (f / fmax) ** alpha if fmax > 0 else style.min_stroke
        w = max(w, style.min_stroke)
        lines.append(f'<line class="edge" x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
                     f'stroke="{style.edge_color}" stroke-width="{_fmt(w)}" stroke-linecap="round"/>')
    lines.append("</g>")
    lines.append('<g id="nodes">')
    mu = problem.mu
    mmax = float(np.abs(mu).max())
    for i, m in enumerate(mu):
        cx, cy = to_px(coords[i])
        r = style.max_disk_radius * math.sqrt(abs(m) / mmax)
        color = style.source_color if m > 0 else style.sink_color
        kind = "source" if m > 0 else "sink"
        lines.append(f'<circle class="{kind}" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="{color}"/>')
    for b in range(problem.n, len(coords)):
        cx, cy = to_px(coords[b])
        lines.append(f'<circle class="bp" cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(style.bp_radius)}" '
                     f'fill="{style.bp_color}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
