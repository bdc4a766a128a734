"""SVG rendering of cell assignments on the Poincare disk."""
from __future__ import annotations

import colorsys

import numpy as np

GOLDEN = 0.6180339887498949


def palette(i: int) -> str:
    """Deterministic colour for member index ``i``."""
    hue = (i * GOLDEN) % 1.0
    light = 0.55 + 0.15 * ((i // 7) % 2)
    r, g, b = colorsys.hls_to_rgb(hue, light, 0.65)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def _spacing(coords: np.ndarray) -> float:
    u = np.unique(np.round(coords, 12))
    if len(u) < 2:
        return 2.0
    return float(np.min(np.diff(u)))


def render_disk(assignment, h: float = None, size: int = 600, colors=palette, header: list[str] = None) -> str:
    """One filled square per grid query (runs of equal winners merged along
    rows), keyed by winner index, plus the unit circle."""
    q = np.asarray(assignment.queries, dtype=float)
    winners = np.asarray(assignment.winner)
    if h is None:
        h = min(_spacing(q[:, 0]), _spacing(q[:, 1])) if len(q) else 2.0
    scale = size / 2.0

    def sx(x):
        return (x + 1.0) * scale

    def sy(y):
        return (1.0 - y) * scale

    out = []
    for line in header or []:
        out.append(f"<!-- {line.replace('--', '- -')} -->")
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
    )
    out.append(f'<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff"/>')
    if len(q):
        rows = np.round(q[:, 1] / h).astype(np.int64)
        cols = np.round(q[:, 0] / h).astype(np.int64)
        order = np.lexsort((cols, -rows))
        i = 0
        while i < len(order):
            k = order[i]
            j = i
            while (
                j + 1 < len(order)
                and rows[order[j + 1]] == rows[k]
                and cols[order[j + 1]] == cols[order[j]] + 1
                and winners[order[j + 1]] == winners[k]
            ):
                j += 1
            x0 = q[k, 0] - h / 2
            width = (cols[order[j]] - cols[k] + 1) * h
            y0 = q[k, 1] + h / 2
            out.append(
                f'<rect x="{sx(x0):.3f}" y="{sy(y0):.3f}" width="{width * scale:.3f}" '
                f'height="{h * scale:.3f}" fill="{colors(int(winners[k]))}"/>'
            )
            i = j + 1
    out.append(
        f'<circle cx="{scale:.3f}" cy="{scale:.3f}" r="{scale:.3f}" fill="none" stroke="#000000" stroke-width="1.5"/>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
