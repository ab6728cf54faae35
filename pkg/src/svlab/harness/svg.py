"""Minimal deterministic SVG charts (fixed float formatting, no timestamps)."""

from __future__ import annotations

from html import escape
from typing import Mapping, Sequence

W, H = 640, 360
MARGIN = (60, 20, 30, 70)  # left, right, top, bottom
PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _frame(title: str, body: list, y_label: str, lo: float, hi: float) -> str:
    left, right, top, bottom = MARGIN
    ph = H - top - bottom
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2:.0f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{H - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{H - bottom}" x2="{W - right}" y2="{H - bottom}" stroke="black"/>',
        f'<text x="14" y="{top + ph / 2:.0f}" font-family="sans-serif" font-size="11" '
        f'transform="rotate(-90 14 {top + ph / 2:.0f})" text-anchor="middle">{escape(y_label)}</text>',
    ]
    for i in range(5):
        v = lo + (hi - lo) * i / 4
        y = H - bottom - ph * i / 4
        out.append(f'<text x="{left - 6}" y="{_f(y + 4)}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="10">{v:.3g}</text>')
    return "\n".join(out + body + ["</svg>", ""])


def _range(values: Sequence[float]) -> tuple:
    lo = min(0.0, min(values)) if values else 0.0
    hi = max(values) if values else 1.0
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def bar_chart(title: str, groups: Sequence[str], series: Mapping[str, Sequence[float]], y_label: str = "") -> str:
    """Grouped bars: one group per entry of ``groups``, one bar per series."""
    left, right, top, bottom = MARGIN
    pw, ph = W - left - right, H - top - bottom
    names = list(series)
    values = [v for s in names for v in series[s]]
    lo, hi = _range(values)
    gw = pw / max(1, len(groups))
    bw = gw * 0.8 / max(1, len(names))
    body = []

    def y_of(v):
        return H - bottom - ph * (v - lo) / (hi - lo)

    for gi, g in enumerate(groups):
        x0 = left + gi * gw + gw * 0.1
        for si, s in enumerate(names):
            v = series[s][gi]
            y, y0 = y_of(v), y_of(0.0)
            body.append(f'<rect x="{_f(x0 + si * bw)}" y="{_f(min(y, y0))}" width="{_f(bw)}" '
                        f'height="{_f(abs(y0 - y))}" fill="{PALETTE[si % len(PALETTE)]}"/>')
        body.append(f'<text x="{_f(x0 + gw * 0.4)}" y="{H - bottom + 14}" text-anchor="middle" '
                    f'font-family="sans-serif" font-size="10">{escape(g)}</text>')
    for si, s in enumerate(names):
        y = H - 30 + 12 * (si // 4)
        x = left + (si % 4) * 140
        body.append(f'<rect x="{x}" y="{y}" width="10" height="10" fill="{PALETTE[si % len(PALETTE)]}"/>')
        body.append(f'<text x="{x + 14}" y="{y + 9}" font-family="sans-serif" font-size="10">{escape(s)}</text>')
    return _frame(title, body, y_label, lo, hi)


def line_chart(title: str, xs: Sequence[float], series: Mapping[str, Sequence[float]], y_label: str = "",
               x_label: str = "") -> str:
    left, right, top, bottom = MARGIN
    pw, ph = W - left - right, H - top - bottom
    values = [v for s in series.values() for v in s]
    lo, hi = _range(values)
    xlo, xhi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if xhi <= xlo:
        xhi = xlo + 1.0
    body = []

    def pt(x, y):
        return left + pw * (x - xlo) / (xhi - xlo), H - bottom - ph * (y - lo) / (hi - lo)

    for si, (name, ys) in enumerate(series.items()):
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in (pt(x, y) for x, y in zip(xs, ys)))
        color = PALETTE[si % len(PALETTE)]
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        lx = left + (si % 4) * 140
        ly = H - 30 + 12 * (si // 4)
        body.append(f'<rect x="{lx}" y="{ly}" width="10" height="10" fill="{color}"/>')
        body.append(f'<text x="{lx + 14}" y="{ly + 9}" font-family="sans-serif" font-size="10">{escape(name)}</text>')
    for x in xs:
        px, _ = pt(x, lo)
        body.append(f'<text x="{_f(px)}" y="{H - bottom + 14}" text-anchor="middle" font-family="sans-serif" '
                    f'font-size="10">{x:.3g}</text>')
    if x_label:
        body.append(f'<text x="{left + pw / 2:.0f}" y="{H - bottom + 28}" text-anchor="middle" '
                    f'font-family="sans-serif" font-size="11">{escape(x_label)}</text>')
    return _frame(title, body, y_label, lo, hi)


def scatter_chart(title: str, points: Sequence[tuple], x_label: str = "", y_label: str = "") -> str:
    """``points`` are ``(x, y, label)``."""
    left, right, top, bottom = MARGIN
    pw, ph = W - left - right, H - top - bottom
    ys = [p[1] for p in points]
    xs = [p[0] for p in points]
    lo, hi = _range(ys)
    xlo, xhi = _range(xs)
    body = []
    for i, (x, y, label) in enumerate(points):
        px = left + pw * (x - xlo) / (xhi - xlo)
        py = H - bottom - ph * (y - lo) / (hi - lo)
        body.append(f'<circle cx="{_f(px)}" cy="{_f(py)}" r="5" fill="{PALETTE[i % len(PALETTE)]}"/>')
        body.append(f'<text x="{_f(px + 7)}" y="{_f(py - 7)}" font-family="sans-serif" font-size="10">{escape(label)}</text>')
    body.append(f'<text x="{left + pw / 2:.0f}" y="{H - bottom + 28}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="11">{escape(x_label)} [{xlo:.3g}, {xhi:.3g}]</text>')
    return _frame(title, body, y_label, lo, hi)


def heatmap(title: str, grid: Sequence[Sequence[float]], row_label: str = "layer", col_label: str = "head") -> str:
    left, right, top, bottom = MARGIN
    pw, ph = W - left - right, H - top - bottom
    rows, cols = len(grid), len(grid[0]) if grid else 0
    flat = [v for r in grid for v in r]
    m = max((abs(v) for v in flat), default=1.0) or 1.0
    cw, ch = pw / max(1, cols), ph / max(1, rows)
    body = []
    for i, r in enumerate(grid):
        for j, v in enumerate(r):
            a = abs(v) / m
            color = f"rgb({255 - int(a * 200)},{255 - int(a * 200)},255)" if v >= 0 else \
                f"rgb(255,{255 - int(a * 200)},{255 - int(a * 200)})"
            body.append(f'<rect x="{_f(left + j * cw)}" y="{_f(top + i * ch)}" width="{_f(cw)}" height="{_f(ch)}" '
                        f'fill="{color}" stroke="white"/>')
    body.append(f'<text x="{left + pw / 2:.0f}" y="{H - bottom + 28}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="11">{escape(col_label)} (max |value| {m:.3g})</text>')
    return _frame(title, body, row_label, 0.0, float(rows))
