"""Minimal SVG rendering for ROC curves.

One polyline per curve on a fixed 640x480 canvas, FMR on the x axis and
1 - FNMR on the y axis, with a dashed chance diagonal. Output is plain
well-formed XML, deterministic for identical inputs, and needs no plotting
backend.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

_WIDTH = 640
_HEIGHT = 480
_MARGIN_L = 70
_MARGIN_R = 20
_MARGIN_T = 40
_MARGIN_B = 50


def _x(fmr):
    return _MARGIN_L + fmr * (_WIDTH - _MARGIN_L - _MARGIN_R)


def _y(tmr):
    return _HEIGHT - _MARGIN_B - tmr * (_HEIGHT - _MARGIN_T - _MARGIN_B)


def roc_svg(fmr, fnmr, title) -> str:
    """Render one ROC curve; ``fmr`` and ``fnmr`` are aligned sequences."""
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<title>{escape(str(title))}</title>',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{escape(str(title))}</text>',
    ]
    # axes with 0.2-spaced ticks and a dashed chance diagonal
    x0, y0 = _x(0.0), _y(0.0)
    x1, y1 = _x(1.0), _y(1.0)
    parts.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x1:.1f}" y2="{y0:.1f}" stroke="black"/>')
    parts.append(f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x0:.1f}" y2="{y1:.1f}" stroke="black"/>')
    for i in range(6):
        v = i / 5.0
        xt, yt = _x(v), _y(v)
        parts.append(f'<line x1="{xt:.1f}" y1="{y0:.1f}" x2="{xt:.1f}" y2="{y0 + 5:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{xt:.1f}" y="{y0 + 20:.1f}" text-anchor="middle" font-size="12" '
            f'font-family="sans-serif">{v:.1f}</text>'
        )
        parts.append(f'<line x1="{x0 - 5:.1f}" y1="{yt:.1f}" x2="{x0:.1f}" y2="{yt:.1f}" stroke="black"/>')
        parts.append(
            f'<text x="{x0 - 10:.1f}" y="{yt + 4:.1f}" text-anchor="end" font-size="12" '
            f'font-family="sans-serif">{v:.1f}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{_HEIGHT - 12}" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">FMR</text>'
    )
    parts.append(
        f'<text x="18" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif" transform="rotate(-90 18 {(y0 + y1) / 2:.1f})">1 - FNMR</text>'
    )
    parts.append(
        f'<line x1="{x0:.1f}" y1="{y0:.1f}" x2="{x1:.1f}" y2="{y1:.1f}" '
        f'stroke="gray" stroke-dasharray="6 4"/>'
    )
    points = " ".join(f"{_x(float(f)):.2f},{_y(1.0 - float(m)):.2f}" for f, m in zip(fmr, fnmr))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#1f4e9c" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
