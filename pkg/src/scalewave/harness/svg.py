"""Standalone SVG regime diagram drawn with plain rects, paths and text."""

from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

from scalewave.exponents import SystemCoefficients, boundary_q_of_p, derive
from scalewave.harness.outputs import TOOL, config_line

WIDTH, HEIGHT = 640, 560
LEFT, RIGHT, TOP, BOTTOM = 70, 190, 30, 60

COLORS = {
    "BlowUp": "#e4785c",
    "GlobalSupercriticalBoth": "#5b8fd6",
    "GlobalLossOnU": "#59b5a7",
    "GlobalLossOnV": "#93c56b",
    "Undetermined": "#c9c9c9",
    None: "#ffffff",
}


def _f(x: float) -> str:
    return f"{x:.3f}"


def envelope_q(p: float, n: int, a1: float, a2: float) -> float:
    """Largest ``q`` with ``max{F1, F2} >= 0`` at this ``p`` (``inf`` if every ``q`` qualifies)."""
    q1 = boundary_q_of_p(p, n, a1)
    q1 = math.inf if q1 is None else q1
    k2 = (n + a2 - 1) / 2
    if k2 <= 0 or k2 * p <= 1:
        q2 = math.inf
    else:
        q2 = (1 + k2) / (k2 * p - 1)
    return max(q1, q2)


def _extent(values: Sequence[float]) -> tuple[float, float, float]:
    vals = sorted(set(values))
    if not vals:
        return 1.0, 6.0, 0.0
    if len(vals) == 1:
        half = 0.25
    else:
        half = 0.5 * min(b - a for a, b in zip(vals[:-1], vals[1:]))
    return vals[0] - half, vals[-1] + half, half


def regime_svg(cells, p_values: Sequence[float], q_values: Sequence[float], coeffs: SystemCoefficients,
               config: Optional[dict] = None, title: str = "Regime diagram") -> str:
    p_lo, p_hi, hp = _extent(p_values)
    q_lo, q_hi, hq = _extent(q_values)
    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def X(p):
        return LEFT + (p - p_lo) / (p_hi - p_lo) * pw

    def Y(q):
        return TOP + ph - (q - q_lo) / (q_hi - q_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f"<title>{escape(title)}</title>",
        f"<desc>{escape(TOOL)}; config: {escape(config_line(config or {}))}</desc>",
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        f'<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath>',
    ]

    out.append('<g id="cells" shape-rendering="crispEdges">')
    for c in cells:
        kind = c.verdict.kind.value if c.verdict is not None else None
        x0, x1 = X(c.p - hp), X(c.p + hp)
        y0, y1 = Y(c.q + hq), Y(c.q - hq)
        if c.agreement is False:
            stroke = ' stroke="#b0006e" stroke-width="2.5"'
        elif c.agreement is True:
            stroke = ' stroke="#202020" stroke-width="0.8"'
        else:
            stroke = ""
        out.append(
            f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(x1 - x0)}" height="{_f(y1 - y0)}" '
            f'fill="{COLORS.get(kind, "#ffffff")}"{stroke}/>'
        )
        if c.conjecture:
            r = max(1.0, min(x1 - x0, y1 - y0) * 0.12)
            out.append(f'<circle cx="{_f(0.5 * (x0 + x1))}" cy="{_f(0.5 * (y0 + y1))}" r="{_f(r)}" fill="#303030"/>')
    out.append("</g>")

    d = derive(coeffs)
    out.append('<g id="curves" clip-path="url(#plot)" fill="none">')
    if d.alpha1 is not None and d.alpha2 is not None:
        a1, a2 = float(d.alpha1), float(d.alpha2)
        pts = []
        steps = 400
        for i in range(steps + 1):
            p = p_lo + (p_hi - p_lo) * i / steps
            if p <= 1:
                continue
            q = envelope_q(p, coeffs.n, a1, a2)
            q = min(q, q_hi + (q_hi - q_lo))
            pts.append(f"{_f(X(p))},{_f(Y(q))}")
        if pts:
            out.append(f'<polyline points="{" ".join(pts)}" stroke="#000000" stroke-width="2"/>')
        if d.p_tilde is not None and p_lo <= float(d.p_tilde) <= p_hi:
            x = X(float(d.p_tilde))
            out.append(f'<line x1="{_f(x)}" y1="{TOP}" x2="{_f(x)}" y2="{TOP + ph}" stroke="#000000" stroke-dasharray="6,4"/>')
        if d.q_tilde is not None and q_lo <= float(d.q_tilde) <= q_hi:
            y = Y(float(d.q_tilde))
            out.append(f'<line x1="{LEFT}" y1="{_f(y)}" x2="{LEFT + pw}" y2="{_f(y)}" stroke="#000000" stroke-dasharray="2,3"/>')
    out.append("</g>")

    # axes and ticks
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000000"/>')
    for i in range(6):
        p = p_lo + (p_hi - p_lo) * i / 5
        q = q_lo + (q_hi - q_lo) * i / 5
        out.append(f'<text x="{_f(X(p))}" y="{TOP + ph + 16}" text-anchor="middle">{p:.3g}</text>')
        out.append(f'<text x="{LEFT - 6}" y="{_f(Y(q) + 4)}" text-anchor="end">{q:.3g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 20}" text-anchor="middle" font-size="13">p</text>')
    out.append(f'<text x="20" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-size="13">q</text>')

    # legend
    lx, ly = LEFT + pw + 15, TOP + 5
    items = [(COLORS[k], k) for k in COLORS if k is not None]
    for i, (color, label) in enumerate(items):
        y = ly + 18 * i
        out.append(f'<rect x="{lx}" y="{y}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text x="{lx + 18}" y="{y + 10}">{escape(label)}</text>')
    y = ly + 18 * len(items) + 8
    extra = [
        ('<line x1="{x}" y1="{y}" x2="{x2}" y2="{y}" stroke="#000000" stroke-width="2"/>', "max{F1,F2} = 0"),
        ('<line x1="{x}" y1="{y}" x2="{x2}" y2="{y}" stroke="#000000" stroke-dasharray="6,4"/>', "p = p~"),
        ('<line x1="{x}" y1="{y}" x2="{x2}" y2="{y}" stroke="#000000" stroke-dasharray="2,3"/>', "q = q~"),
        ('<circle cx="{xc}" cy="{y}" r="3" fill="#303030"/>', "CONJECTURE (Strauss-type)"),
        ('<rect x="{x}" y="{yr}" width="12" height="12" fill="none" stroke="#b0006e" stroke-width="2.5"/>', "disagreement"),
    ]
    for i, (tmpl, label) in enumerate(extra):
        yy = y + 18 * i + 6
        out.append(tmpl.format(x=lx, x2=lx + 12, xc=lx + 6, y=yy, yr=yy - 6))
        out.append(f'<text x="{lx + 18}" y="{yy + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
