"""Standalone SVG semi-log convergence plots (no plotting library needed).

Each plotted series is a ``<polyline class="series">`` whose ``data-x`` and
``data-log10y`` attributes carry the unscaled coordinates, so plots can be
checked numerically after the fact.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 36, 50


def _fmt(v: float) -> str:
    return repr(float(v))


def emit_semilog_svg(
    traj,
    rate_card,
    path,
    log_slope: Optional[float] = None,
    anchor_index: Optional[float] = None,
    title: Optional[str] = None,
) -> Path:
    """Write step norm vs index on a log scale, plus the theoretical rate line.

    The reference line passes through the sample at ``anchor_index`` (the
    first point of the rate-fit window, by default the midpoint sample) with
    slope ``log_slope`` in natural-log units per index step, defaulting to
    ``log(rate_card.rho_opt)``.
    """
    samples = [s for s in traj.samples if s.step_norm > 0.0]
    if not samples:
        raise ValueError("cannot plot an empty trajectory")
    if log_slope is None:
        log_slope = math.log(rate_card.rho_opt)
    path = Path(path)
    if not path.parent.exists():
        raise OSError(f"directory does not exist: {path.parent}")

    xs = np.array([s.index for s in samples], dtype=float)
    ly = np.log10([s.step_norm for s in samples])
    if anchor_index is None:
        anchor_index = xs[len(xs) // 2]
    k = int(np.argmin(np.abs(xs - anchor_index)))
    x_anchor, y_anchor = xs[k], ly[k]
    ref_x = np.array([x_anchor, xs[-1]])
    ref_y = y_anchor + (ref_x - x_anchor) * log_slope / math.log(10.0)

    x_lo, x_hi = float(xs[0]), float(xs[-1])
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    y_lo = math.floor(min(ly.min(), ref_y.min()))
    y_hi = math.ceil(max(ly.max(), ref_y.max()))
    if y_hi == y_lo:
        y_hi += 1
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return MARGIN_T + (y_hi - y) / (y_hi - y_lo) * ph

    def polyline(name, x, y, style):
        pts = " ".join(f"{px(a):.3f},{py(b):.3f}" for a, b in zip(x, y))
        return (
            f'<polyline class="series" data-series="{name}" fill="none" {style} points="{pts}" '
            f'data-x="{" ".join(_fmt(a) for a in x)}" data-log10y="{" ".join(_fmt(b) for b in y)}"/>'
        )

    xlabel = "t" if getattr(traj, "kind", "discrete") == "flow" else "n"
    ylabel = "|x'(t)|" if xlabel == "t" else "|x^{n+1} - x^n|"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" data-xrange="{_fmt(x_lo)} {_fmt(x_hi)}" data-log10yrange="{y_lo} {y_hi}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for d in range(y_lo, y_hi + 1):
        yy = py(d)
        out.append(f'<line x1="{MARGIN_L}" y1="{yy:.3f}" x2="{MARGIN_L + pw}" y2="{yy:.3f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{yy + 4:.3f}" font-size="11" text-anchor="end">1e{d}</text>')
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        out.append(
            f'<text x="{px(xv):.3f}" y="{MARGIN_T + ph + 16}" font-size="11" text-anchor="middle">{xv:.4g}</text>'
        )
    out.append(f'<text x="{MARGIN_L + pw / 2}" y="{HEIGHT - 10}" font-size="13" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="16" y="{MARGIN_T + ph / 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_T + ph / 2})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
    out.append(polyline("observed", xs, ly, 'stroke="blue" stroke-dasharray="6,4"'))
    out.append(polyline("theory", ref_x, ref_y, 'stroke="red" stroke-width="1.5"'))
    lx, ly0 = WIDTH - MARGIN_R - 190, MARGIN_T + 14
    out.append(f'<line x1="{lx}" y1="{ly0}" x2="{lx + 30}" y2="{ly0}" stroke="blue" stroke-dasharray="6,4"/>')
    out.append(f'<text x="{lx + 36}" y="{ly0 + 4}" font-size="12">observed</text>')
    out.append(f'<line x1="{lx}" y1="{ly0 + 18}" x2="{lx + 30}" y2="{ly0 + 18}" stroke="red"/>')
    rate_label = f"theory, rho = {math.exp(log_slope):.6f}" if xlabel == "n" else f"theory, rate {-log_slope:.6f}"
    out.append(f'<text x="{lx + 36}" y="{ly0 + 22}" font-size="12">{escape(rate_label)}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path
