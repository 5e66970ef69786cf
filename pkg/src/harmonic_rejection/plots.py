"""Minimal static SVG line charts for trace channels."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
W, H = 720, 320
PAD_L, PAD_R, PAD_T, PAD_B = 70, 20, 30, 40
MAX_POINTS = 2000


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


def line_chart(path: str | Path, t, series: dict[str, np.ndarray], title: str, ylabel: str = ""):
    t = np.asarray(t, dtype=float)
    stride = max(len(t) // MAX_POINTS, 1)
    t = t[::stride]
    data = {k: np.asarray(v, dtype=float)[::stride] for k, v in series.items()}
    finite = np.concatenate([v[np.isfinite(v)] for v in data.values()] + [np.zeros(0)])
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (-1.0, 1.0)
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    t_lo, t_hi = (float(t[0]), float(t[-1])) if len(t) > 1 else (0.0, 1.0)
    if t_hi <= t_lo:
        t_hi = t_lo + 1.0

    def sx(v):
        return PAD_L + (v - t_lo) / (t_hi - t_lo) * (W - PAD_L - PAD_R)

    def sy(v):
        return H - PAD_B - (v - y_lo) / (y_hi - y_lo) * (H - PAD_T - PAD_B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{PAD_L}" y="{PAD_T}" width="{W - PAD_L - PAD_R}" '
        f'height="{H - PAD_T - PAD_B}" fill="none" stroke="#444"/>',
    ]
    for v in _ticks(y_lo, y_hi):
        out.append(f'<text x="{PAD_L - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    for v in _ticks(t_lo, t_hi):
        out.append(f'<text x="{sx(v):.1f}" y="{H - PAD_B + 15}" text-anchor="middle">{v:.3g}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 6}" text-anchor="middle">t, s</text>')
    if ylabel:
        out.append(
            f'<text x="14" y="{H / 2}" transform="rotate(-90 14 {H / 2})" '
            f'text-anchor="middle">{escape(ylabel)}</text>'
        )
    for j, (name, v) in enumerate(data.items()):
        color = COLORS[j % len(COLORS)]
        pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(t, v) if np.isfinite(b))
        if pts:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        out.append(
            f'<text x="{W - PAD_R - 6}" y="{PAD_T + 14 + 14 * j}" text-anchor="end" '
            f'fill="{color}">{escape(name)}</text>'
        )
    out.append("</svg>")
    Path(path).write_text("\n".join(out))


def write_figures(trace, out_dir: str | Path, mode: str) -> list[Path]:
    out_dir = Path(out_dir)
    t = trace["t"]
    paths = []
    p = out_dir / "theta.svg"
    line_chart(
        p, t, {"gradient": trace["theta_hat"], "finite-time": trace["theta_F"]}, "theta estimates"
    )
    paths.append(p)
    if mode == "closed_loop":
        p = out_dir / "output.svg"
        line_chart(p, t, {"y": trace["y"], "delta": trace["delta"]}, "output and disturbance")
        paths.append(p)
        p = out_dir / "control.svg"
        line_chart(p, t, {"u": trace["u"]}, "control signal")
        paths.append(p)
    return paths
