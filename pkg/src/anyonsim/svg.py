"""Minimal self-contained SVG output for parity scans and density matrices."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _doc(width: int, height: int, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">')
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>\n"])


def parity_plot(series, title: str = "") -> str:
    """``series``: list of (label, gammas, values, errors, fit_gammas, fit_values)."""
    w, h, m = 640, 400, 60
    x0, x1, y0, y1 = m, w - 20, h - m, 30

    def px(g):
        return x0 + (x1 - x0) * g / np.pi

    def py(v):
        return y0 + (y1 - y0) * (v + 1.1) / 2.2

    body = [f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
            f'<line x1="{x0}" y1="{_fmt(py(0))}" x2="{x1}" y2="{_fmt(py(0))}" stroke="#bbb" stroke-dasharray="4 3"/>']
    for frac, lab in ((0, "0"), (0.25, "π/4"), (0.5, "π/2"), (0.75, "3π/4"), (1, "π")):
        x = x0 + (x1 - x0) * frac
        body.append(f'<text x="{_fmt(x)}" y="{y0 + 18}" text-anchor="middle">{lab}</text>')
    for v in (-1, 0, 1):
        body.append(f'<text x="{x0 - 8}" y="{_fmt(py(v) + 4)}" text-anchor="end">{v}</text>')
    body.append(f'<text x="{(x0 + x1) / 2}" y="{h - 12}" text-anchor="middle">γ (rad)</text>')
    body.append(f'<text x="16" y="{(y0 + y1) / 2}" transform="rotate(-90 16 {(y0 + y1) / 2})" '
                f'text-anchor="middle">⟨P(γ)⟩</text>')
    if title:
        body.append(f'<text x="{w / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    for k, (label, g, v, e, fg, fv) in enumerate(series):
        col = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(fg, fv))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        for a, b, s in zip(g, v, e):
            if s > 0:
                body.append(f'<line x1="{_fmt(px(a))}" y1="{_fmt(py(b - s))}" x2="{_fmt(px(a))}" '
                            f'y2="{_fmt(py(b + s))}" stroke="{col}"/>')
            body.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="3" fill="{col}"/>')
        ly = y1 + 14 * k
        body.append(f'<rect x="{x1 - 150}" y="{ly - 9}" width="10" height="10" fill="{col}"/>')
        body.append(f'<text x="{x1 - 135}" y="{ly}">{escape(label)}</text>')
    return _doc(w, h, body)


def matrix_plot(matrix: np.ndarray, title: str = "", labels=None) -> str:
    """Hinton-style chart: square area tracks |entry|, colour tracks sign."""
    m = np.asarray(matrix, dtype=float)
    d = m.shape[0]
    cell = 28
    off = 50
    w = off + d * cell + 20
    h = off + d * cell + 30
    scale = max(float(np.abs(m).max()), 1e-12)
    body = []
    if title:
        body.append(f'<text x="{w / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    labels = labels or [format(i, f"0{max(1, int(np.log2(d)))}b") for i in range(d)]
    for i in range(d):
        body.append(f'<text x="{off - 4}" y="{off + i * cell + cell / 2 + 4}" text-anchor="end" '
                    f'font-size="9">{labels[i]}</text>')
        body.append(f'<text x="{off + i * cell + cell / 2}" y="{off - 6}" text-anchor="middle" '
                    f'font-size="9">{labels[i]}</text>')
        for j in range(d):
            v = m[i, j]
            side = (cell - 2) * np.sqrt(abs(v) / scale)
            cx, cy = off + j * cell + cell / 2, off + i * cell + cell / 2
            body.append(f'<rect x="{off + j * cell}" y="{off + i * cell}" width="{cell}" height="{cell}" '
                        f'fill="none" stroke="#eee"/>')
            if side > 0.2:
                col = PALETTE[0] if v > 0 else PALETTE[1]
                body.append(f'<rect x="{_fmt(cx - side / 2)}" y="{_fmt(cy - side / 2)}" '
                            f'width="{_fmt(side)}" height="{_fmt(side)}" fill="{col}"/>')
    body.append(f'<text x="{off}" y="{h - 8}">max |entry| = {scale:.3f}; blue positive, red negative</text>')
    return _doc(w, h, body)
