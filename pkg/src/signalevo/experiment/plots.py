"""Minimal static SVG line and scatter plots for batch artifacts."""

from pathlib import Path

_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]

_W, _H = 480, 320
_ML, _MR, _MT, _MB = 56, 16, 28, 40


def _bounds(values, pad_ratio=0.05):
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    pad = (hi - lo) * pad_ratio
    return lo - pad, hi + pad


def _scale(lo, hi, a, b):
    span = hi - lo
    return lambda v: a + (v - lo) / span * (b - a)


def _axes(parts, sx, sy, xlo, xhi, ylo, yhi, title, xlabel, ylabel):
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" fill="none" stroke="#999"/>')
    parts.append(f'<text x="{_W / 2:.1f}" y="16" text-anchor="middle" font-size="12">{title}</text>')
    parts.append(f'<text x="{_W / 2:.1f}" y="{_H - 6}" text-anchor="middle" font-size="10">{xlabel}</text>')
    parts.append(f'<text x="12" y="{_H / 2:.1f}" text-anchor="middle" font-size="10" transform="rotate(-90 12 {_H / 2:.1f})">{ylabel}</text>')
    for v, anchor in ((xlo, "start"), (xhi, "end")):
        parts.append(f'<text x="{sx(v):.1f}" y="{_H - _MB + 14}" text-anchor="{anchor}" font-size="9">{v:.3g}</text>')
    for v in (ylo, yhi):
        parts.append(f'<text x="{_ML - 4}" y="{sy(v) + 3:.1f}" text-anchor="end" font-size="9">{v:.3g}</text>')


def _render(parts, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = "\n".join(parts)
    path.write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">\n'
        f'<rect width="{_W}" height="{_H}" fill="white"/>\n{body}\n</svg>\n'
    )
    return path


def line_plot(series, path, title="", xlabel="", ylabel="", labels=None):
    """Polyline plot; ``series`` is a list of (xs, ys) pairs."""
    xs_all = [x for xs, _ in series for x in xs]
    ys_all = [y for _, ys in series for y in ys]
    xlo, xhi = _bounds(xs_all)
    ylo, yhi = _bounds(ys_all)
    sx = _scale(xlo, xhi, _ML, _W - _MR)
    sy = _scale(ylo, yhi, _H - _MB, _MT)
    parts = []
    _axes(parts, sx, sy, xlo, xhi, ylo, yhi, title, xlabel, ylabel)
    for k, (xs, ys) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        points = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if labels:
            parts.append(f'<text x="{_W - _MR - 4}" y="{_MT + 14 + 12 * k}" text-anchor="end" font-size="9" fill="{color}">{labels[k]}</text>')
    return _render(parts, path)


def scatter_plot(points, path, title="", xlabel="", ylabel="", labels=None, colors=None):
    """Scatter plot of (x, y) points with optional per-point labels/colors."""
    xlo, xhi = _bounds([p[0] for p in points])
    ylo, yhi = _bounds([p[1] for p in points])
    sx = _scale(xlo, xhi, _ML, _W - _MR)
    sy = _scale(ylo, yhi, _H - _MB, _MT)
    parts = []
    _axes(parts, sx, sy, xlo, xhi, ylo, yhi, title, xlabel, ylabel)
    for k, (x, y) in enumerate(points):
        if colors is not None and colors[k] < 0:
            color = "#aaaaaa"  # noise
        else:
            color = _PALETTE[(colors[k] if colors is not None else 0) % len(_PALETTE)]
        parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3.5" fill="{color}"/>')
        if labels:
            parts.append(f'<text x="{sx(x) + 5:.1f}" y="{sy(y) - 5:.1f}" font-size="9">{labels[k]}</text>')
    return _render(parts, path)
