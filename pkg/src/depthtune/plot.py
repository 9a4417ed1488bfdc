"""Tiny dependency-free SVG line charts for the report CSVs."""

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(v):
    return f"{v:.2f}"


def line_chart_svg(series, title="", xlabel="", ylabel="", width=640, height=400):
    """Render ``{label: (xs, ys)}`` as an SVG document string."""
    pad_l, pad_r, pad_t, pad_b = 60, 120, 30, 40
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys)]
    if not pts:
        raise ValueError("nothing to plot")
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def sx(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return pad_t + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<text x="{pad_l + pw / 2}" y="{height - 8}" text-anchor="middle" font-size="12">'
           f'{escape(xlabel)}</text>',
           f'<text x="14" y="{pad_t + ph / 2}" font-size="12" text-anchor="middle" '
           f'transform="rotate(-90 14 {pad_t + ph / 2})">{escape(ylabel)}</text>']
    for val, anchor in ((y0, sy(y0)), (y1, sy(y1))):
        out.append(f'<text x="{pad_l - 4}" y="{_fmt(anchor + 4)}" text-anchor="end" '
                   f'font-size="10">{val:.4g}</text>')
    for val in (x0, x1):
        out.append(f'<text x="{_fmt(sx(val))}" y="{pad_t + ph + 14}" text-anchor="middle" '
                   f'font-size="10">{val:.4g}</text>')
    for i, (label, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = pad_t + 12 + 14 * i
        out.append(f'<text x="{width - pad_r + 8}" y="{ly}" font-size="10" fill="{color}">'
                   f'{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
