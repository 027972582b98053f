"""Standalone SVG line charts that carry their data in a <metadata> block."""

import json
from html import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT, MARGIN = 480, 360, 50


def _fmt(v):
    return f"{v:.2f}"


def line_chart(series, title, x_label, y_label, x_range=None, y_range=None, diagonal=False):
    """Render ``series`` (list of ``(name, xs, ys)``) as an SVG document string."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    x0, x1 = x_range or (min(xs_all, default=0.0), max(xs_all, default=1.0))
    y0, y1 = y_range or (min(ys_all, default=0.0), max(ys_all, default=1.0))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * pw

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph

    data = {name: {"x": list(map(float, xs)), "y": list(map(float, ys))} for name, xs, ys in series}
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<metadata>{escape(json.dumps(data, sort_keys=True))}</metadata>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{MARGIN / 2}" text-anchor="middle" font-size="14">'
        f"{escape(title)}</text>",
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">'
        f"{escape(x_label)}</text>",
        f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {HEIGHT / 2})">{escape(y_label)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        out.append(f'<text x="{_fmt(px(xv))}" y="{HEIGHT - MARGIN + 15}" text-anchor="middle" '
                   f'font-size="10">{xv:.3g}</text>')
        out.append(f'<text x="{MARGIN - 5}" y="{_fmt(py(yv) + 3)}" text-anchor="end" '
                   f'font-size="10">{yv:.3g}</text>')
    if diagonal:
        out.append(f'<line x1="{_fmt(px(x0))}" y1="{_fmt(py(y0))}" x2="{_fmt(px(x1))}" '
                   f'y2="{_fmt(py(y1))}" stroke="gray" stroke-dasharray="4 4"/>')
    for k, (name, xs, ys) in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN + 15 + 14 * k
        out.append(f'<text x="{WIDTH - MARGIN - 5}" y="{ly}" text-anchor="end" font-size="10" '
                   f'fill="{colour}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def roc_svg(curves, class_names=None, title="ROC (one-vs-rest)"):
    series = []
    for c, curve in enumerate(curves):
        if curve is None:
            continue
        name = class_names[c] if class_names else f"class {c}"
        series.append((f"{name} (AUC {curve.auc:.3f})", curve.fpr.tolist(), curve.tpr.tolist()))
    return line_chart(series, title, "false positive rate", "true positive rate",
                      (0.0, 1.0), (0.0, 1.0), diagonal=True)


def history_svg(history, metric="loss", title=None):
    """Train/validation curves per epoch; ``metric`` is "loss" or "acc"."""
    epochs = [row["epoch"] for row in history]
    series = []
    for split in ("train", "val"):
        ys = [row[f"{split}_{metric}"] for row in history]
        if all(y == y for y in ys):      # drop all-NaN validation curves
            series.append((split, epochs, ys))
    y_range = (0.0, 1.0) if metric == "acc" else None
    return line_chart(series, title or f"{metric} per epoch", "epoch", metric, y_range=y_range)
