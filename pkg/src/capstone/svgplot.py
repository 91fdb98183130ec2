"""Minimal self-contained SVG plots: line plots, knee curves, bar charts.

No external assets or fonts beyond generic `sans-serif`; every data series is
one `<path>` element so plots stay scriptable and diffable.
"""

import math

PALETTE = ("#1f6f8b", "#d1495b", "#66a182", "#8d6a9f", "#edae49", "#30323d")


def _fmt(x):
    return f"{x:.2f}".rstrip("0").rstrip(".")


class _Canvas:
    def __init__(self, width, height, margin=(55, 15, 35, 45)):
        self.width = width
        self.height = height
        self.ml, self.mr, self.mt, self.mb = margin
        self.parts = []

    def plot_box(self):
        return (self.ml, self.mt, self.width - self.mr, self.height - self.mb)

    def add(self, element):
        self.parts.append(element)

    def text(self, x, y, s, size=12, anchor="middle", rotate=None):
        tr = f' transform="rotate(-90 {_fmt(x)} {_fmt(y)})"' if rotate else ""
        self.add(f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="sans-serif" '
                 f'font-size="{size}" text-anchor="{anchor}"{tr}>{s}</text>')

    def render(self):
        body = "\n".join(self.parts)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
                f'<rect width="{self.width}" height="{self.height}" fill="white"/>\n'
                f"{body}\n</svg>\n")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = step * math.ceil(lo / step)
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(t)
        t += step
    return ticks


def _axes(cv, x0, x1, y0, y1, xlabel, ylabel, title):
    left, top, right, bottom = cv.plot_box()
    cv.add(f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" '
           'stroke="black" stroke-width="1"/>')
    cv.add(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" '
           'stroke="black" stroke-width="1"/>')

    def sx(x):
        return left + (x - x0) / (x1 - x0 or 1.0) * (right - left)

    def sy(y):
        return bottom - (y - y0) / (y1 - y0 or 1.0) * (bottom - top)

    for t in _ticks(x0, x1):
        cv.add(f'<line x1="{_fmt(sx(t))}" y1="{bottom}" x2="{_fmt(sx(t))}" '
               f'y2="{bottom + 4}" stroke="black"/>')
        cv.text(sx(t), bottom + 16, _fmt(t), size=10)
    for t in _ticks(y0, y1):
        cv.add(f'<line x1="{left - 4}" y1="{_fmt(sy(t))}" x2="{left}" '
               f'y2="{_fmt(sy(t))}" stroke="black"/>')
        cv.text(left - 7, sy(t) + 3, _fmt(t), size=10, anchor="end")
    cv.text((left + right) / 2, cv.height - 8, xlabel)
    cv.text(14, (top + bottom) / 2, ylabel, rotate=True)
    if title:
        cv.text((left + right) / 2, top - 4, title, size=13)
    return sx, sy


def line_plot(series, path, title="", xlabel="", ylabel="", width=860, height=420):
    """Polyline plot; `series` is a list of (xs, ys, label)."""
    if not series:
        raise ValueError("nothing to plot")
    xs_all = [x for xs, _, _ in series for x in xs]
    ys_all = [y for _, ys, _ in series for y in ys]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if y0 == y1:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 0.04 * (y1 - y0)
    cv = _Canvas(width, height)
    sx, sy = _axes(cv, x0, x1, y0 - pad, y1 + pad, xlabel, ylabel, title)
    for si, (xs, ys, label) in enumerate(series):
        color = PALETTE[si % len(PALETTE)]
        pts = " L ".join(f"{_fmt(sx(x))} {_fmt(sy(y))}" for x, y in zip(xs, ys))
        cv.add(f'<path d="M {pts}" fill="none" stroke="{color}" stroke-width="1.4"/>')
        if label:
            lx = cv.plot_box()[2] - 8
            cv.text(lx, cv.plot_box()[1] + 14 + 14 * si, label, size=11, anchor="end")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cv.render())


def bar_chart(categories, series, path, title="", ylabel="", width=860, height=420):
    """Grouped bars. `categories`: x labels; `series`: list of (label, values)."""
    if not categories or not series:
        raise ValueError("nothing to plot")
    y1 = max(max(vals) for _, vals in series)
    cv = _Canvas(width, height)
    left, top, right, bottom = cv.plot_box()
    sx, sy = _axes(cv, 0, len(categories), 0.0, y1 * 1.05 or 1.0, "", ylabel, title)
    group_w = (right - left) / len(categories)
    bar_w = group_w * 0.8 / len(series)
    for si, (label, vals) in enumerate(series):
        color = PALETTE[si % len(PALETTE)]
        for ci, v in enumerate(vals):
            x = left + ci * group_w + group_w * 0.1 + si * bar_w
            y = sy(v)
            cv.add(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bar_w)}" '
                   f'height="{_fmt(bottom - y)}" fill="{color}"/>')
        cv.text(right - 8, top + 14 + 14 * si, label, size=11, anchor="end")
    for ci, cat in enumerate(categories):
        cv.text(left + (ci + 0.5) * group_w, bottom + 16, str(cat), size=10)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cv.render())
