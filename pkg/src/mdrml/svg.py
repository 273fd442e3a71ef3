"""Minimal standalone SVG charts: ranking curves and signed bar charts."""
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 80, 40, 60, 80
POSITIVE = "#2ca02c"
NEGATIVE = "#d62728"
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def plot_xy(x, y):
    """Map unit-square data coordinates to the plot area."""
    px = LEFT + x * (WIDTH - LEFT - RIGHT)
    py = HEIGHT - BOTTOM - y * (HEIGHT - TOP - BOTTOM)
    return px, py


def _num(v):
    return f"{v:.2f}"


def _doc(body, title):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif">\n'
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
        f'<text x="{WIDTH / 2}" y="{TOP / 2 + 6}" text-anchor="middle" font-size="18">'
        f"{escape(title)}</text>\n" + "".join(body) + "</svg>\n"
    )


def _axes(xlabel, ylabel):
    out = []
    x0, y0 = plot_xy(0, 0)
    x1, y1 = plot_xy(1, 1)
    out.append(f'<rect x="{_num(x0)}" y="{_num(y1)}" width="{_num(x1 - x0)}" '
               f'height="{_num(y0 - y1)}" fill="none" stroke="black"/>\n')
    for i in range(6):
        t = i / 5
        px, _ = plot_xy(t, 0)
        _, py = plot_xy(0, t)
        out.append(f'<line x1="{_num(px)}" y1="{_num(y0)}" x2="{_num(px)}" y2="{_num(y0 + 5)}" stroke="black"/>'
                   f'<text x="{_num(px)}" y="{_num(y0 + 20)}" text-anchor="middle" font-size="12">{t:.1f}</text>\n')
        out.append(f'<line x1="{_num(x0 - 5)}" y1="{_num(py)}" x2="{_num(x0)}" y2="{_num(py)}" stroke="black"/>'
                   f'<text x="{_num(x0 - 10)}" y="{_num(py + 4)}" text-anchor="end" font-size="12">{t:.1f}</text>\n')
    out.append(f'<text x="{_num((x0 + x1) / 2)}" y="{HEIGHT - 30}" text-anchor="middle" font-size="14">'
               f"{escape(xlabel)}</text>\n")
    out.append(f'<text x="20" y="{_num((y0 + y1) / 2)}" text-anchor="middle" font-size="14" '
               f'transform="rotate(-90 20 {_num((y0 + y1) / 2)})">{escape(ylabel)}</text>\n')
    return out


def curve_chart(curves, title, xlabel, ylabel, diagonal=False):
    """Line chart of one or more curves.

    ``curves`` is a list of ``(label, points)`` with points in the unit square.
    """
    body = _axes(xlabel, ylabel)
    if diagonal:
        (ax, ay), (bx, by) = plot_xy(0, 0), plot_xy(1, 1)
        body.append(f'<line x1="{_num(ax)}" y1="{_num(ay)}" x2="{_num(bx)}" y2="{_num(by)}" '
                    f'stroke="grey" stroke-dasharray="6,4"/>\n')
    for i, (label, points) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_num(px)},{_num(py)}" for px, py in (plot_xy(x, y) for x, y in points))
        body.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>\n')
        lx, ly = WIDTH - RIGHT - 260, TOP + 20 + 20 * i
        body.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="3"/>'
                    f'<text x="{lx + 30}" y="{ly + 4}" font-size="13">{escape(label)}</text>\n')
    return _doc(body, title)


def bar_chart(entries, title):
    """Horizontal signed bars; ``entries`` is a list of ``(label, value)`` drawn top to bottom."""
    body = []
    n = max(len(entries), 1)
    span = max((abs(v) for _, v in entries), default=1.0) or 1.0
    label_w = 300
    x_zero = label_w + (WIDTH - label_w - RIGHT) / 2
    half = (WIDTH - label_w - RIGHT) / 2 - 10
    row_h = (HEIGHT - TOP - BOTTOM) / n
    body.append(f'<line x1="{_num(x_zero)}" y1="{TOP}" x2="{_num(x_zero)}" y2="{HEIGHT - BOTTOM}" stroke="black"/>\n')
    for i, (label, value) in enumerate(entries):
        y = TOP + i * row_h + row_h * 0.15
        h = row_h * 0.7
        length = abs(value) / span * half
        x = x_zero if value >= 0 else x_zero - length
        color = POSITIVE if value >= 0 else NEGATIVE
        body.append(f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(length)}" height="{_num(h)}" fill="{color}"/>'
                    f'<text x="{label_w - 10}" y="{_num(y + h / 2 + 4)}" text-anchor="end" font-size="12">'
                    f"{escape(label)}</text>"
                    f'<text x="{_num(x_zero + (length + 4 if value >= 0 else -length - 4))}" '
                    f'y="{_num(y + h / 2 + 4)}" text-anchor="{"start" if value >= 0 else "end"}" '
                    f'font-size="11">{value:+.3f}</text>\n')
    return _doc(body, title)
