"""Deterministic SVG chart emission (no plotting dependency).

Renders trimmed-mean ISR curves with their bound overlays as an SVG line
chart; identical inputs produce byte-identical output.
"""

import math

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 55
PALETTE = ("#1f5fa8", "#c23b22", "#2e8540", "#7b3294", "#b8860b", "#007777")


def _fmt(v):
    return f"{v:.4f}".rstrip("0").rstrip(".")


def _ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * abs(step):
        out.append(round(t, 10))
        t += step
    return out


class SvgChart:
    """Line chart of (x, y-dB) series with optional dashed overlays."""

    def __init__(self, title, x_label, y_label="trimmed-mean ISR [dB]"):
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.series = []  # (label, xs, ys, dashed, color_index)

    def add_series(self, label, xs, ys, dashed=False):
        pts = [(x, y) for x, y in zip(xs, ys) if y is not None and math.isfinite(y)]
        color = len([s for s in self.series if not s[3]]) if not dashed else len(
            [s for s in self.series if s[3]]
        )
        self.series.append((label, pts, dashed, color))

    def _ranges(self):
        xs = [p[0] for _, pts, _, _ in self.series for p in pts]
        ys = [p[1] for _, pts, _, _ in self.series for p in pts]
        if not xs:
            raise ValueError("nothing to plot")
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
        if x_hi == x_lo:
            x_hi = x_lo + 1.0
        pad = 0.05 * (y_hi - y_lo) or 1.0
        return x_lo, x_hi, y_lo - pad, y_hi + pad

    def render(self):
        x_lo, x_hi, y_lo, y_hi = self._ranges()
        log_x = x_lo > 0 and x_hi / x_lo > 20

        def tx(x):
            if log_x:
                frac = (math.log10(x) - math.log10(x_lo)) / (
                    math.log10(x_hi) - math.log10(x_lo)
                )
            else:
                frac = (x - x_lo) / (x_hi - x_lo)
            return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

        def ty(y):
            frac = (y - y_lo) / (y_hi - y_lo)
            return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{self.title}</text>',
        ]
        # frame
        x0, y0 = MARGIN_L, MARGIN_T
        x1, y1 = WIDTH - MARGIN_R, HEIGHT - MARGIN_B
        parts.append(
            f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" '
            f'fill="none" stroke="#333333"/>'
        )
        # y ticks and grid
        for t in _ticks(y_lo, y_hi):
            py = ty(t)
            parts.append(
                f'<line x1="{x0}" y1="{_fmt(py)}" x2="{x1}" y2="{_fmt(py)}" '
                f'stroke="#dddddd"/>'
            )
            parts.append(
                f'<text x="{x0 - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
            )
        # x ticks
        x_tick_vals = (
            [10**v for v in _ticks(math.log10(x_lo), math.log10(x_hi), 5)]
            if log_x
            else _ticks(x_lo, x_hi)
        )
        for t in x_tick_vals:
            if not x_lo <= t <= x_hi * (1 + 1e-9):
                continue
            px = tx(t)
            parts.append(
                f'<line x1="{_fmt(px)}" y1="{y1}" x2="{_fmt(px)}" y2="{y1 + 5}" '
                f'stroke="#333333"/>'
            )
            parts.append(
                f'<text x="{_fmt(px)}" y="{y1 + 20}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
            )
        parts.append(
            f'<text x="{(x0 + x1) // 2}" y="{HEIGHT - 14}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{self.x_label}</text>'
        )
        parts.append(
            f'<text x="18" y="{(y0 + y1) // 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 18 {(y0 + y1) // 2})">{self.y_label}</text>'
        )
        # series
        legend_y = y0 + 16
        for label, pts, dashed, color_idx in self.series:
            color = PALETTE[color_idx % len(PALETTE)]
            coords = " ".join(f"{_fmt(tx(x))},{_fmt(ty(y))}" for x, y in pts)
            dash = ' stroke-dasharray="7,4"' if dashed else ""
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                f'stroke-width="1.8"{dash}/>'
            )
            if not dashed:
                for x, y in pts:
                    parts.append(
                        f'<circle cx="{_fmt(tx(x))}" cy="{_fmt(ty(y))}" r="3.2" '
                        f'fill="{color}"/>'
                    )
            parts.append(
                f'<line x1="{x1 - 150}" y1="{legend_y}" x2="{x1 - 120}" '
                f'y2="{legend_y}" stroke="{color}" stroke-width="1.8"{dash}/>'
            )
            parts.append(
                f'<text x="{x1 - 112}" y="{legend_y + 4}" '
                f'font-family="sans-serif" font-size="11">{label}</text>'
            )
            legend_y += 16
        parts.append("</svg>")
        return "\n".join(parts) + "\n"
