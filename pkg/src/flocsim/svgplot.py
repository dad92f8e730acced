"""Tiny SVG figure writer: axes, polylines, markers, segments.

Kept dependency-free and byte-deterministic (no timestamps or tool version
strings) because the figures are build artifacts compared in tests.
"""

import math


def _ticks(lo, hi, n=6):
    if not (hi > lo):
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def _fmt(v):
    return f"{v:.6g}"


class SvgFigure:
    """A single-axes figure; add geometry in data coordinates, then write()."""

    def __init__(self, xlim, ylim, width=640, height=480, xlabel="", ylabel="",
                 title=""):
        self.xlim = (float(xlim[0]), float(xlim[1]))
        self.ylim = (float(ylim[0]), float(ylim[1]))
        self.width = width
        self.height = height
        self.margin = (60, 15, 30, 45)  # left, right, top, bottom
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.title = title
        self._body = []
        self._legend = []

    def _px(self, x):
        left, right = self.margin[0], self.width - self.margin[1]
        x0, x1 = self.xlim
        return left + (x - x0) / (x1 - x0) * (right - left)

    def _py(self, y):
        top, bottom = self.margin[2], self.height - self.margin[3]
        y0, y1 = self.ylim
        return bottom - (y - y0) / (y1 - y0) * (bottom - top)

    def polyline(self, xs, ys, color="#1f77b4", width=1.5, dash=None, label=None):
        pts = " ".join(f"{self._px(float(x)):.2f},{self._py(float(y)):.2f}"
                       for x, y in zip(xs, ys))
        if not pts:
            return
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self._body.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}" clip-path="url(#plot)"{dash_attr}/>'
        )
        if label:
            self._legend.append((label, color, dash))

    def segment(self, x0, y0, x1, y1, color="#999999", width=0.8):
        self._body.append(
            f'<line x1="{self._px(x0):.2f}" y1="{self._py(y0):.2f}" '
            f'x2="{self._px(x1):.2f}" y2="{self._py(y1):.2f}" '
            f'stroke="{color}" stroke-width="{width}" clip-path="url(#plot)"/>'
        )

    def marker(self, x, y, color="#000000", kind="circle", size=4.5, label=None):
        px, py = self._px(x), self._py(y)
        if kind == "circle":
            self._body.append(
                f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{size:.2f}" '
                f'fill="{color}" stroke="none"/>'
            )
        elif kind == "open-circle":
            self._body.append(
                f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{size:.2f}" '
                f'fill="white" stroke="{color}" stroke-width="1.5"/>'
            )
        elif kind == "cross":
            s = size
            self._body.append(
                f'<path d="M {px - s:.2f} {py - s:.2f} L {px + s:.2f} {py + s:.2f} '
                f'M {px - s:.2f} {py + s:.2f} L {px + s:.2f} {py - s:.2f}" '
                f'stroke="{color}" stroke-width="1.8" fill="none"/>'
            )
        else:
            raise ValueError(f"unknown marker kind {kind!r}")
        if label:
            self._legend.append((label, color, None))

    def _frame(self):
        left, right = self.margin[0], self.width - self.margin[1]
        top, bottom = self.margin[2], self.height - self.margin[3]
        parts = [
            f'<clipPath id="plot"><rect x="{left}" y="{top}" '
            f'width="{right - left}" height="{bottom - top}"/></clipPath>',
            f'<rect x="{left}" y="{top}" width="{right - left}" '
            f'height="{bottom - top}" fill="none" stroke="#333333"/>',
        ]
        for tx in _ticks(*self.xlim):
            px = self._px(tx)
            parts.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" '
                         f'y2="{bottom + 5}" stroke="#333333"/>')
            parts.append(f'<text x="{px:.2f}" y="{bottom + 18}" font-size="11" '
                         f'text-anchor="middle" font-family="sans-serif">{_fmt(tx)}</text>')
        for ty in _ticks(*self.ylim):
            py = self._py(ty)
            parts.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" '
                         f'y2="{py:.2f}" stroke="#333333"/>')
            parts.append(f'<text x="{left - 8}" y="{py + 4:.2f}" font-size="11" '
                         f'text-anchor="end" font-family="sans-serif">{_fmt(ty)}</text>')
        if self.xlabel:
            parts.append(f'<text x="{(left + right) / 2:.2f}" y="{self.height - 8}" '
                         f'font-size="13" text-anchor="middle" '
                         f'font-family="sans-serif">{self.xlabel}</text>')
        if self.ylabel:
            cy = (top + bottom) / 2
            parts.append(f'<text x="16" y="{cy:.2f}" font-size="13" '
                         f'text-anchor="middle" font-family="sans-serif" '
                         f'transform="rotate(-90 16 {cy:.2f})">{self.ylabel}</text>')
        if self.title:
            parts.append(f'<text x="{(left + right) / 2:.2f}" y="20" font-size="14" '
                         f'text-anchor="middle" font-family="sans-serif">{self.title}</text>')
        return parts

    def _legend_box(self):
        if not self._legend:
            return []
        right = self.width - self.margin[1]
        top = self.margin[2]
        parts = []
        for i, (label, color, dash) in enumerate(self._legend):
            y = top + 16 + 16 * i
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            parts.append(f'<line x1="{right - 150}" y1="{y}" x2="{right - 125}" '
                         f'y2="{y}" stroke="{color}" stroke-width="2"{dash_attr}/>')
            parts.append(f'<text x="{right - 120}" y="{y + 4}" font-size="11" '
                         f'font-family="sans-serif">{label}</text>')
        return parts

    def to_svg(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
                f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">')
        lines = [head, '<rect width="100%" height="100%" fill="white"/>']
        lines.extend(self._frame())
        lines.extend(self._body)
        lines.extend(self._legend_box())
        lines.append("</svg>")
        return "\n".join(lines) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_svg())
