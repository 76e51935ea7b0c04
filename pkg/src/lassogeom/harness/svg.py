"""Minimal native SVG line/scatter plots."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

__all__ = ["Series", "Plot"]


@dataclass
class Series:
    xs: list
    ys: list
    color: str = "black"
    label: str = ""
    kind: str = "line"  # line | scatter | vline
    dash: bool = False


@dataclass
class Plot:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    width: int = 640
    height: int = 420
    series: list = field(default_factory=list)
    hline: float = None

    def add(self, s: Series):
        self.series.append(s)
        return self

    def _finite_points(self):
        for s in self.series:
            for x, y in zip(s.xs, s.ys):
                if x is not None and y is not None and math.isfinite(x) and math.isfinite(y):
                    yield x, y

    def render(self) -> str:
        pts = list(self._finite_points())
        ml, mr, mt, mb = 70, 150, 40, 50
        W, H = self.width, self.height
        tx = (lambda v: math.log10(v)) if self.logx else (lambda v: v)
        if pts:
            xs = [tx(x) for x, _ in pts if not self.logx or x > 0]
            ys = [y for _, y in pts]
            if self.hline is not None:
                ys.append(self.hline)
            x0, x1 = min(xs), max(xs)
            y0, y1 = min(ys), max(ys)
        else:
            x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        y0, y1 = y0 - pad, y1 + pad

        def px(x):
            return ml + (tx(x) - x0) / (x1 - x0) * (W - ml - mr)

        def py(y):
            return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb)

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
               f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
               f'<rect width="{W}" height="{H}" fill="white"/>',
               f'<line x1="{ml}" y1="{H - mb}" x2="{W - mr}" y2="{H - mb}" stroke="black"/>',
               f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{H - mb}" stroke="black"/>']
        for i in range(5):
            fx = x0 + (x1 - x0) * i / 4
            xv = 10 ** fx if self.logx else fx
            X = ml + (W - ml - mr) * i / 4
            out.append(f'<line x1="{X:.2f}" y1="{H - mb}" x2="{X:.2f}" y2="{H - mb + 4}" stroke="black"/>')
            out.append(f'<text x="{X:.2f}" y="{H - mb + 16}" text-anchor="middle">{xv:.3g}</text>')
            yv = y0 + (y1 - y0) * i / 4
            Y = py(yv)
            out.append(f'<line x1="{ml - 4}" y1="{Y:.2f}" x2="{ml}" y2="{Y:.2f}" stroke="black"/>')
            out.append(f'<text x="{ml - 6}" y="{Y + 4:.2f}" text-anchor="end">{yv:.3g}</text>')
        if self.hline is not None:
            Y = py(self.hline)
            out.append(f'<line x1="{ml}" y1="{Y:.2f}" x2="{W - mr}" y2="{Y:.2f}" '
                       f'stroke="gray" stroke-dasharray="2,3"/>')
        for s in self.series:
            dash = ' stroke-dasharray="6,4"' if s.dash else ""
            if s.kind == "vline":
                for x in s.xs:
                    if x is None or not math.isfinite(x):
                        continue
                    X = px(x)
                    out.append(f'<line x1="{X:.2f}" y1="{mt}" x2="{X:.2f}" y2="{H - mb}" '
                               f'stroke="{s.color}"{dash}/>')
                continue
            good = [(x, y) for x, y in zip(s.xs, s.ys)
                    if x is not None and y is not None and math.isfinite(x) and math.isfinite(y)]
            if s.kind == "scatter":
                for x, y in good:
                    out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" '
                               f'fill="{s.color}" fill-opacity="0.6"/>')
            elif good:
                path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in good)
                out.append(f'<polyline points="{path}" fill="none" stroke="{s.color}" '
                           f'stroke-width="1.5"{dash}/>')
        ly = mt
        for s in self.series:
            if not s.label:
                continue
            out.append(f'<rect x="{W - mr + 10}" y="{ly}" width="12" height="3" fill="{s.color}"/>')
            out.append(f'<text x="{W - mr + 26}" y="{ly + 5}">{escape(s.label)}</text>')
            ly += 18
        out.append(f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="14">'
                   f'{escape(self.title)}</text>')
        out.append(f'<text x="{(ml + W - mr) / 2:.1f}" y="{H - 12}" text-anchor="middle">'
                   f'{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{H / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {H / 2:.1f})">{escape(self.ylabel)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())
