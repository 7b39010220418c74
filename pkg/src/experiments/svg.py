"""
Minimal SVG 1.1 writer for the toy-data figure.

Elements are plain tag/attribute/children trees rendered to text; Plot maps
data coordinates onto a fixed pixel frame (y grows upward in data space).
"""
import logging
from html import escape
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

Vec = Tuple[float, float]


def fmt_num(n: float) -> str:
    """Three decimals, without trailing zeros; integral values print as integers."""
    n = round(float(n), 3)
    if n == int(n):
        return str(int(n))
    return f"{n:.3f}".rstrip("0").rstrip(".")


class Element:
    tag = "g"

    def __init__(self, *children: Any, **attrs: Any):
        self.children = list(children)
        # Trailing underscores allow reserved words; underscores become dashes
        self.attrs = {k.rstrip("_").replace("_", "-"): v for k, v in attrs.items() if v is not None}

    def add(self, child: Any) -> Any:
        self.children.append(child)
        return child

    def render(self, indent: int = 0) -> str:
        pad = "  " * indent
        attrs = "".join(
            f' {k}="{escape(fmt_num(v) if isinstance(v, (float, int, np.floating)) else str(v))}"'
            for k, v in self.attrs.items()
        )
        if not self.children:
            return f"{pad}<{self.tag}{attrs}/>"
        if all(isinstance(c, str) for c in self.children):
            return f"{pad}<{self.tag}{attrs}>{escape(''.join(self.children))}</{self.tag}>"
        inner = "\n".join(
            c.render(indent + 1) if isinstance(c, Element) else pad + "  " + escape(str(c))
            for c in self.children
        )
        return f"{pad}<{self.tag}{attrs}>\n{inner}\n{pad}</{self.tag}>"


class Svg(Element):
    tag = "svg"

    def __init__(self, width: int, height: int, *children: Any, **attrs: Any):
        super().__init__(
            *children,
            xmlns="http://www.w3.org/2000/svg",
            version="1.1",
            width=width,
            height=height,
            viewBox=f"0 0 {width} {height}",
            **attrs,
        )

    def render_document(self) -> str:
        return '<?xml version="1.0" encoding="UTF-8"?>\n' + self.render() + "\n"


class Group(Element):
    tag = "g"


class Circle(Element):
    tag = "circle"

    def __init__(self, pos: Vec, r: float, **attrs: Any):
        super().__init__(cx=pos[0], cy=pos[1], r=r, **attrs)


class Line(Element):
    tag = "line"

    def __init__(self, a: Vec, b: Vec, **attrs: Any):
        super().__init__(x1=a[0], y1=a[1], x2=b[0], y2=b[1], **attrs)


class Polyline(Element):
    tag = "polyline"

    def __init__(self, points: Iterable[Vec], **attrs: Any):
        text = " ".join(f"{fmt_num(x)},{fmt_num(y)}" for x, y in points)
        super().__init__(points=text, fill="none", **attrs)


class Rect(Element):
    tag = "rect"

    def __init__(self, pos: Vec, size: Vec, **attrs: Any):
        super().__init__(x=pos[0], y=pos[1], width=size[0], height=size[1], **attrs)


class Text(Element):
    tag = "text"

    def __init__(self, text: str, pos: Vec, **attrs: Any):
        super().__init__(text, x=pos[0], y=pos[1], **attrs)


class Path(Element):
    tag = "path"

    def __init__(self, d: str, **attrs: Any):
        super().__init__(d=d, **attrs)


class Defs(Element):
    tag = "defs"


class Marker(Element):
    tag = "marker"


class Plot:
    """A square data window [lo, hi]^2 drawn into a size x size pixel canvas."""

    def __init__(self, lo: float, hi: float, size: int = 480, margin: int = 30, title: Optional[str] = None):
        self.lo = lo
        self.hi = hi
        self.size = size
        self.margin = margin
        self.svg = Svg(size, size)
        self.svg.add(Rect((0, 0), (size, size), fill="white"))
        self.svg.add(Rect((margin, margin), (size - 2 * margin, size - 2 * margin), fill="none", stroke="#888888"))
        if title:
            self.svg.add(Text(title, (size / 2, margin * 0.66), text_anchor="middle", font_size=14, font_family="sans-serif"))
        self._marker_ids: List[str] = []

    def px(self, p: Sequence[float]) -> Vec:
        span = self.size - 2 * self.margin
        scale = span / (self.hi - self.lo)
        return (
            self.margin + (float(p[0]) - self.lo) * scale,
            self.size - self.margin - (float(p[1]) - self.lo) * scale,
        )

    def scatter(self, points: np.ndarray, color: str, r: float = 1.5, opacity: float = 0.35) -> None:
        group = self.svg.add(Group(fill=color, fill_opacity=opacity))
        for p in points:
            group.add(Circle(self.px(p), r))

    def _arrow_marker(self, color: str) -> str:
        marker_id = f"arrow{len(self._marker_ids)}"
        self._marker_ids.append(marker_id)
        head = Path("M0,0 L8,4 L0,8 z", fill=color)
        self.svg.add(Defs(Marker(head, id=marker_id, markerWidth=8, markerHeight=8, refX=7, refY=4, orient="auto")))
        return marker_id

    def vector(self, origin: Sequence[float], direction: Sequence[float], color: str, label: str) -> None:
        end = np.asarray(origin, dtype=float) + np.asarray(direction, dtype=float)
        marker = self._arrow_marker(color)
        self.svg.add(Line(self.px(origin), self.px(end), stroke=color, stroke_width=2, marker_end=f"url(#{marker})"))
        self.svg.add(Text(label, self.px(end), fill=color, font_size=12, font_family="sans-serif"))

    def line_through(self, normal: Sequence[float], offset: float, color: str, dashed: bool = False) -> None:
        """The line normal . p + offset = 0, clipped to the data window."""
        points = _clip_line(np.asarray(normal, dtype=float), float(offset), self.lo, self.hi)
        if len(points) < 2:
            logger.debug("Line does not cross the plot window; not drawn")
            return
        self.svg.add(Line(self.px(points[0]), self.px(points[1]), stroke=color, stroke_width=1.5,
                          stroke_dasharray="6,4" if dashed else None))

    def cross(self, p: Sequence[float], color: str, size: float = 6) -> None:
        x, y = self.px(p)
        self.svg.add(Line((x - size, y - size), (x + size, y + size), stroke=color, stroke_width=2))
        self.svg.add(Line((x - size, y + size), (x + size, y - size), stroke=color, stroke_width=2))

    def trajectory(self, points: Sequence[Sequence[float]], color: str) -> None:
        self.svg.add(Polyline([self.px(p) for p in points], stroke=color, stroke_width=1.5, stroke_dasharray="4,3"))

    def legend(self, entries: Sequence[Tuple[str, str]]) -> None:
        for i, (label, color) in enumerate(entries):
            y = self.margin + 16 + 16 * i
            self.svg.add(Rect((self.margin + 8, y - 9), (10, 10), fill=color))
            self.svg.add(Text(label, (self.margin + 24, y), font_size=11, font_family="sans-serif"))

    def render(self) -> str:
        return self.svg.render_document()


def _clip_line(normal: np.ndarray, offset: float, lo: float, hi: float) -> List[Vec]:
    """Intersections of normal . p + offset = 0 with the square [lo, hi]^2."""
    a, b = normal
    points: List[Vec] = []
    for edge in (lo, hi):
        if b != 0:
            y = -(a * edge + offset) / b
            if lo <= y <= hi:
                points.append((edge, y))
        if a != 0:
            x = -(b * edge + offset) / a
            if lo <= x <= hi:
                points.append((x, edge))
    unique: List[Vec] = []
    for p in points:
        if not any(abs(p[0] - q[0]) < 1e-12 and abs(p[1] - q[1]) < 1e-12 for q in unique):
            unique.append(p)
    return unique[:2]
