"""Static SVG plots built from JSON plot-data documents.

Text is laid out with fixed monospace metrics (``CHAR_W`` pixels per
character at ``FONT_SIZE``) and every number is printed with ``%.3f``, so a
given document always renders to the same bytes.

Document schemas (keys beyond these are ignored; ``title`` is optional):

* ``weight_plot``: ``feature_names``, ``values``, ``lower``, ``upper``
* ``pdp``: ``feature_names`` (one name), ``grid``, ``values``
* ``scree``: ``values`` (explained-variance ratios)
* ``box_by_group``: ``group_names``, ``groups`` (one list of numbers per name)
* ``scatter``: ``x``, ``y``; optional ``x_label``, ``y_label``
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .errors import RenderError

KINDS = ("weight_plot", "pdp", "scree", "box_by_group", "scatter")
FONT_SIZE = 12
CHAR_W = 7.2
WIDTH, HEIGHT = 640, 400
MARGIN_TOP, MARGIN_RIGHT, MARGIN_BOTTOM = 40, 20, 50


def _f(v: float) -> str:
    return "%.3f" % v


def _need(doc: dict, *keys: str) -> None:
    for k in keys:
        if k not in doc:
            raise RenderError(k)


def _vector(doc: dict, key: str, allow_empty: bool = False) -> np.ndarray:
    _need(doc, key)
    v = np.asarray(doc[key], dtype=float).ravel()
    if v.size == 0 and not allow_empty:
        raise RenderError(key, f"plot data key {key!r} is empty")
    if not np.all(np.isfinite(v)):
        raise RenderError(key, f"plot data key {key!r} holds non-finite values")
    return v


class _Canvas:
    def __init__(self, width: int, height: int, left: float, title: str | None):
        self.width, self.height = width, height
        self.left = left
        self.parts: list[str] = []
        if title:
            self.text(width / 2, 24, title, anchor="middle", cls="title")

    @property
    def plot_w(self) -> float:
        return self.width - self.left - MARGIN_RIGHT

    @property
    def plot_h(self) -> float:
        return self.height - MARGIN_TOP - MARGIN_BOTTOM

    def text(self, x, y, s, anchor="start", cls="label"):
        self.parts.append(
            f'<text class="{cls}" x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}">{escape(str(s))}</text>'
        )

    def line(self, x1, y1, x2, y2, cls="axis"):
        self.parts.append(
            f'<line class="{cls}" x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}"/>'
        )

    def rect(self, x, y, w, h, cls="bar"):
        self.parts.append(
            f'<rect class="{cls}" x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}"/>'
        )

    def circle(self, x, y, r=2.5, cls="point"):
        self.parts.append(f'<circle class="{cls}" cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}"/>')

    def polyline(self, xs, ys, cls="curve"):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline class="{cls}" points="{pts}" fill="none"/>')

    def axes(self):
        x0, y0 = self.left, MARGIN_TOP + self.plot_h
        self.line(x0, MARGIN_TOP, x0, y0)
        self.line(x0, y0, x0 + self.plot_w, y0)

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="monospace" '
            f'font-size="{FONT_SIZE}">'
        )
        style = (
            "<style>.axis{stroke:#000;stroke-width:1}.grid{stroke:#ccc;stroke-width:1}"
            ".whisker{stroke:#333;stroke-width:1.5}.bar{fill:#4878a8}.box{fill:#a8c4e0;stroke:#000}"
            ".median{stroke:#000;stroke-width:2}.point{fill:#4878a8}.curve{stroke:#4878a8;stroke-width:2}"
            ".zero{stroke:#888;stroke-dasharray:4 2}</style>"
        )
        return "\n".join([head, style, *self.parts, "</svg>"]) + "\n"


def _span(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo <= 0:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(c: _Canvas, lo: float, hi: float, vertical: bool, n: int = 5):
    """Axis ticks with labels; returns the data-to-pixel map."""
    if vertical:
        y0, h = MARGIN_TOP + c.plot_h, c.plot_h

        def to_px(v):
            return y0 - (v - lo) / (hi - lo) * h

        for t in np.linspace(lo, hi, n):
            c.line(c.left - 4, to_px(t), c.left, to_px(t))
            c.text(c.left - 6, to_px(t) + FONT_SIZE / 3, _f(t), anchor="end", cls="tick")
    else:
        x0, w = c.left, c.plot_w

        def to_px(v):
            return x0 + (v - lo) / (hi - lo) * w

        yb = MARGIN_TOP + c.plot_h
        for t in np.linspace(lo, hi, n):
            c.line(to_px(t), yb, to_px(t), yb + 4)
            c.text(to_px(t), yb + 4 + FONT_SIZE, _f(t), anchor="middle", cls="tick")
    return to_px


def _weight_plot(doc: dict) -> _Canvas:
    _need(doc, "feature_names")
    names = [str(s) for s in doc["feature_names"]]
    vals, lo, hi = (_vector(doc, k) for k in ("values", "lower", "upper"))
    if not (len(names) == vals.size == lo.size == hi.size):
        raise RenderError("values", "feature_names, values, lower and upper differ in length")
    left = 12 + CHAR_W * max(len(s) for s in names)
    height = max(HEIGHT, MARGIN_TOP + MARGIN_BOTTOM + 24 * len(names))
    c = _Canvas(WIDTH, height, left, doc.get("title"))
    xmin, xmax = _span(min(lo.min(), 0.0), max(hi.max(), 0.0))
    to_x = _ticks(c, xmin, xmax, vertical=False)
    c.axes()
    c.line(to_x(0.0), MARGIN_TOP, to_x(0.0), MARGIN_TOP + c.plot_h, cls="zero")
    step = c.plot_h / len(names)
    for i, name in enumerate(names):
        y = MARGIN_TOP + step * (i + 0.5)
        c.text(left - 6, y + FONT_SIZE / 3, name, anchor="end", cls="ylabel")
        c.line(to_x(lo[i]), y, to_x(hi[i]), y, cls="whisker")
        c.circle(to_x(vals[i]), y, 3.5)
    c.text(left + c.plot_w / 2, height - 8, doc.get("x_label", "weight (95% interval)"), anchor="middle")
    return c


def _pdp(doc: dict) -> _Canvas:
    _need(doc, "feature_names")
    grid, vals = _vector(doc, "grid"), _vector(doc, "values")
    if grid.size != vals.size:
        raise RenderError("values", "grid and values differ in length")
    c = _Canvas(WIDTH, HEIGHT, 80, doc.get("title"))
    to_x = _ticks(c, *_span(grid.min(), grid.max()), vertical=False)
    to_y = _ticks(c, *_span(vals.min(), vals.max()), vertical=True)
    c.axes()
    c.polyline([to_x(g) for g in grid], [to_y(v) for v in vals])
    names = doc["feature_names"]
    c.text(c.left + c.plot_w / 2, HEIGHT - 8, names[0] if names else "feature", anchor="middle")
    c.text(14, MARGIN_TOP - 10, doc.get("y_label", "partial dependence"), cls="label")
    return c


def _scree(doc: dict) -> _Canvas:
    vals = _vector(doc, "values")
    c = _Canvas(WIDTH, HEIGHT, 70, doc.get("title"))
    to_y = _ticks(c, 0.0, max(1.0, float(vals.max())), vertical=True)
    c.axes()
    step = c.plot_w / vals.size
    base = to_y(0.0)
    for i, v in enumerate(vals):
        x = c.left + step * i + 0.1 * step
        c.rect(x, to_y(v), 0.8 * step, base - to_y(v))
        c.text(x + 0.4 * step, base + 4 + FONT_SIZE, str(i + 1), anchor="middle", cls="tick")
    c.text(c.left + c.plot_w / 2, HEIGHT - 8, "component", anchor="middle")
    c.text(14, MARGIN_TOP - 10, "explained variance ratio", cls="label")
    return c


def _box_by_group(doc: dict) -> _Canvas:
    _need(doc, "group_names", "groups")
    names = [str(s) for s in doc["group_names"]]
    groups = [np.asarray(g, dtype=float).ravel() for g in doc["groups"]]
    if not groups or len(groups) != len(names):
        raise RenderError("groups", "one non-empty group per name is required")
    if any(g.size == 0 for g in groups):
        raise RenderError("groups", "empty group")
    allv = np.concatenate(groups)
    c = _Canvas(WIDTH, HEIGHT, 80, doc.get("title"))
    to_y = _ticks(c, *_span(allv.min(), allv.max()), vertical=True)
    c.axes()
    step = c.plot_w / len(groups)
    for i, (name, g) in enumerate(zip(names, groups)):
        q1, med, q3 = np.quantile(g, [0.25, 0.5, 0.75])
        cx = c.left + step * (i + 0.5)
        half = 0.3 * step
        c.line(cx, to_y(g.min()), cx, to_y(q1), cls="whisker")
        c.line(cx, to_y(q3), cx, to_y(g.max()), cls="whisker")
        c.rect(cx - half, to_y(q3), 2 * half, to_y(q1) - to_y(q3), cls="box")
        c.line(cx - half, to_y(med), cx + half, to_y(med), cls="median")
        c.text(cx, MARGIN_TOP + c.plot_h + 4 + FONT_SIZE, name, anchor="middle", cls="xlabel")
    if "y_label" in doc:
        c.text(14, MARGIN_TOP - 10, doc["y_label"], cls="label")
    return c


def _scatter(doc: dict) -> _Canvas:
    x, y = _vector(doc, "x"), _vector(doc, "y")
    if x.size != y.size:
        raise RenderError("y", "x and y differ in length")
    c = _Canvas(WIDTH, HEIGHT, 80, doc.get("title"))
    to_x = _ticks(c, *_span(x.min(), x.max()), vertical=False)
    to_y = _ticks(c, *_span(y.min(), y.max()), vertical=True)
    c.axes()
    for a, b in zip(x, y):
        c.circle(to_x(a), to_y(b))
    c.text(c.left + c.plot_w / 2, HEIGHT - 8, doc.get("x_label", "x"), anchor="middle")
    c.text(14, MARGIN_TOP - 10, doc.get("y_label", "y"), cls="label")
    return c


_RENDERERS = {
    "weight_plot": _weight_plot,
    "pdp": _pdp,
    "scree": _scree,
    "box_by_group": _box_by_group,
    "scatter": _scatter,
}


def render_svg(kind: str, doc: dict) -> str:
    """Render a plot-data document to SVG text.

    Missing keys raise :class:`RenderError` naming the key, as do empty or
    non-finite data vectors.
    """
    if kind not in _RENDERERS:
        raise RenderError("kind", f"unknown plot kind {kind!r}; choose from {', '.join(KINDS)}")
    if not isinstance(doc, dict):
        raise RenderError("document", "plot data must be a JSON object")
    return _RENDERERS[kind](doc).render()
