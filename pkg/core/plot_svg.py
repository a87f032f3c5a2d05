# core/plot_svg.py

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bindings import chain_polyline
from .grid import GridField
from .oracle import GroundTruth
from .pipeline import RunReport

SVG_NS = "http://www.w3.org/2000/svg"
CANVAS = 600.0
MARGIN = 20.0

Segment = Tuple[Tuple[float, float], Tuple[float, float]]

# セルの辺: 0 = 下 (bl-br), 1 = 右 (br-tr), 2 = 上 (tl-tr), 3 = 左 (bl-tl)
# case ビット: bl=1, br=2, tr=4, tl=8（値 > level の角）
_EDGE_TABLE: Dict[int, List[Tuple[int, int]]] = {
    1: [(3, 0)],
    2: [(0, 1)],
    3: [(3, 1)],
    4: [(1, 2)],
    6: [(0, 2)],
    7: [(3, 2)],
    8: [(2, 3)],
    9: [(0, 2)],
    11: [(1, 2)],
    12: [(3, 1)],
    13: [(0, 1)],
    14: [(3, 0)],
}
# 鞍点セル (5, 10) はセル中心の値で接続を決める: (中心 > level, 中心 <= level)
_SADDLE_TABLE: Dict[int, Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]] = {
    5: ([(0, 1), (2, 3)], [(3, 0), (1, 2)]),
    10: ([(3, 0), (1, 2)], [(0, 1), (2, 3)]),
}


def contour_levels(values: np.ndarray, n: int = 10) -> np.ndarray:
    """最小値と最大値の間に等間隔で n 本（両端は含まない）。"""
    lo = float(np.min(values))
    hi = float(np.max(values))
    if hi <= lo:
        return np.array([])
    return np.linspace(lo, hi, n + 2)[1:-1]


def marching_squares(g: GridField, level: float) -> List[Segment]:
    """等値線 f = level をセルごとの線分のリストとして返す。"""
    v = g.values - level
    x = g.x_coords
    y = g.y_coords
    bl = v[:-1, :-1]
    br = v[:-1, 1:]
    tr = v[1:, 1:]
    tl = v[1:, :-1]
    case = (bl > 0) * 1 + (br > 0) * 2 + (tr > 0) * 4 + (tl > 0) * 8

    segments: List[Segment] = []
    rows, cols = np.nonzero((case != 0) & (case != 15))
    for i, j in zip(rows, cols):
        c = int(case[i, j])
        corners = (
            (x[j], y[i], bl[i, j]),
            (x[j + 1], y[i], br[i, j]),
            (x[j + 1], y[i + 1], tr[i, j]),
            (x[j], y[i + 1], tl[i, j]),
        )
        if c in _SADDLE_TABLE:
            center = (bl[i, j] + br[i, j] + tr[i, j] + tl[i, j]) / 4.0
            pairs = _SADDLE_TABLE[c][0 if center > 0 else 1]
        else:
            pairs = _EDGE_TABLE[c]
        for e0, e1 in pairs:
            segments.append((_edge_point(corners, e0), _edge_point(corners, e1)))
    return segments


_EDGE_CORNERS = {0: (0, 1), 1: (1, 2), 2: (3, 2), 3: (0, 3)}


def _edge_point(corners, edge: int) -> Tuple[float, float]:
    a, b = _EDGE_CORNERS[edge]
    xa, ya, va = corners[a]
    xb, yb, vb = corners[b]
    t = va / (va - vb)
    t = min(max(t, 0.0), 1.0)
    return (float(xa + t * (xb - xa)), float(ya + t * (yb - ya)))


class _Canvas:
    """ワールド座標 -> SVG ピクセル座標（y は上下反転）。"""

    def __init__(self, g: GridField):
        self.xmin, self.xmax, self.ymin, self.ymax = g.bounds
        w = self.xmax - self.xmin
        h = self.ymax - self.ymin
        self.scale = CANVAS / max(w, h)
        self.width = w * self.scale + 2 * MARGIN
        self.height = h * self.scale + 2 * MARGIN

    def px(self, x: float, y: float) -> Tuple[float, float]:
        return (
            MARGIN + (x - self.xmin) * self.scale,
            MARGIN + (self.ymax - y) * self.scale,
        )

    def points_attr(self, pts: Sequence[Sequence[float]]) -> str:
        return " ".join("%.2f,%.2f" % self.px(p[0], p[1]) for p in pts)


def render_svg(
    g: GridField,
    report: Optional[RunReport] = None,
    truth: Optional[GroundTruth] = None,
    levels: int = 10,
) -> str:
    """
    等高線図 + 検出結果 + 正解（あれば）の SVG 文字列を作る。

    レイヤーごとに <g id="contours">, <g id="detected">, <g id="ground-truth"> に分ける。
    検出した孤立点は <circle>、曲線は最近傍でつないだ <polyline>。
    正解は赤の破線（点は × 印の <path>）で描く。
    """
    ET.register_namespace("", SVG_NS)
    cv = _Canvas(g)
    root = ET.Element(
        f"{{{SVG_NS}}}svg",
        {
            "width": "%.0f" % cv.width,
            "height": "%.0f" % cv.height,
            "viewBox": "0 0 %.0f %.0f" % (cv.width, cv.height),
        },
    )
    ET.SubElement(
        root,
        f"{{{SVG_NS}}}rect",
        {"x": "0", "y": "0", "width": "%.0f" % cv.width, "height": "%.0f" % cv.height, "fill": "#f7f7f2"},
    )

    contours = ET.SubElement(
        root,
        f"{{{SVG_NS}}}g",
        {"id": "contours", "fill": "none", "stroke": "#6b7fa3", "stroke-width": "0.7"},
    )
    for level in contour_levels(g.values, levels):
        segs = marching_squares(g, float(level))
        if not segs:
            continue
        d = " ".join(
            "M%.2f,%.2f L%.2f,%.2f" % (*cv.px(*a), *cv.px(*b)) for a, b in segs
        )
        ET.SubElement(contours, f"{{{SVG_NS}}}path", {"d": d, "data-level": "%.6g" % level})

    detected = ET.SubElement(root, f"{{{SVG_NS}}}g", {"id": "detected"})
    if report is not None:
        pts = np.array([[p.x, p.y] for p in report.stationary_points]).reshape(-1, 2)
        for b in report.bindings:
            if b.kind == "isolated":
                cx, cy = cv.px(*pts[b.members[0]])
                ET.SubElement(
                    detected,
                    f"{{{SVG_NS}}}circle",
                    {
                        "cx": "%.2f" % cx,
                        "cy": "%.2f" % cy,
                        "r": "4",
                        "fill": "white",
                        "stroke": "black",
                        "stroke-width": "1",
                    },
                )
            else:
                line = chain_polyline(pts[b.members])
                ET.SubElement(
                    detected,
                    f"{{{SVG_NS}}}polyline",
                    {"points": cv.points_attr(line), "fill": "none", "stroke": "black", "stroke-width": "1.5"},
                )

    if truth is not None:
        layer = ET.SubElement(
            root,
            f"{{{SVG_NS}}}g",
            {"id": "ground-truth", "fill": "none", "stroke": "#d62728", "stroke-width": "1", "stroke-dasharray": "4 3"},
        )
        for x, y in truth.isolated:
            px, py = cv.px(x, y)
            ET.SubElement(
                layer,
                f"{{{SVG_NS}}}path",
                {"d": "M%.2f,%.2f L%.2f,%.2f M%.2f,%.2f L%.2f,%.2f"
                 % (px - 4, py - 4, px + 4, py + 4, px - 4, py + 4, px + 4, py - 4)},
            )
        for curve in truth.curves:
            ET.SubElement(layer, f"{{{SVG_NS}}}polyline", {"points": cv.points_attr(curve.sample(200))})

    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"
