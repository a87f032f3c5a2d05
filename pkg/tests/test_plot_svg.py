# tests/test_plot_svg.py

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from core.grid import GridField, sample
from core.oracle import ground_truth
from core.pipeline import FindOptions, InputDescriptor, run_pipeline
from core.plot_svg import contour_levels, marching_squares, render_svg

SVG = "{http://www.w3.org/2000/svg}"


def test_contour_levels_exclude_extremes():
    levels = contour_levels(np.array([0.0, 11.0]), 10)
    np.testing.assert_allclose(levels, np.arange(1.0, 11.0))
    assert contour_levels(np.ones(4)).size == 0


def test_marching_squares_on_a_plane_gives_a_straight_line():
    xs = np.arange(5, dtype=float)
    xx, _ = np.meshgrid(xs, xs)
    g = GridField(nx=5, ny=5, dx=1.0, dy=1.0, origin=(0.0, 0.0), values=xx)
    segs = marching_squares(g, 1.5)
    assert len(segs) == 4
    for a, b in segs:
        assert a[0] == 1.5 and b[0] == 1.5


def test_empty_report_gives_contours_only():
    g = sample("f2", 20, 20)
    svg = render_svg(g)
    assert svg.startswith("<?xml")
    root = ET.fromstring(svg)
    layers = {el.get("id"): el for el in root.iter(f"{SVG}g")}
    assert set(layers) == {"contours", "detected"}
    assert list(layers["detected"]) == []
    assert len(layers["contours"].findall(f"{SVG}path")) == 10


def test_curves_are_drawn_as_polylines():
    g = sample("f11", 30, 30)
    report = run_pipeline(g, FindOptions(), InputDescriptor.for_field(g, "function", function="f11"))
    root = ET.fromstring(render_svg(g, report, ground_truth("f11"), levels=5))
    detected = next(el for el in root.iter(f"{SVG}g") if el.get("id") == "detected")
    assert len(detected.findall(f"{SVG}polyline")) == report.summary.curves
    assert len(detected.findall(f"{SVG}circle")) == report.summary.isolated
    truth = next(el for el in root.iter(f"{SVG}g") if el.get("id") == "ground-truth")
    assert len(truth.findall(f"{SVG}polyline")) == 1
