# tests/test_oracle.py

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from core.grid import BenchmarkFunction
from core.oracle import analytic_gradient, ground_truth, nearest_distance


def test_f2_has_24_closed_form_points():
    truth = ground_truth("f2")
    assert truth.isolated.shape == (24, 2)
    assert truth.curves == ()
    assert np.all(np.abs(truth.isolated) < 2.0)
    assert np.min(nearest_distance([[math.pi / 6, 0.0]], truth.isolated)) < 1e-15
    assert BenchmarkFunction.F2.evaluate(math.pi / 6, 0.0) == pytest.approx(1.0)


def test_f11_diagonal():
    (curve,) = ground_truth("f11").curves
    np.testing.assert_allclose(curve.at(0.5), [0.5, 0.5])
    np.testing.assert_allclose(curve.sample(3), [[-1.0, -1.0], [0.0, 0.0], [1.0, 1.0]])


def test_f12_has_four_clipped_parabolas():
    truth = ground_truth("f12")
    assert len(truth.curves) == 4
    assert len(truth.isolated) == 0
    for curve in truth.curves:
        pts = curve.sample(200)
        assert np.all(pts[:, 0] >= -3.0 - 1e-12) and np.all(pts[:, 0] <= 3.0 + 1e-12)
        assert np.all(np.abs(pts[:, 1]) <= 2.0 + 1e-12)


def test_f13_circles_arcs_and_origin():
    truth = ground_truth("f13")
    np.testing.assert_array_equal(truth.isolated, [[0.0, 0.0]])
    assert len(truth.curves) == 7

    radii = sorted({round(float(np.hypot(*c.at(c.t0))), 12) for c in truth.curves})
    np.testing.assert_allclose(radii, [1 / 4, 7 / 12, 11 / 12, 5 / 4])
    np.testing.assert_allclose(np.diff(radii), 1 / 3)

    arcs = [c for c in truth.curves if c.label.startswith("arc")]
    assert len(arcs) == 4
    for arc in arcs:
        pts = arc.sample(100)
        assert np.all(np.abs(pts) <= 1.0 + 1e-12)


def test_f14_two_diagonals():
    truth = ground_truth("f14")
    assert len(truth.curves) == 2
    np.testing.assert_allclose(truth.curves[1].at(0.5), [0.5, -0.5])


@pytest.mark.parametrize("fn", ["f2", "f11", "f12", "f13", "f14"])
def test_analytic_gradient_vanishes_on_ground_truth(fn):
    truth = ground_truth(fn)
    pts = truth.dense_points(1000)
    if fn == "f13":
        # 原点は円錐の頂点で勾配が定義されない
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) > 0.0]
    grad = analytic_gradient(fn, pts[:, 0], pts[:, 1])
    assert np.max(np.hypot(grad[:, 0], grad[:, 1])) <= 1e-10


def test_f1_oracle_points_are_stationary_and_in_domain():
    truth = ground_truth("f1")
    pts = truth.isolated
    assert len(pts) > 0
    assert np.all((pts >= 0.0) & (pts <= 1.0))
    grad = analytic_gradient("f1", pts[:, 0], pts[:, 1])
    assert np.max(np.hypot(grad[:, 0], grad[:, 1])) <= 1e-10
    # 凍結されているので 2 回目も同じ配列
    assert np.array_equal(ground_truth("f1").isolated, pts)


def test_f13_gradient_is_undefined_at_origin():
    g = analytic_gradient("f13", 0.0, 0.0)
    assert np.all(np.isnan(g))


@pytest.mark.parametrize("fn", [f.value for f in BenchmarkFunction])
def test_analytic_gradient_matches_central_difference(fn):
    tf = BenchmarkFunction(fn)
    xmin, xmax, ymin, ymax = tf.domain
    rng = np.random.default_rng(1)
    x = rng.uniform(xmin + 0.05, xmax - 0.05, size=30)
    y = rng.uniform(ymin + 0.05, ymax - 0.05, size=30)
    h = 1e-6
    fd = np.column_stack(
        [
            (tf.evaluate(x + h, y) - tf.evaluate(x - h, y)) / (2 * h),
            (tf.evaluate(x, y + h) - tf.evaluate(x, y - h)) / (2 * h),
        ]
    )
    np.testing.assert_allclose(analytic_gradient(fn, x, y), fd, rtol=1e-5, atol=1e-6)


def test_ground_truth_exports_json():
    payload = ground_truth("f13").to_dict(samples_per_curve=10)
    text = json.dumps(payload)
    back = json.loads(text)
    assert back["function"] == "f13"
    assert back["isolated"] == [[0.0, 0.0]]
    assert len(back["curves"]) == 7
    assert all(len(c["points"]) == 10 for c in back["curves"])


def test_nearest_distance():
    got = nearest_distance([[0.0, 0.0], [3.0, 4.0]], [[0.0, 1.0], [3.0, 0.0]])
    np.testing.assert_allclose(got, [1.0, 4.0])
    assert np.all(np.isinf(nearest_distance([[0.0, 0.0]], np.zeros((0, 2)))))
