# core/oracle.py

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from .grid import FRANKE_TERMS, BenchmarkFunction

# f1 の数値オラクル設定（固定シードで凍結）
F1_ORACLE_STARTS = 10_000
F1_ORACLE_SEED = 20190611
F1_ORACLE_DEDUP = 1e-4
F1_ORACLE_GTOL = 1e-12


@dataclass(frozen=True)
class ParametricCurve:
    """t -> (x(t), y(t)), t in [t0, t1] で表した停留点の曲線。"""

    label: str
    x: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    y: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    t0: float
    t1: float

    def at(self, t: Union[float, np.ndarray]) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.stack([self.x(t) * np.ones_like(t), self.y(t) * np.ones_like(t)], axis=-1)

    def sample(self, n: int) -> np.ndarray:
        return self.at(np.linspace(self.t0, self.t1, n))


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """テスト関数の解析的な停留点集合。"""

    function: BenchmarkFunction
    isolated: np.ndarray
    curves: Tuple[ParametricCurve, ...]

    def dense_points(self, samples_per_curve: int = 1000) -> np.ndarray:
        parts = [self.isolated.reshape(-1, 2)]
        parts += [c.sample(samples_per_curve) for c in self.curves]
        return np.concatenate(parts, axis=0)

    def to_dict(self, samples_per_curve: int = 200) -> Dict:
        return {
            "function": self.function.value,
            "isolated": [[float(x), float(y)] for x, y in self.isolated],
            "curves": [
                {
                    "label": c.label,
                    "t0": c.t0,
                    "t1": c.t1,
                    "points": [[float(x), float(y)] for x, y in c.sample(samples_per_curve)],
                }
                for c in self.curves
            ],
        }


# ---------------------------------------------------------------------------
# 解析的な勾配
# ---------------------------------------------------------------------------


def _franke_grad_hess(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """f1 の勾配 (..., 2) とヘッセ行列 (..., 2, 2)。"""
    grad = np.zeros(np.shape(x) + (2,))
    hess = np.zeros(np.shape(x) + (2, 2))
    for amp, (sx, qx), (sy, qy, py) in FRANKE_TERMS:
        ux = 9.0 * x + sx
        uy = 9.0 * y + sy
        term = amp * np.exp(-(ux**2) / qx - uy**py / qy)
        gx1 = -18.0 * ux / qx
        gx2 = -162.0 / qx
        if py == 2:
            gy1 = -18.0 * uy / qy
            gy2 = -162.0 / qy
        else:
            gy1 = np.full_like(uy, -9.0 / qy)
            gy2 = 0.0
        grad[..., 0] += term * gx1
        grad[..., 1] += term * gy1
        hess[..., 0, 0] += term * (gx2 + gx1 * gx1)
        hess[..., 0, 1] += term * gx1 * gy1
        hess[..., 1, 0] += term * gx1 * gy1
        hess[..., 1, 1] += term * (gy2 + gy1 * gy1)
    return grad, hess


def analytic_gradient(tf: Union[BenchmarkFunction, str], x, y) -> np.ndarray:
    """
    テスト関数の解析的な勾配 (..., 2)。

    f13 は原点で微分不可能（円錐の頂点）なので、原点では nan を返す。
    """
    tf = BenchmarkFunction(tf)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if tf is BenchmarkFunction.F1:
        return _franke_grad_hess(x, y)[0]
    if tf is BenchmarkFunction.F2:
        gx = 3.0 * np.cos(3.0 * x) * np.cos(3.0 * y)
        gy = -3.0 * np.sin(3.0 * x) * np.sin(3.0 * y)
    elif tf is BenchmarkFunction.F11:
        gx = -2.0 * (x - y)
        gy = 2.0 * (x - y)
    elif tf is BenchmarkFunction.F12:
        c = np.cos(x + y**2)
        gx = c
        gy = 2.0 * y * c
    elif tf is BenchmarkFunction.F13:
        r = np.hypot(x, y)
        safe = np.where(r > 0.0, r, 1.0)
        radial = 3.0 * np.pi * np.cos(3.0 * np.pi * (r + 0.25))
        gx = np.where(r > 0.0, radial * x / safe, np.nan)
        gy = np.where(r > 0.0, radial * y / safe, np.nan)
    else:
        u = x**2 - y**2
        gx = -8.0 * x * u
        gy = 8.0 * y * u
    return np.stack([gx, gy], axis=-1)


# ---------------------------------------------------------------------------
# 正解集合
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _franke_oracle() -> np.ndarray:
    """
    f1 の停留点を解析勾配上のマルチスタート Newton で求める。

    f1 には閉じた形の停留点がないので、固定シードの乱数スタートで一度だけ計算して凍結する。
    """
    rng = np.random.default_rng(F1_ORACLE_SEED)
    x = rng.uniform(0.0, 1.0, size=(F1_ORACLE_STARTS, 2))
    active = np.ones(len(x), dtype=bool)
    converged = np.zeros(len(x), dtype=bool)

    for _ in range(100):
        grad, hess = _franke_grad_hess(x[:, 0], x[:, 1])
        gnorm = np.hypot(grad[:, 0], grad[:, 1])
        done = active & (gnorm <= F1_ORACLE_GTOL)
        converged |= done
        active &= ~done
        if not active.any():
            break
        a, b, c, e = hess[:, 0, 0], hess[:, 0, 1], hess[:, 1, 0], hess[:, 1, 1]
        det = a * e - b * c
        active &= np.abs(det) > 1e-14 * (a * a + b * b + c * c + e * e)
        safe = np.where(active, det, 1.0)
        step = np.column_stack(
            [-(e * grad[:, 0] - b * grad[:, 1]) / safe, -(a * grad[:, 1] - c * grad[:, 0]) / safe]
        )
        x = np.where(active[:, None], x + step, x)
        # 領域から大きく外れたものは捨てる
        active &= np.all((x > -0.5) & (x < 1.5), axis=1)

    inside = np.all((x >= 0.0) & (x <= 1.0), axis=1)
    found = x[converged & inside]

    kept: List[np.ndarray] = []
    for p in found:
        if all(math.hypot(*(p - q)) > F1_ORACLE_DEDUP for q in kept):
            kept.append(p)
    pts = np.array(kept).reshape(-1, 2)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    pts.setflags(write=False)
    return pts


def _segment(label: str, sx: float, sy: float) -> ParametricCurve:
    return ParametricCurve(label, lambda t: sx * t, lambda t: sy * t, -1.0, 1.0)


def _circle(label: str, r: float, t0: float, t1: float) -> ParametricCurve:
    return ParametricCurve(label, lambda t: r * np.cos(t), lambda t: r * np.sin(t), t0, t1)


def _f2_points() -> np.ndarray:
    xmin, xmax, ymin, ymax = BenchmarkFunction.F2.domain
    odd = [math.pi / 6 + k * math.pi / 3 for k in range(-10, 10)]
    even = [k * math.pi / 3 for k in range(-10, 10)]
    odd = [v for v in odd if xmin < v < xmax]
    even = [v for v in even if xmin < v < xmax]
    pts = [(a, b) for a in odd for b in even] + [(b, a) for a in odd for b in even]
    arr = np.array(pts)
    return arr[np.lexsort((arr[:, 1], arr[:, 0]))]


def _f12_curves() -> List[ParametricCurve]:
    xmin, xmax, ymin, ymax = BenchmarkFunction.F12.domain
    curves = []
    for k in range(-3, 4):
        c = math.pi / 2 + k * math.pi
        lo2 = max(c - xmax, 0.0)
        hi2 = min(c - xmin, ymax**2)
        if lo2 > hi2:
            continue

        def x_of(t: np.ndarray, c: float = c) -> np.ndarray:
            return c - t**2

        def y_of(t: np.ndarray) -> np.ndarray:
            return t

        if lo2 == 0.0:
            curves.append(ParametricCurve(f"parabola k={k}", x_of, y_of, -math.sqrt(hi2), math.sqrt(hi2)))
        else:
            curves.append(ParametricCurve(f"parabola k={k} lower", x_of, y_of, -math.sqrt(hi2), -math.sqrt(lo2)))
            curves.append(ParametricCurve(f"parabola k={k} upper", x_of, y_of, math.sqrt(lo2), math.sqrt(hi2)))
    return curves


def _f13_curves() -> List[ParametricCurve]:
    curves = []
    k = 1
    while True:
        r = -1.0 / 12.0 + k / 3.0
        if r > math.sqrt(2.0):
            break
        if r <= 1.0:
            curves.append(_circle(f"circle r={r:.6g}", r, 0.0, 2.0 * math.pi))
        else:
            th = math.acos(1.0 / r)
            for q in range(4):
                base = q * math.pi / 2.0
                curves.append(_circle(f"arc r={r:.6g} q={q}", r, base + th, base + math.pi / 2.0 - th))
        k += 1
    return curves


def ground_truth(tf: Union[BenchmarkFunction, str]) -> GroundTruth:
    tf = BenchmarkFunction(tf)
    empty = np.zeros((0, 2))
    if tf is BenchmarkFunction.F1:
        return GroundTruth(tf, np.array(_franke_oracle()), ())
    if tf is BenchmarkFunction.F2:
        return GroundTruth(tf, _f2_points(), ())
    if tf is BenchmarkFunction.F11:
        return GroundTruth(tf, empty, (_segment("diagonal", 1.0, 1.0),))
    if tf is BenchmarkFunction.F12:
        return GroundTruth(tf, empty, tuple(_f12_curves()))
    if tf is BenchmarkFunction.F13:
        return GroundTruth(tf, np.array([[0.0, 0.0]]), tuple(_f13_curves()))
    return GroundTruth(tf, empty, (_segment("diagonal", 1.0, 1.0), _segment("anti-diagonal", 1.0, -1.0)))


def nearest_distance(points: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """各 point から targets の最近点までの距離。"""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    if len(targets) == 0:
        return np.full(len(points), np.inf)
    dist, _ = cKDTree(targets).query(points)
    return np.asarray(dist, dtype=float)
