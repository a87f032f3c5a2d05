# core/kernels.py

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .errors import DomainError

ArrayLike = Union[float, np.ndarray]


class KernelKind(str, Enum):
    """
    使用可能な RBF の種類。

    値は CLI の --kernel にそのまま対応する（gaussian / iq / wendland）。
    """

    GAUSSIAN = "gaussian"
    INVERSE_QUADRIC = "iq"
    WENDLAND31 = "wendland"

    @property
    def omega(self) -> float:
        """α·r* = ω となる定数（r* は非停留変曲点の半径）。"""
        return _OMEGA[self]


_OMEGA = {
    KernelKind.GAUSSIAN: 1.0 / math.sqrt(2.0),
    KernelKind.INVERSE_QUADRIC: 1.0 / math.sqrt(3.0),
    KernelKind.WENDLAND31: 0.25,
}


def _check_radius(r: ArrayLike) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise DomainError("radius r must be >= 0")
    return arr


def _out(value: np.ndarray, r: ArrayLike) -> ArrayLike:
    # スカラー入力にはスカラー float を返す
    if np.ndim(r) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class Kernel:
    """
    RBF φ(r) とその導関数。

    - kind: RBF の種類
    - alpha: 形状パラメータ α (> 0, 単位は 1/長さ)

    psi(r) = φ'(r)/r、eta(r) = (φ''(r)·r - φ'(r))/r^3 は勾配とそのヤコビアンで使う。
    どちらも r = 0 では解析的な極限値を返すので、中心点上でも分岐なしで評価できる。
    """

    kind: KernelKind
    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", KernelKind(self.kind))
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise DomainError(f"shape parameter alpha must be > 0, got {self.alpha!r}")

    @property
    def omega(self) -> float:
        return self.kind.omega

    def phi(self, r: ArrayLike) -> ArrayLike:
        rr = _check_radius(r)
        a = self.alpha
        if self.kind is KernelKind.GAUSSIAN:
            val = np.exp(-((a * rr) ** 2))
        elif self.kind is KernelKind.INVERSE_QUADRIC:
            val = 1.0 / (1.0 + (a * rr) ** 2)
        else:
            t = np.maximum(1.0 - a * rr, 0.0)
            val = t**4 * (4.0 * a * rr + 1.0)
        return _out(val, r)

    def phi_prime(self, r: ArrayLike) -> ArrayLike:
        rr = _check_radius(r)
        return _out(rr * self.psi_array(rr), r)

    def phi_second(self, r: ArrayLike) -> ArrayLike:
        rr = _check_radius(r)
        a = self.alpha
        a2 = a * a
        if self.kind is KernelKind.GAUSSIAN:
            val = (4.0 * a2 * a2 * rr**2 - 2.0 * a2) * np.exp(-((a * rr) ** 2))
        elif self.kind is KernelKind.INVERSE_QUADRIC:
            val = (6.0 * a2 * a2 * rr**2 - 2.0 * a2) / (1.0 + (a * rr) ** 2) ** 3
        else:
            t = np.maximum(1.0 - a * rr, 0.0)
            val = -20.0 * a2 * t**2 * (1.0 - 4.0 * a * rr)
        return _out(val, r)

    def psi(self, r: ArrayLike) -> ArrayLike:
        rr = _check_radius(r)
        return _out(self.psi_array(rr), r)

    def eta(self, r: ArrayLike) -> ArrayLike:
        rr = _check_radius(r)
        return _out(self.eta_array(rr), r)

    # 以下の *_array は検証済みの非負 float 配列をそのまま受け取る（Newton の内側ループ用）

    def psi_array(self, rr: np.ndarray) -> np.ndarray:
        a = self.alpha
        a2 = a * a
        if self.kind is KernelKind.GAUSSIAN:
            return -2.0 * a2 * np.exp(-((a * rr) ** 2))
        if self.kind is KernelKind.INVERSE_QUADRIC:
            return -2.0 * a2 / (1.0 + (a * rr) ** 2) ** 2
        t = np.maximum(1.0 - a * rr, 0.0)
        return -20.0 * a2 * t**3

    def eta_array(self, rr: np.ndarray) -> np.ndarray:
        a = self.alpha
        a4 = a**4
        if self.kind is KernelKind.GAUSSIAN:
            return 4.0 * a4 * np.exp(-((a * rr) ** 2))
        if self.kind is KernelKind.INVERSE_QUADRIC:
            return 8.0 * a4 / (1.0 + (a * rr) ** 2) ** 3
        # Wendland: η = 60α^3 (1-αr)_+^2 / r は r -> 0 で発散する。
        # ヤコビアンでは常に η·(x-x_m)(x-x_m)^T の形で使われ、その積は 0 に収束するので
        # r = 0 では 0 を返す。
        t = np.maximum(1.0 - a * rr, 0.0)
        safe = np.where(rr > 0.0, rr, 1.0)
        return np.where(rr > 0.0, 60.0 * a**3 * t**2 / safe, 0.0)


def shape_parameter(kind: Union[KernelKind, str], d: float) -> float:
    """
    形状パラメータ α = ω / (3d)。

    3d は 4x4 パッチ内の点間の最大距離。その距離に φ の変曲点半径が来るように α を選ぶ。
    """
    if not (d > 0.0 and math.isfinite(d)):
        raise DomainError(f"diagonal step d must be > 0, got {d!r}")
    return KernelKind(kind).omega / (3.0 * d)


def kernel_for_grid(kind: Union[KernelKind, str], d: float) -> Kernel:
    return Kernel(KernelKind(kind), shape_parameter(kind, d))
