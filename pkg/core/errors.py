# core/errors.py

from __future__ import annotations


class StationaryPointsError(Exception):
    """core パッケージ全体の基底例外。"""


class DomainError(StationaryPointsError, ValueError):
    """
    定義域外の入力。

    例: 負の半径 r、d <= 0、範囲外のグリッド添字、nx < 4 のグリッドなど。
    """


class GridFormatError(StationaryPointsError):
    """
    グリッド CSV の書式エラー。

    メッセージは可能な限り "line N: ..." の形で行番号を含める。
    """


class FactorizationError(StationaryPointsError):
    """パッチ行列 A の分解に失敗した（数値的に特異）。"""
