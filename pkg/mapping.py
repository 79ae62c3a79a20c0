"""
星座映射与硬判决解映射：QPSK / 16QAM / 64QAM，格雷编码，单位平均符号能量。

每个轴独立做格雷编码：电平按升序编号 i，标签为 i ^ (i >> 1)；
一个符号的比特前一半决定 I 路，后一半决定 Q 路，标签整数按 MSB 在前解释。
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from bidict import bidict

from bits import BitBlock, BitsLike, _as_bits

# 调制名 <-> 阶数
MODULATIONS = bidict({"qpsk": 4, "qam16": 16, "qam64": 64})

# 单位平均能量的归一化因子：sqrt(2(M-1)/3)
NORMALIZATION = {4: np.sqrt(2.0), 16: np.sqrt(10.0), 64: np.sqrt(42.0)}


@dataclass(frozen=True, eq=False)
class Constellation:
    order: int
    points: np.ndarray
    labels: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(self.order).bit_length() - 1

    @property
    def name(self) -> str:
        return MODULATIONS.inverse[self.order]

    @property
    def min_distance(self) -> float:
        return float(2.0 / NORMALIZATION[self.order])

    @property
    def energies(self) -> np.ndarray:
        return np.abs(self.points) ** 2


def _axis_levels(bits_per_axis: int) -> np.ndarray:
    """按轴标签返回电平：levels[g] 为格雷标签 g 对应的幅度。"""

    n_levels = 1 << bits_per_axis
    index = np.arange(n_levels)
    gray = index ^ (index >> 1)
    levels = np.empty(n_levels, dtype=float)
    levels[gray] = 2.0 * index - (n_levels - 1)
    return levels


@lru_cache(maxsize=None)
def constellation(modulation: Union[str, int]) -> Constellation:
    order = MODULATIONS[modulation] if isinstance(modulation, str) else int(modulation)
    if order not in MODULATIONS.inverse:
        raise ValueError(f"unsupported modulation {modulation!r}; choose from {list(MODULATIONS)}")
    half = (order.bit_length() - 1) // 2
    levels = _axis_levels(half)
    labels = np.arange(order)
    points = (levels[labels >> half] + 1j * levels[labels & ((1 << half) - 1)]) / NORMALIZATION[order]
    points.setflags(write=False)
    labels.setflags(write=False)
    return Constellation(order=order, points=points, labels=labels)


def map_bits(bits: BitsLike, c: Constellation) -> np.ndarray:
    arr = _as_bits(bits)
    k = c.bits_per_symbol
    if arr.size % k:
        raise ValueError(f"{arr.size} bits do not split into {k}-bit groups")
    if arr.size == 0:
        return np.zeros(0, dtype=complex)
    weights = 1 << np.arange(k - 1, -1, -1)
    labels = arr.reshape(-1, k).astype(np.int64) @ weights
    return c.points[labels]


def nearest_labels(symbols: np.ndarray, c: Constellation) -> np.ndarray:
    """最近星座点的标签；距离相等时取最小标签（argmin 取第一个）。"""

    sym = np.asarray(symbols, dtype=complex).reshape(-1)
    return np.argmin(np.abs(sym[:, None] - c.points[None, :]) ** 2, axis=1)


def labels_to_bits(labels: np.ndarray, c: Constellation) -> np.ndarray:
    k = c.bits_per_symbol
    shifts = np.arange(k - 1, -1, -1)
    return ((np.asarray(labels)[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def demap_hard(symbols: np.ndarray, c: Constellation) -> BitBlock:
    sym = np.asarray(symbols, dtype=complex).reshape(-1)
    if sym.size == 0:
        raise ValueError("nothing to demap")
    return BitBlock(labels_to_bits(nearest_labels(sym, c), c), "interleaved")
