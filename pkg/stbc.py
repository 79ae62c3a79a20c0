"""
2×1 Alamouti 空时分组码。

    时隙 1: 天线 1 发 s1，天线 2 发 s2
    时隙 2: 天线 1 发 -s2*，天线 2 发 s1*

    s̃1 = h1*·r1 + h2·r2* = (|h1|²+|h2|²)·s1 + 噪声
    s̃2 = h2*·r1 - h1·r2* = (|h1|²+|h2|²)·s2 + 噪声

所有函数都接受数组，逐元素（逐子载波）计算。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from common import NumericalError
from mapping import Constellation


@dataclass(frozen=True, eq=False)
class StbcPair:
    s1: np.ndarray
    s2: np.ndarray

    @property
    def slot1_tx(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.s1, self.s2

    @property
    def slot2_tx(self) -> Tuple[np.ndarray, np.ndarray]:
        return -np.conj(self.s2), np.conj(self.s1)

    @property
    def matrix(self) -> np.ndarray:
        """发送矩阵：行为时隙，列为天线。"""
        return np.array([self.slot1_tx, self.slot2_tx], dtype=complex)


@dataclass(frozen=True, eq=False)
class ChannelGains:
    h1: np.ndarray
    h2: np.ndarray

    @property
    def alpha_sq(self) -> np.ndarray:
        return np.abs(self.h1) ** 2 + np.abs(self.h2) ** 2


def stbc_encode(s1, s2) -> StbcPair:
    return StbcPair(np.asarray(s1, dtype=complex), np.asarray(s2, dtype=complex))


def alamouti_streams(symbols: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    把 (..., 2P, K) 的符号序列按相邻两个 OFDM 符号配对编码，
    返回两根天线各自的 (..., 2P, K) 发送序列。
    """

    x = np.asarray(symbols, dtype=complex)
    if x.shape[-2] % 2:
        raise ValueError("Alamouti coding needs an even number of OFDM symbols")
    pair = stbc_encode(x[..., 0::2, :], x[..., 1::2, :])
    ant1 = np.empty_like(x)
    ant2 = np.empty_like(x)
    ant1[..., 0::2, :], ant2[..., 0::2, :] = pair.slot1_tx
    ant1[..., 1::2, :], ant2[..., 1::2, :] = pair.slot2_tx
    return ant1, ant2


def stbc_combine(r1, r2, h: ChannelGains) -> Tuple[np.ndarray, np.ndarray]:
    r1 = np.asarray(r1, dtype=complex)
    r2 = np.asarray(r2, dtype=complex)
    s_tilde1 = np.conj(h.h1) * r1 + h.h2 * np.conj(r2)
    s_tilde2 = np.conj(h.h2) * r1 - h.h1 * np.conj(r2)
    return s_tilde1, s_tilde2


def stbc_ml_decide(
    s_tilde: np.ndarray,
    h: Union[ChannelGains, np.ndarray, float],
    c: Constellation,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    ML 判决：argmin_s |s̃ - s|² + (α² - 1)|s|²。α² = 0 的位置记为擦除，
    判决值取标签 0 的星座点。返回 (判决点, 擦除掩码)。
    """

    s_tilde = np.asarray(s_tilde, dtype=complex)
    alpha_sq = h.alpha_sq if isinstance(h, ChannelGains) else np.asarray(h, dtype=float)
    alpha_sq = np.broadcast_to(alpha_sq, s_tilde.shape)
    if not (np.all(np.isfinite(s_tilde)) and np.all(np.isfinite(alpha_sq))):
        raise NumericalError("non-finite STBC decision variable")
    pts = c.points
    metric = np.abs(s_tilde[..., None] - pts) ** 2 + (alpha_sq[..., None] - 1.0) * c.energies
    decided = pts[np.argmin(metric, axis=-1)]
    erased = alpha_sq <= 0.0
    if np.any(erased):
        decided = np.where(erased, pts[0], decided)
    return decided, erased
