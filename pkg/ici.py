"""
ICI 泄漏系数、自消除映射（SCM / PASCS）及理论信干比。

w(m) 表示子载波 k 泄漏到接收子载波 j 的权重，m = k - j：

    w(m) = sin(π(m+ε)) / (N sin(π(m+ε)/N)) · exp(jπ(N-1)(m+ε)/N)

w 以 N 为周期；Σ_m |w(m)|² 在一个周期上为 1。
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from bidict import bidict

from bits import prbs
from common import ratio_db
from mapping import constellation, map_bits
from ofdm import (
    DEFAULT_N_PILOT,
    AllocationPlan,
    SubcarrierFrame,
    assemble_symbol,
    is_power_of_two,
    mirror_index,
)

logger = logging.getLogger(__name__)

SCHEMES = bidict({"standard": 0, "scm": 1, "pascs": 2})

PILOT_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class IciCoefficients:
    n_fft: int
    epsilon: float
    w: np.ndarray  # 偏移 m = -N+1 .. N-1

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.n_fft + 1, self.n_fft)

    @property
    def period(self) -> np.ndarray:
        """w(0..N-1)。"""
        return self.w[self.n_fft - 1 :]

    def at(self, m) -> np.ndarray:
        """任意整数偏移处的系数（按周期折回）。"""
        return self.period[np.mod(m, self.n_fft)]


@dataclass(frozen=True)
class CancellationScheme:
    kind: str = "pascs"
    n_pilot: int = DEFAULT_N_PILOT

    def __post_init__(self) -> None:
        if self.kind not in SCHEMES:
            raise ValueError(f"unknown scheme {self.kind!r}; choose from {list(SCHEMES)}")
        if self.kind == "pascs" and self.n_pilot < 2:
            raise ValueError("pascs needs at least 2 pilots")
        if self.kind != "pascs" and self.n_pilot != 0:
            raise ValueError(f"{self.kind} carries no pilots")

    @classmethod
    def named(cls, kind: str, n_pilot: int = DEFAULT_N_PILOT) -> "CancellationScheme":
        return cls(kind, n_pilot if kind == "pascs" else 0)

    @property
    def mirrored(self) -> bool:
        return self.kind != "standard"

    @property
    def has_pilots(self) -> bool:
        return self.n_pilot > 0


@dataclass(frozen=True)
class CirBreakdown:
    signal_power: float
    ici_data_power: float
    ici_pilot_power: float

    @property
    def interference_power(self) -> float:
        return self.ici_data_power + self.ici_pilot_power

    @property
    def cir_db(self) -> float:
        return ratio_db(self.signal_power, self.interference_power)


def ici_coefficients(n_fft: int, epsilon: float) -> IciCoefficients:
    if not is_power_of_two(n_fft):
        raise ValueError(f"n_fft {n_fft} is not a power of two")
    if abs(epsilon) >= 1.0:
        raise ValueError("|epsilon| must be < 1")
    m = np.arange(-n_fft + 1, n_fft)
    if epsilon == 0.0:
        w = (m == 0).astype(complex)
    else:
        x = m + epsilon
        den = n_fft * np.sin(np.pi * x / n_fft)
        ratio = np.divide(np.sin(np.pi * x), den, out=np.ones_like(x, dtype=float), where=den != 0)
        w = ratio * np.exp(1j * np.pi * (n_fft - 1) * x / n_fft)
    w.setflags(write=False)
    return IciCoefficients(n_fft=n_fft, epsilon=float(epsilon), w=w)


def combined_coefficients(coeffs: IciCoefficients, reference: int, offsets) -> pd.DataFrame:
    """
    参考子载波 reference 看到的三组系数（干扰子载波 k = reference + m）：

    - w：普通 OFDM；
    - w_mod：仅镜像映射（k 处 +X，N-1-k 处 -X）；
    - w_demod：镜像映射 + 镜像差分解调。
    """

    m = np.asarray(offsets)
    j = int(reference)
    w = coeffs.at(m)
    w_mod = w - coeffs.at(-1 - 2 * j - m)
    w_demod = 0.5 * (w + coeffs.at(-m) - coeffs.at(-1 - 2 * j - m) - coeffs.at(1 + 2 * j + m))
    return pd.DataFrame({"offset": m, "w": w, "w_mod": w_mod, "w_demod": w_demod})


def ici_profile(
    n_fft: int = 512,
    epsilon: float = 0.2,
    max_offset: Optional[int] = None,
    reference: Optional[int] = None,
) -> pd.DataFrame:
    """把 combined_coefficients 的模值列成表，偏移范围 -max_offset..max_offset。"""

    max_offset = n_fft // 8 if max_offset is None else int(max_offset)
    reference = n_fft // 4 if reference is None else int(reference)
    if not 0 < max_offset < n_fft // 2:
        raise ValueError(f"max_offset must lie in 1..{n_fft // 2 - 1}")
    table = combined_coefficients(
        ici_coefficients(n_fft, epsilon), reference, np.arange(-max_offset, max_offset + 1)
    )
    for col in ("w", "w_mod", "w_demod"):
        table[col] = np.abs(table[col])
    return table


def pilot_sequence(n_pilot: int) -> np.ndarray:
    """由全 1 种子的扰码序列生成的单位模 QPSK 导频，每个 OFDM 符号相同。"""

    if n_pilot < 0:
        raise ValueError("n_pilot must be nonnegative")
    if n_pilot == 0:
        return np.zeros(0, dtype=complex)
    return map_bits(np.array(prbs(2 * n_pilot)), constellation("qpsk"))


def insert_pilots(data_syms: np.ndarray, pilot_syms: np.ndarray, plan: AllocationPlan) -> SubcarrierFrame:
    pilots = np.asarray(pilot_syms, dtype=complex)
    if pilots.shape[-1] != plan.n_pilot:
        raise ValueError(f"expected {plan.n_pilot} pilots, got {pilots.shape[-1]}")
    if pilots.size and not np.allclose(np.abs(pilots), 1.0, atol=PILOT_TOLERANCE):
        raise ValueError("pilot values must have unit magnitude")
    return assemble_symbol(data_syms, pilots, plan)


def _primary(frame: SubcarrierFrame) -> np.ndarray:
    return np.sort(np.concatenate([frame.indices("data"), frame.indices("pilot")]))


def modulate_cancelling(frame: SubcarrierFrame, scheme: CancellationScheme) -> SubcarrierFrame:
    """镜像映射：k 处的符号以 -1 权重复制到 N-1-k；standard 原样返回。"""

    if not scheme.mirrored:
        return frame
    primary = _primary(frame)
    mirrors = mirror_index(primary, frame.n_fft)
    if np.any(np.isin(mirrors, primary)):
        raise ValueError("mirror carrier already holds independent data")
    if np.any(frame.values[..., mirrors] != 0):
        raise ValueError("mirror carrier is not free")
    values = frame.values.copy()
    values[..., mirrors] = -values[..., primary]
    return frame.replace_values(values)


def demodulate_cancelling(
    rx_frame: SubcarrierFrame,
    scheme: CancellationScheme,
    indices: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    返回 indices（默认数据子载波）上的判决量：
    standard 为 Y(j)，镜像方案为 (Y(j) - Y(N-1-j)) / 2。
    """

    idx = rx_frame.indices("data") if indices is None else np.asarray(indices)
    y = rx_frame.values
    if not scheme.mirrored:
        return y[..., idx]
    return 0.5 * (y[..., idx] - y[..., mirror_index(idx, rx_frame.n_fft)])


def coupling_matrix(coeffs: IciCoefficients, receivers, sources, mirrored: bool) -> np.ndarray:
    """G[j, k]：源子载波 k 上的单位符号在子载波 j 判决量中的权重。"""

    j = np.asarray(receivers)[:, None]
    k = np.asarray(sources)[None, :]
    if not mirrored:
        return coeffs.at(k - j)
    return 0.5 * (coeffs.at(k - j) + coeffs.at(j - k) - coeffs.at(-1 - k - j) - coeffs.at(k + j + 1))


def theoretical_cir(
    n_fft: int,
    epsilon: float,
    scheme: CancellationScheme,
    allocation: AllocationPlan,
) -> CirBreakdown:
    """
    对单位功率、相互独立的等概符号求期望：信号功率取数据子载波自耦合 |G_jj|² 的均值，
    A/B 分别为数据/导频子载波干扰功率之和的均值。
    """

    if abs(epsilon) >= 0.5:
        raise ValueError("|epsilon| must be < 0.5")
    if allocation.n_fft != n_fft:
        raise ValueError("allocation n_fft mismatch")
    coeffs = ici_coefficients(n_fft, epsilon)
    data = allocation.data_indices
    pilots = allocation.pilot_indices if scheme.has_pilots else np.zeros(0, dtype=np.intp)

    g_data = np.abs(coupling_matrix(coeffs, data, data, scheme.mirrored)) ** 2
    signal = float(np.mean(np.diag(g_data)))
    np.fill_diagonal(g_data, 0.0)
    ici_data = float(np.mean(g_data.sum(axis=1)))
    ici_pilot = 0.0
    if pilots.size:
        g_pilot = np.abs(coupling_matrix(coeffs, data, pilots, scheme.mirrored)) ** 2
        ici_pilot = float(np.mean(g_pilot.sum(axis=1)))
    result = CirBreakdown(signal, ici_data, ici_pilot)
    logger.debug("theoretical CIR %s eps=%.3f: %.2f dB", scheme.kind, epsilon, result.cir_db)
    return result
