"""基于相邻两个 OFDM 符号导频的最大似然 CFO 估计与校正。"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from common import EstimationError
from ofdm import IqBuffer, cfo_rotation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CfoEstimate:
    epsilon_hat: float
    n_pilots_used: int

    def __post_init__(self) -> None:
        if abs(self.epsilon_hat) > 0.5:
            raise ValueError(f"epsilon_hat {self.epsilon_hat} outside [-0.5, 0.5]")
        if self.n_pilots_used < 1:
            raise ValueError("an estimate needs at least one pilot")


def max_unambiguous_cfo(n_fft: int, cp_len: int) -> float:
    """相邻 FFT 窗相隔 N+CP 个样点时，估计器不模糊的 |ε| 上界。"""
    return 0.5 * n_fft / (n_fft + cp_len)


def estimate_cfo(
    pilots_sym_i: np.ndarray,
    pilots_sym_i1: np.ndarray,
    inter_symbol_samples: int,
    n_fft: int,
) -> CfoEstimate:
    """
    ε̂ = arg(Σ_p conj(X_i,p)·X_i+1,p) / 2π · N / (N+CP)

    两个 FFT 窗实际相隔 inter_symbol_samples = N+CP 个样点，末项把每 N+CP 样点的
    旋转换算回每 N 样点。输入可以是二维（符号对 × 导频），所有项一起求和。
    """

    a = np.asarray(pilots_sym_i, dtype=complex)
    b = np.asarray(pilots_sym_i1, dtype=complex)
    if a.shape != b.shape or a.size == 0:
        raise ValueError(f"pilot sequences must be nonempty and equal in shape: {a.shape} vs {b.shape}")
    if inter_symbol_samples < n_fft:
        raise ValueError("inter_symbol_samples must be at least n_fft")
    total = np.sum(np.conj(a) * b)
    if total == 0:
        raise EstimationError("pilot cross-correlation sum is zero")
    eps_hat = float(np.angle(total)) / (2.0 * np.pi) * n_fft / inter_symbol_samples
    logger.debug("CFO estimate %.5f from %d pilot pairs", eps_hat, a.size)
    return CfoEstimate(epsilon_hat=eps_hat, n_pilots_used=int(a.shape[-1]))


def correct_cfo(
    x: IqBuffer,
    estimate: CfoEstimate,
    n_fft: Optional[int] = None,
    start_index: int = 0,
) -> IqBuffer:
    if estimate.epsilon_hat == 0.0:
        return x
    n_fft = n_fft or x.n_fft
    rot = cfo_rotation(x.samples.size, -estimate.epsilon_hat, n_fft, start_index)
    return x.with_samples(x.samples * rot.reshape(x.samples.shape))
