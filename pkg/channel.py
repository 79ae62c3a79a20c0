"""
SUI-1…6 三径 Rician/Rayleigh 抽头延迟线信道、圆滑多普勒谱、发射天线相关、增益归一化，
以及平坦 Rayleigh / AWGN 参考信道。
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.special import i0e

from common import as_rng, db_to_linear
from ofdm import IqBuffer, fft, ifft

logger = logging.getLogger(__name__)

UPDATE_MODES = ("block", "continuous")

# 连续模式下信道过程的更新率 = 该倍数 × 最大多普勒频率
DOPPLER_OVERSAMPLING = 32
MIN_DOPPLER_GRID = 1024

TERRAIN_DESCRIPTIONS: Dict[str, str] = {
    "C": "Mostly flat terrain with light tree densities",
    "B": "Hilly terrain with light tree density or flat terrain with moderate to heavy tree density",
    "A": "Hilly terrain with moderate to heavy tree density",
}

# 型号 -> (各径功率 dB, K 因子, 时延 µs, 最大多普勒 Hz, 天线相关系数, 增益归一化 dB, 地形)
SUI_TABLE: Dict[int, Tuple] = {
    1: ((0, -15, -20), (4, 0, 0), (0.0, 0.4, 0.9), (0.4, 0.3, 0.5), 0.7, -0.1771, "C"),
    2: ((0, -12, -15), (2, 0, 0), (0.0, 0.4, 1.1), (0.2, 0.15, 0.25), 0.5, -0.3930, "C"),
    3: ((0, -5, -10), (1, 0, 0), (0.0, 0.4, 0.9), (0.4, 0.3, 0.5), 0.4, -1.5113, "B"),
    4: ((0, -4, -8), (0, 0, 0), (0.0, 0.5, 4.0), (0.2, 0.15, 0.25), 0.3, -1.9218, "B"),
    5: ((0, -5, -10), (0, 0, 0), (0.0, 4.0, 10.0), (2.0, 1.5, 2.5), 0.3, -1.5113, "A"),
    6: ((0, -10, -14), (0, 0, 0), (0.0, 14.0, 20.0), (0.4, 0.3, 0.5), 0.3, -0.5683, "A"),
}


@dataclass(frozen=True)
class SuiProfile:
    name: str
    tap_power_db: Tuple[float, ...]
    k_factor: Tuple[float, ...]
    tap_delay_us: Tuple[float, ...]
    max_doppler_hz: Tuple[float, ...]
    antenna_corr: float = 0.0
    gain_norm_db: float = 0.0
    terrain: Optional[str] = None

    def __post_init__(self) -> None:
        n = len(self.tap_power_db)
        if n == 0 or not (len(self.k_factor) == len(self.tap_delay_us) == len(self.max_doppler_hz) == n):
            raise ValueError("per-tap parameter lists must be nonempty and equally long")
        if self.tap_delay_us[0] != 0:
            raise ValueError("first tap delay must be 0")
        if any(b <= a for a, b in zip(self.tap_delay_us, self.tap_delay_us[1:])):
            raise ValueError("tap delays must be strictly increasing")
        if any(k < 0 for k in self.k_factor):
            raise ValueError("K factors must be nonnegative")
        if self.tap_power_db[0] != 0 or any(p > 0 for p in self.tap_power_db):
            raise ValueError("tap powers must be <= 0 dB with the first tap at 0 dB")
        if not 0.0 <= self.antenna_corr <= 1.0:
            raise ValueError("antenna_corr must lie in [0, 1]")
        if self.terrain is not None and self.terrain not in TERRAIN_DESCRIPTIONS:
            raise ValueError(f"unknown terrain {self.terrain!r}")

    @property
    def n_taps(self) -> int:
        return len(self.tap_power_db)

    @property
    def tap_power(self) -> np.ndarray:
        return db_to_linear(self.tap_power_db)

    @property
    def gain_norm(self) -> float:
        return float(db_to_linear(self.gain_norm_db))

    @property
    def max_delay_us(self) -> float:
        return float(self.tap_delay_us[-1])

    def delay_samples(self, sample_rate: float) -> np.ndarray:
        """时延四舍五入到最近的样点；两径落到同一样点时拒绝。"""

        if sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        delays = np.rint(np.asarray(self.tap_delay_us) * 1e-6 * sample_rate).astype(np.intp)
        if np.unique(delays).size != delays.size:
            raise ValueError(
                f"{self.name}: taps {list(self.tap_delay_us)} us collide at {sample_rate:g} Hz sampling"
            )
        return delays


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """tap_gains 形状 (n_tx, n_taps, T)：块模式 T=1，连续模式 T=duration。"""

    tap_gains: np.ndarray
    tap_sample_delays: np.ndarray
    sample_rate: float
    update_mode: str = "block"
    seed: Optional[int] = None

    @property
    def n_tx(self) -> int:
        return int(self.tap_gains.shape[0])

    @property
    def duration(self) -> int:
        return int(self.tap_gains.shape[-1])

    def gains_at(self, sample_index: int) -> np.ndarray:
        """(n_tx, n_taps) 在给定样点处的抽头增益。"""
        t = min(max(int(sample_index), 0), self.duration - 1)
        return self.tap_gains[..., t]


def sui_profile(model: Union[int, str]) -> SuiProfile:
    if isinstance(model, str):
        key = model.lower().replace("-", "")
        if not key.startswith("sui") or not key[3:].isdigit():
            raise ValueError(f"unknown SUI model {model!r}")
        model = int(key[3:])
    if model not in SUI_TABLE:
        raise ValueError(f"SUI model must be 1..6, got {model}")
    power, k, delay, doppler, corr, norm, terrain = SUI_TABLE[model]
    return SuiProfile(
        name=f"sui{model}",
        tap_power_db=tuple(float(p) for p in power),
        k_factor=tuple(float(v) for v in k),
        tap_delay_us=tuple(float(d) for d in delay),
        max_doppler_hz=tuple(float(f) for f in doppler),
        antenna_corr=float(corr),
        gain_norm_db=float(norm),
        terrain=terrain,
    )


def flat_rayleigh_profile() -> SuiProfile:
    """单径、K=0 的平坦 Rayleigh 参考信道。"""
    return SuiProfile("rayleigh", (0.0,), (0.0,), (0.0,), (0.0,))


def rounded_doppler_spectrum(f, f_m: float) -> np.ndarray:
    """S(f) = 1 - 1.72 f0² + 0.785 f0⁴，f0 = f/f_m，|f0| > 1 处为 0。"""

    f0 = np.asarray(f, dtype=float) / f_m
    spectrum = 1.0 - 1.72 * f0**2 + 0.785 * f0**4
    return np.where(np.abs(f0) <= 1.0, spectrum, 0.0)


def antenna_mixing(n_tx: int, rho: float) -> np.ndarray:
    """相关矩阵 R[a, b] = rho^|a-b| 的 Cholesky 因子（两天线即 [[1, rho], [rho, 1]]）。"""

    idx = np.arange(n_tx)
    corr = rho ** np.abs(idx[:, None] - idx[None, :])
    if rho >= 1.0:
        return np.ones((n_tx, n_tx)) * (idx[None, :] == 0)
    return np.linalg.cholesky(corr)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _rician_weights(k_factor) -> Tuple[np.ndarray, np.ndarray]:
    k = np.asarray(k_factor, dtype=float)
    inf = np.isinf(k)
    k_safe = np.where(inf, 0.0, k)
    los = np.where(inf, 1.0, np.sqrt(k_safe / (k_safe + 1.0)))
    diffuse = np.where(inf, 0.0, np.sqrt(1.0 / (k_safe + 1.0)))
    return los, diffuse


def _shape_taps(profile: SuiProfile, diffuse: np.ndarray, n_tx: int) -> np.ndarray:
    """diffuse 形状 (..., n_tx, n_taps, T)：单位方差过程 -> 带 LOS、功率与天线相关的抽头增益。"""

    los_w, diffuse_w = _rician_weights(profile.k_factor)
    mixed = np.einsum("ab,...btn->...atn", antenna_mixing(n_tx, profile.antenna_corr), diffuse)
    amp = np.sqrt(profile.tap_power * profile.gain_norm)
    gains = los_w[:, None] + diffuse_w[:, None] * mixed
    return amp[:, None] * gains


def draw_tap_gains(
    profile: SuiProfile,
    n_tx: int,
    n_draws: int,
    seed: Union[int, np.random.Generator, None] = None,
) -> np.ndarray:
    """n_draws 次独立的准静态实现，形状 (n_draws, n_tx, n_taps)。"""

    rng = as_rng(seed)
    diffuse = _complex_normal(rng, (n_draws, n_tx, profile.n_taps, 1))
    return _shape_taps(profile, diffuse, n_tx)[..., 0]


def doppler_process(
    n_samples: int,
    f_m: float,
    update_rate: float,
    seed: Union[int, np.random.Generator, None] = None,
    size: Tuple[int, ...] = (),
) -> np.ndarray:
    """
    圆滑多普勒谱整形的单位方差复高斯过程，按 update_rate 采样。
    白噪声经频域谱模板滤波；长度取不小于 n_samples 的 2 的幂。
    """

    rng = as_rng(seed)
    n_grid = max(MIN_DOPPLER_GRID, 1 << max(int(n_samples) - 1, 1).bit_length())
    if f_m <= 0:
        return np.broadcast_to(_complex_normal(rng, size + (1,)), size + (n_samples,)).copy()
    freqs = np.fft.fftfreq(n_grid, d=1.0 / update_rate)
    mask = np.sqrt(rounded_doppler_spectrum(freqs, f_m))
    if not np.any(mask[1:] > 0):
        raise ValueError("Doppler grid too coarse for the requested spectrum")
    white = _complex_normal(rng, size + (n_grid,))
    shaped = ifft(fft(white) * mask)
    shaped /= math.sqrt(np.mean(mask**2))
    return shaped[..., :n_samples]


def realize_channel(
    profile: SuiProfile,
    n_tx: int,
    duration: int,
    sample_rate: float,
    update_mode: str = "block",
    seed: Union[int, np.random.Generator, None] = None,
) -> ChannelRealization:
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    if update_mode not in UPDATE_MODES:
        raise ValueError(f"update_mode must be one of {UPDATE_MODES}")
    if n_tx < 1 or duration < 1:
        raise ValueError("n_tx and duration must be positive")
    delays = profile.delay_samples(sample_rate)
    record = seed if isinstance(seed, (int, np.integer)) else None
    rng = as_rng(seed)

    f_max = max(profile.max_doppler_hz)
    if update_mode == "block" or f_max <= 0:
        gains = draw_tap_gains(profile, n_tx, 1, rng)[0][..., None]
    else:
        update_rate = DOPPLER_OVERSAMPLING * f_max
        n_up = int(math.ceil(duration / sample_rate * update_rate)) + 2
        diffuse = np.empty((n_tx, profile.n_taps, n_up), dtype=complex)
        for tap, f_m in enumerate(profile.max_doppler_hz):
            diffuse[:, tap, :] = doppler_process(n_up, f_m, update_rate, rng, size=(n_tx,))
        slow = _shape_taps(profile, diffuse, n_tx)
        t_up = np.arange(n_up) / update_rate
        t = np.arange(duration) / sample_rate
        gains = np.empty((n_tx, profile.n_taps, duration), dtype=complex)
        for a in range(n_tx):
            for tap in range(profile.n_taps):
                gains[a, tap] = np.interp(t, t_up, slow[a, tap].real) + 1j * np.interp(t, t_up, slow[a, tap].imag)
    logger.debug("%s realization: %s mode, delays %s samples", profile.name, update_mode, delays.tolist())
    return ChannelRealization(gains, delays, float(sample_rate), update_mode, record)


def apply_channel(x: IqBuffer, ch: ChannelRealization) -> IqBuffer:
    """
    y(n) = Σ_a Σ_k g_{a,k}(n)·x_a(n - d_k)，各发射天线在单接收天线处相加。
    x.samples 形状 (n_tx, L)；单天线可给一维。
    """

    samples = x.samples if x.samples.ndim == 2 else x.samples.reshape(1, -1)
    n_tx, length = samples.shape
    if n_tx != ch.n_tx:
        raise ValueError(f"buffer has {n_tx} antenna streams, realization has {ch.n_tx}")
    if ch.duration not in (1, length):
        raise ValueError(f"realization covers {ch.duration} samples, buffer has {length}")
    y = np.zeros(length, dtype=complex)
    for tap, d in enumerate(ch.tap_sample_delays):
        if d >= length:
            continue
        g = ch.tap_gains[:, tap, :]
        shifted = np.zeros_like(samples)
        shifted[:, d:] = samples[:, : length - d]
        y += np.sum(g * shifted, axis=0)
    return IqBuffer(y, x.sample_rate, x.n_fft, x.cp_len)


def frequency_response(ch: ChannelRealization, n_fft: int, sample_index: int = 0) -> np.ndarray:
    """(n_tx, n_fft)：H_a(k) = Σ_tap g·exp(-j2πk d/N)，取给定样点处的抽头增益。"""

    k = np.arange(n_fft)
    phase = np.exp(-2j * np.pi * np.outer(ch.tap_sample_delays, k) / n_fft)
    return ch.gains_at(sample_index) @ phase


def add_awgn(
    x: IqBuffer,
    snr_db: float,
    signal_power_ref: float,
    seed: Union[int, np.random.Generator, None] = None,
) -> IqBuffer:
    if signal_power_ref <= 0:
        raise ValueError("signal_power_ref must be positive")
    if math.isinf(snr_db) and snr_db > 0:
        return x
    variance = signal_power_ref / float(db_to_linear(snr_db))
    noise = math.sqrt(variance) * _complex_normal(as_rng(seed), x.samples.shape)
    return x.with_samples(x.samples + noise)


def rician_pdf(r, sigma_sq: float, a_los: float):
    """
    p(r) = r/σ² · exp(-(r² + A²)/(2σ²)) · I0(rA/σ²)，A = 0 时退化为 Rayleigh。
    用指数缩放的 i0e 计算，大宗量不溢出。
    """

    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or sigma_sq <= 0 or a_los < 0:
        raise ValueError("rician_pdf needs r >= 0, sigma_sq > 0, a_los >= 0")
    pdf = r_arr / sigma_sq * np.exp(-((r_arr - a_los) ** 2) / (2.0 * sigma_sq)) * i0e(r_arr * a_los / sigma_sq)
    return float(pdf) if pdf.ndim == 0 else pdf
