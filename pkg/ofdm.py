"""
OFDM 核心：基 2 FFT/IFFT、子载波分配、循环前缀与 CFO 损伤。

约定（0 基下标）：
- IFFT 带 1/N 缩放，FFT 不缩放；
- 子载波 k 的镜像为 N-1-k（对应 1 基的 r <-> N-r+1）；
- 频偏 ε 以子载波间隔归一化，样点序号在一帧内连续递增。
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from bidict import bidict

DEFAULT_N_FFT = 512
DEFAULT_N_DATA = 192
DEFAULT_N_PILOT = 60

# DC 对 + 3 个带边保护对
NULL_PAIRS = 4

CP_DIVISORS = (4, 8, 16, 32)

ROLES = bidict({"null": 0, "data": 1, "pilot": 2, "mirror": 3})


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def mirror_index(k, n_fft: int):
    return n_fft - 1 - np.asarray(k)


# ----------------------------------------------------------------- FFT


@dataclass(frozen=True, eq=False)
class FftPlan:
    n: int
    bit_reverse: np.ndarray
    twiddles: Tuple[np.ndarray, ...]


@lru_cache(maxsize=16)
def fft_plan(n: int) -> FftPlan:
    if not is_power_of_two(n):
        raise ValueError(f"FFT length {n} is not a power of two")
    n_bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(n_bits):
        rev |= ((idx >> b) & 1) << (n_bits - 1 - b)
    twiddles = []
    m = 2
    while m <= n:
        tw = np.exp(-2j * np.pi * np.arange(m // 2) / m)
        tw.setflags(write=False)
        twiddles.append(tw)
        m <<= 1
    rev.setflags(write=False)
    return FftPlan(n=n, bit_reverse=rev, twiddles=tuple(twiddles))


def fft(x: np.ndarray) -> np.ndarray:
    """按时间抽取的迭代基 2 FFT，沿最后一维计算，前导维批量处理。"""

    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    plan = fft_plan(n)
    lead = x.shape[:-1]
    y = x[..., plan.bit_reverse]
    m = 2
    for tw in plan.twiddles:
        half = m // 2
        y = y.reshape(*lead, n // m, m)
        u = y[..., :half]
        t = y[..., half:] * tw
        y = np.concatenate([u + t, u - t], axis=-1)
        m <<= 1
    return y.reshape(*lead, n)


def ifft(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.conj(fft(np.conj(x))) / x.shape[-1]


# ----------------------------------------------------------------- 分配


@dataclass(frozen=True, eq=False)
class AllocationPlan:
    n_fft: int
    data_indices: np.ndarray
    pilot_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))

    def __post_init__(self) -> None:
        data = np.asarray(self.data_indices, dtype=np.intp).reshape(-1)
        pilots = np.asarray(self.pilot_indices, dtype=np.intp).reshape(-1)
        object.__setattr__(self, "data_indices", data)
        object.__setattr__(self, "pilot_indices", pilots)
        n = self.n_fft
        if not is_power_of_two(n):
            raise ValueError(f"n_fft {n} is not a power of two")
        primary = np.concatenate([data, pilots])
        if primary.size == 0:
            raise ValueError("allocation carries no subcarriers")
        if primary.min() < 0 or primary.max() >= n:
            raise ValueError("allocation index out of range")
        if np.unique(primary).size != primary.size:
            raise ValueError("data and pilot indices must be disjoint")
        if primary.size > n // 2:
            raise ValueError(f"{primary.size} carriers exceed the {n // 2} usable pairs")
        if np.intersect1d(primary, mirror_index(primary, n)).size:
            raise ValueError("a carrier and its mirror are both allocated")

    @property
    def n_data(self) -> int:
        return int(self.data_indices.size)

    @property
    def n_pilot(self) -> int:
        return int(self.pilot_indices.size)

    @property
    def n_used(self) -> int:
        return self.n_data + self.n_pilot

    @property
    def primary_indices(self) -> np.ndarray:
        return np.sort(np.concatenate([self.data_indices, self.pilot_indices]))

    @property
    def mirror_indices(self) -> np.ndarray:
        return mirror_index(self.primary_indices, self.n_fft)

    def without_pilots(self) -> "AllocationPlan":
        return AllocationPlan(self.n_fft, self.data_indices)

    def roles(self) -> np.ndarray:
        roles = np.full(self.n_fft, ROLES["null"], dtype=np.int8)
        roles[self.mirror_indices] = ROLES["mirror"]
        roles[self.data_indices] = ROLES["data"]
        roles[self.pilot_indices] = ROLES["pilot"]
        return roles


def default_allocation(
    n_fft: int = DEFAULT_N_FFT,
    n_data: int = DEFAULT_N_DATA,
    n_pilot: int = DEFAULT_N_PILOT,
) -> AllocationPlan:
    """
    梳状分配：主载波占 1..n_data+n_pilot，导频在其中等间隔分布，
    镜像在 N-1-k；DC 对与 3 个带边保护对置零。
    """

    total = n_data + n_pilot
    if n_data < 1 or n_pilot < 0:
        raise ValueError("need at least one data carrier and a nonnegative pilot count")
    if total > n_fft // 2 - NULL_PAIRS:
        raise ValueError(f"{total} carriers do not fit {n_fft} bins with {NULL_PAIRS} null pairs")
    primary = np.arange(1, total + 1)
    pilots = np.rint(np.linspace(1, total, n_pilot)).astype(np.intp) if n_pilot else np.zeros(0, np.intp)
    data = np.setdiff1d(primary, pilots)
    return AllocationPlan(n_fft, data, pilots)


@dataclass(frozen=True, eq=False)
class SubcarrierFrame:
    """一个或多个 OFDM 符号的频域取值（最后一维为子载波）以及每个子载波的角色。"""

    n_fft: int
    values: np.ndarray
    roles: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=complex)
        roles = np.asarray(self.roles, dtype=np.int8)
        if values.shape[-1] != self.n_fft or roles.shape != (self.n_fft,):
            raise ValueError("values/roles do not match n_fft")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "roles", roles)

    def indices(self, role: str) -> np.ndarray:
        return np.flatnonzero(self.roles == ROLES[role])

    def replace_values(self, values: np.ndarray) -> "SubcarrierFrame":
        return SubcarrierFrame(self.n_fft, values, self.roles)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


def assemble_symbol(data: np.ndarray, pilots: np.ndarray, plan: AllocationPlan) -> SubcarrierFrame:
    data = np.asarray(data, dtype=complex)
    pilots = np.asarray(pilots, dtype=complex)
    if data.shape[-1] != plan.n_data or pilots.shape[-1] != plan.n_pilot:
        raise ValueError(
            f"expected {plan.n_data} data / {plan.n_pilot} pilot values, "
            f"got {data.shape[-1]} / {pilots.shape[-1]}"
        )
    lead = np.broadcast_shapes(data.shape[:-1], pilots.shape[:-1])
    values = np.zeros(lead + (plan.n_fft,), dtype=complex)
    values[..., plan.data_indices] = data
    values[..., plan.pilot_indices] = pilots
    return SubcarrierFrame(plan.n_fft, values, plan.roles())


# ----------------------------------------------------------------- 时域


def valid_cp_lengths(n_fft: int) -> Tuple[int, ...]:
    return tuple(n_fft // d for d in CP_DIVISORS)


@dataclass(frozen=True, eq=False)
class IqBuffer:
    samples: np.ndarray
    sample_rate: float
    n_fft: int = DEFAULT_N_FFT
    cp_len: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.cp_len and self.cp_len not in valid_cp_lengths(self.n_fft):
            raise ValueError(f"cp_len {self.cp_len} not in {valid_cp_lengths(self.n_fft)}")

    @property
    def symbol_len(self) -> int:
        return self.n_fft + self.cp_len

    def with_samples(self, samples: np.ndarray) -> "IqBuffer":
        return IqBuffer(samples, self.sample_rate, self.n_fft, self.cp_len)

    def as_stream(self) -> "IqBuffer":
        return self.with_samples(self.samples.reshape(-1))

    def as_symbols(self) -> "IqBuffer":
        if self.samples.size % self.symbol_len:
            raise ValueError(f"{self.samples.size} samples are not whole {self.symbol_len}-sample symbols")
        return self.with_samples(self.samples.reshape(-1, self.symbol_len))

    @property
    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


def add_cp(sym: IqBuffer, cp_len: int) -> IqBuffer:
    """每个符号（最后一维）前加 cp_len 个尾部样点；cp_len=0 表示不加。"""

    if sym.cp_len:
        raise ValueError("buffer already carries a cyclic prefix")
    body = sym.samples
    if body.shape[-1] != sym.n_fft:
        raise ValueError(f"symbol body length {body.shape[-1]} != n_fft {sym.n_fft}")
    if cp_len >= body.shape[-1]:
        raise ValueError("cp_len must be shorter than the symbol body")
    if cp_len == 0:
        return sym
    if cp_len not in valid_cp_lengths(sym.n_fft):
        raise ValueError(f"cp_len {cp_len} not in {valid_cp_lengths(sym.n_fft)}")
    out = np.concatenate([body[..., -cp_len:], body], axis=-1)
    return IqBuffer(out, sym.sample_rate, sym.n_fft, cp_len)


def strip_cp(sym: IqBuffer) -> IqBuffer:
    buf = sym.as_symbols() if sym.samples.ndim == 1 else sym
    if buf.samples.shape[-1] != buf.symbol_len:
        raise ValueError(f"symbol length {buf.samples.shape[-1]} != {buf.symbol_len}")
    return IqBuffer(buf.samples[..., buf.cp_len :], buf.sample_rate, buf.n_fft, 0)


def cfo_rotation(n_samples: int, epsilon: float, n_fft: int, start_index: int = 0) -> np.ndarray:
    n = start_index + np.arange(n_samples)
    return np.exp(2j * np.pi * epsilon * n / n_fft)


def apply_cfo(
    x: IqBuffer,
    epsilon: float,
    n_fft: Optional[int] = None,
    start_index: int = 0,
) -> IqBuffer:
    """
    第 n 个样点乘 e^{j2πεn/N}。多维样点按行优先展平后连续计数，
    因此符号之间的相位是连续的。
    """

    if abs(epsilon) >= 0.5:
        raise ValueError(f"|epsilon| = {abs(epsilon)} outside the estimator range (< 0.5)")
    if epsilon == 0.0:
        return x
    n_fft = n_fft or x.n_fft
    rot = cfo_rotation(x.samples.size, epsilon, n_fft, start_index).reshape(x.samples.shape)
    return x.with_samples(x.samples * rot)


@dataclass(frozen=True)
class PilotPlan:
    npt: int
    npf: int
    delta_f: float
    t_s: float
    tau_max: float


def _spacing(value: float) -> int:
    return max(1, int(math.floor(value + 1e-9)))


def compute_pilot_spacing(delta_f: float, t_s: float, tau_max: float) -> PilotPlan:
    """N_pt ≈ 1/(Δf·T_s)，N_pf ≈ 1/(Δf·τ_max)，向下取整且不小于 1。"""

    if not (delta_f > 0 and t_s > 0 and tau_max > 0):
        raise ValueError("delta_f, t_s and tau_max must all be positive")
    return PilotPlan(
        npt=_spacing(1.0 / (delta_f * t_s)),
        npf=_spacing(1.0 / (delta_f * tau_max)),
        delta_f=delta_f,
        t_s=t_s,
        tau_max=tau_max,
    )
