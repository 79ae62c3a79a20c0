"""比特级发射调理及其逆过程：扰码、卷积编码、块交织、Viterbi 译码与误比特统计。"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import numpy as np

ORIGINS = ("raw", "randomized", "coded", "interleaved")

# 802.16 扰码器：x^15 + x^14 + 1，每帧以全 1 初始化
PRBS_ORDER = 15
PRBS_ALL_ONES = (1 << PRBS_ORDER) - 1

# 802.16 母码：K=7，(171, 133) 八进制，码率 1/2，零尾终止
DEFAULT_CONSTRAINT_LENGTH = 7
DEFAULT_GENERATORS = (0o171, 0o133)

# 交织器列数；行数 = 每个 OFDM 符号的编码比特数 / 16
INTERLEAVER_COLS = 16

_UNREACHABLE = 1 << 24


@dataclass(frozen=True, eq=False)
class BitBlock:
    """带阶段标签的比特序列。"""

    bits: np.ndarray
    origin: str = "raw"

    def __post_init__(self) -> None:
        arr = np.asarray(self.bits)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("BitBlock needs a non-empty 1-D bit sequence")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("BitBlock elements must be 0 or 1")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown BitBlock origin {self.origin!r}")
        object.__setattr__(self, "bits", arr.astype(np.uint8))

    def __len__(self) -> int:
        return int(self.bits.size)


@dataclass(frozen=True)
class CodecSpec:
    constraint_length: int = DEFAULT_CONSTRAINT_LENGTH
    generator_polynomials: Tuple[int, int] = DEFAULT_GENERATORS
    tail_bits: int = DEFAULT_CONSTRAINT_LENGTH - 1

    def __post_init__(self) -> None:
        k = self.constraint_length
        if k < 2:
            raise ValueError("constraint_length must be >= 2")
        if len(self.generator_polynomials) != 2:
            raise ValueError("rate-1/2 code needs exactly two generator polynomials")
        for g in self.generator_polynomials:
            if g <= 0 or g >= (1 << k):
                raise ValueError(f"generator {g:o} must be nonzero with degree < {k}")
        if self.tail_bits != k - 1:
            raise ValueError("zero-tail termination needs tail_bits = constraint_length - 1")

    @property
    def n_states(self) -> int:
        return 1 << (self.constraint_length - 1)

    @property
    def taps(self) -> np.ndarray:
        """taps[i, d]：第 i 个生成多项式在延迟 d 处的抽头（八进制最高位对应延迟 0）。"""

        k = self.constraint_length
        return np.array(
            [[(g >> (k - 1 - d)) & 1 for d in range(k)] for g in self.generator_polynomials],
            dtype=np.uint8,
        )


BitsLike = Union[BitBlock, np.ndarray, list]


def _as_bits(data: BitsLike) -> np.ndarray:
    if isinstance(data, BitBlock):
        return data.bits
    return np.asarray(data, dtype=np.uint8)


@lru_cache(maxsize=32)
def _prbs_cached(length: int, seed_state: int) -> np.ndarray:
    reg = seed_state
    out = np.empty(length, dtype=np.uint8)
    for i in range(length):
        fb = ((reg >> 13) ^ (reg >> 14)) & 1
        out[i] = fb
        reg = ((reg << 1) & PRBS_ALL_ONES) | fb
    out.setflags(write=False)
    return out


def prbs(length: int, seed_state: int = PRBS_ALL_ONES) -> np.ndarray:
    """
    x^15+x^14+1 线性反馈移位寄存器输出。寄存器第 i 级存放在整数的第 i-1 位，
    每拍反馈 = 第 14 级 XOR 第 15 级，反馈同时作为输出并移入第 1 级。
    """

    if not 0 < seed_state <= PRBS_ALL_ONES:
        raise ValueError("randomizer seed must be a nonzero 15-bit register value")
    return _prbs_cached(int(length), int(seed_state))


def randomize(data: BitsLike, seed_state: int = PRBS_ALL_ONES) -> BitBlock:
    """与 PRBS 逐位异或；相同种子下是对合运算，因此也用作解扰。"""

    bits = _as_bits(data)
    out = bits ^ prbs(bits.size, seed_state)
    origin = "raw" if isinstance(data, BitBlock) and data.origin == "randomized" else "randomized"
    return BitBlock(out, origin)


derandomize = randomize


def conv_encode_blocks(blocks: np.ndarray, spec: CodecSpec = CodecSpec()) -> np.ndarray:
    """对 (B, L) 的等长信息块逐块卷积编码，输出 (B, 2(L+K-1))，两路输出交替排列。"""

    blocks = np.atleast_2d(np.asarray(blocks, dtype=np.uint8))
    n_blocks, length = blocks.shape
    if length == 0:
        raise ValueError("cannot encode an empty block")
    u = np.concatenate([blocks, np.zeros((n_blocks, spec.tail_bits), dtype=np.uint8)], axis=1)
    steps = u.shape[1]
    out = np.empty((n_blocks, 2 * steps), dtype=np.uint8)
    for i, row in enumerate(spec.taps):
        acc = np.zeros_like(u)
        for d in np.flatnonzero(row):
            acc[:, d:] ^= u[:, : steps - d]
        out[:, i::2] = acc
    return out


def conv_encode(data: BitsLike, spec: CodecSpec = CodecSpec()) -> BitBlock:
    bits = _as_bits(data)
    if bits.size == 0:
        raise ValueError("cannot encode an empty block")
    return BitBlock(conv_encode_blocks(bits[None, :], spec)[0], "coded")


@lru_cache(maxsize=8)
def _trellis(spec: CodecSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    返回 (pred, branch_code)：pred[ns, b] 为到达 ns 的第 b 个前驱，
    branch_code[ns, b] 为该分支两位输出组成的 0..3 编码。
    状态 j 与 j + S/2 共用前驱对 (2j, 2j+1)（蝶形结构）。
    """

    k = spec.constraint_length
    n_states = spec.n_states
    mask = (1 << (k - 2)) - 1
    pred = np.empty((n_states, 2), dtype=np.int64)
    code = np.empty((n_states, 2), dtype=np.int64)
    for ns in range(n_states):
        u = ns >> (k - 2)
        for b in (0, 1):
            prev = ((ns & mask) << 1) | b
            reg = (u << (k - 1)) | prev
            o0 = bin(reg & spec.generator_polynomials[0]).count("1") & 1
            o1 = bin(reg & spec.generator_polynomials[1]).count("1") & 1
            pred[ns, b] = prev
            code[ns, b] = (o0 << 1) | o1
    return pred, code


# _HAMMING[r, e]：接收二元组 r 与期望二元组 e 的汉明距离
_HAMMING = np.array([[bin(r ^ e).count("1") for e in range(4)] for r in range(4)], dtype=np.int32)


def viterbi_decode_blocks(coded: np.ndarray, spec: CodecSpec = CodecSpec()) -> np.ndarray:
    """
    硬判决 Viterbi：汉明度量下的最大似然路径，所有块并行推进。
    编码器以零尾回到 0 状态，因此回溯从 0 状态开始，输出去掉尾比特。
    """

    coded = np.atleast_2d(np.asarray(coded, dtype=np.uint8))
    n_blocks, length = coded.shape
    if length % 2 or length < 2 * spec.tail_bits:
        raise ValueError(f"coded length {length} must be even and >= {2 * spec.tail_bits}")
    steps = length // 2
    k = spec.constraint_length
    mask = (1 << (k - 2)) - 1
    _, code = _trellis(spec)
    # 按时刻预取两条入分支的度量：(steps, B, S)
    rx_code = ((coded[:, 0::2].astype(np.intp) << 1) | coded[:, 1::2]).T
    bm0 = _HAMMING[:, code[:, 0]][rx_code]
    bm1 = _HAMMING[:, code[:, 1]][rx_code]

    metric = np.full((n_blocks, spec.n_states), _UNREACHABLE, dtype=np.int32)
    metric[:, 0] = 0
    decisions = np.empty((steps, n_blocks, spec.n_states), dtype=np.uint8)
    for t in range(steps):
        even = metric[:, 0::2]
        odd = metric[:, 1::2]
        c0 = np.concatenate([even, even], axis=1) + bm0[t]
        c1 = np.concatenate([odd, odd], axis=1) + bm1[t]
        # 相等时取 b = 0
        np.less(c1, c0, out=decisions[t], casting="unsafe")
        metric = np.minimum(c0, c1)

    rows = np.arange(n_blocks)
    state = np.zeros(n_blocks, dtype=np.int64)
    out = np.empty((n_blocks, steps), dtype=np.uint8)
    for t in range(steps - 1, -1, -1):
        out[:, t] = state >> (k - 2)
        state = ((state & mask) << 1) | decisions[t, rows, state]
    return out[:, : steps - spec.tail_bits]


def viterbi_decode(coded: BitsLike, spec: CodecSpec = CodecSpec()) -> BitBlock:
    bits = _as_bits(coded)
    if bits.ndim != 1 or bits.size <= 2 * spec.tail_bits or bits.size % 2:
        raise ValueError(f"coded length {bits.size} must be even and > {2 * spec.tail_bits}")
    return BitBlock(viterbi_decode_blocks(bits[None, :], spec)[0], "raw")


def _check_shape(length: int, rows: int, cols: int) -> None:
    if rows < 1 or cols < 1 or rows * cols != length:
        raise ValueError(f"interleaver {rows}x{cols} does not match block length {length}")


def interleave_blocks(blocks: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """按列写入 rows×cols 矩阵、按行读出；作用在最后一维。"""

    blocks = np.asarray(blocks)
    _check_shape(blocks.shape[-1], rows, cols)
    lead = blocks.shape[:-1]
    return np.swapaxes(blocks.reshape(*lead, cols, rows), -1, -2).reshape(*lead, rows * cols)


def deinterleave_blocks(blocks: np.ndarray, rows: int, cols: int) -> np.ndarray:
    blocks = np.asarray(blocks)
    _check_shape(blocks.shape[-1], rows, cols)
    lead = blocks.shape[:-1]
    return np.swapaxes(blocks.reshape(*lead, rows, cols), -1, -2).reshape(*lead, rows * cols)


def interleave(data: BitsLike, rows: int, cols: int) -> BitBlock:
    return BitBlock(interleave_blocks(_as_bits(data), rows, cols), "interleaved")


def deinterleave(data: BitsLike, rows: int, cols: int) -> BitBlock:
    return BitBlock(deinterleave_blocks(_as_bits(data), rows, cols), "coded")


def interleaver_shape(coded_bits_per_symbol: int, cols: int = INTERLEAVER_COLS) -> Tuple[int, int]:
    if coded_bits_per_symbol % cols:
        raise ValueError(f"{coded_bits_per_symbol} coded bits do not fill {cols} columns")
    return coded_bits_per_symbol // cols, cols


def count_bit_errors(tx: BitsLike, rx: BitsLike) -> Tuple[int, int]:
    a = _as_bits(tx)
    b = _as_bits(rx)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b)), int(a.size)
