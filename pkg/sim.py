"""
端到端链路仿真：按发射 -> 信道 -> 接收的顺序组装各模块，做 BER / CIR 的蒙特卡洛统计。

发射：比特 -> 扰码 -> 卷积编码 -> 交织 -> 星座映射 -> Alamouti 编码 -> 插导频 ->
      镜像映射 -> IFFT + CP（每根天线）
信道：抽头延迟线（两天线在单接收天线处相加） -> CFO -> AWGN
接收：[导频估计 CFO -> 校正] -> 去 CP + FFT -> 去公共相位 -> Alamouti 合并 ->
      镜像差分 -> ML 判决 -> 解映射 -> 解交织 -> Viterbi -> 解扰 -> 计错
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from bits import (
    BitBlock,
    CodecSpec,
    conv_encode_blocks,
    count_bit_errors,
    deinterleave_blocks,
    derandomize,
    interleave_blocks,
    interleaver_shape,
    randomize,
    viterbi_decode_blocks,
)
from cfo_est import CfoEstimate, correct_cfo, estimate_cfo, max_unambiguous_cfo
from channel import (
    UPDATE_MODES,
    ChannelRealization,
    SuiProfile,
    add_awgn,
    apply_channel,
    flat_rayleigh_profile,
    frequency_response,
    realize_channel,
    sui_profile,
)
from common import ConfigError, EstimationError, derive_seed, make_rng, ratio_db
from ici import (
    SCHEMES,
    CancellationScheme,
    demodulate_cancelling,
    ici_coefficients,
    insert_pilots,
    modulate_cancelling,
    pilot_sequence,
    theoretical_cir,
)
from mapping import MODULATIONS, Constellation, constellation, demap_hard, map_bits
from ofdm import (
    NULL_PAIRS,
    AllocationPlan,
    IqBuffer,
    SubcarrierFrame,
    add_cp,
    apply_cfo,
    assemble_symbol,
    cfo_rotation,
    default_allocation,
    fft,
    ifft,
    is_power_of_two,
    mirror_index,
    strip_cp,
)
from stbc import ChannelGains, alamouti_streams, stbc_combine, stbc_ml_decide

logger = logging.getLogger(__name__)

CHANNELS = ("ideal", "awgn", "rayleigh") + tuple(f"sui{i}" for i in range(1, 7))
CP_FRACTIONS = (1 / 4, 1 / 8, 1 / 16, 1 / 32)
SWEEP_AXES = ("snr", "epsilon", "scheme")

# 5 ms 帧，每秒 200 帧，每帧 48 个 OFDM 符号
FRAME_DURATION_S = 5e-3
SYMBOLS_PER_FRAME = 48
N_TX = 2

# 每根天线数据子载波乘 1/√2，使每个占用子载波的总发射功率为 1
STBC_SCALE = 1.0 / math.sqrt(2.0)

CIR_SYMBOLS = 200

CSV_COLUMNS = [
    "scheme",
    "modulation",
    "channel",
    "epsilon",
    "snr_db",
    "bit_errors",
    "bits_total",
    "ber",
    "measured_cir_db",
    "mean_cfo_est",
    "rms_cfo_err",
    "seed",
]
EXTRA_COLUMNS = [
    "occupied_bins",
    "payload_bits_per_frame",
    "payload_mbps",
    "bits_per_bin",
    "throughput_mbps",
    "overhead_db",
    "rayleigh_ref_ber",
    "erasures",
    "wall_seconds",
]
CIR_COLUMNS = [
    "epsilon",
    "measured_cir_db",
    "theoretical_cir_db",
    "signal_power",
    "ici_data_power",
    "ici_pilot_power",
]

# 随机流编号：派生种子的第一个键
_DATA_STREAM, _CHANNEL_STREAM, _NOISE_STREAM, _CIR_STREAM = range(4)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def parse_grid(value: Any) -> Tuple[float, ...]:
    """'start:step:stop'（含端点）或逗号列表；也接受数值序列。"""

    if isinstance(value, (int, float)):
        return (float(value),)
    if not isinstance(value, str):
        grid = tuple(float(v) for v in value)
        if not grid:
            raise ConfigError("empty grid")
        return grid
    text = value.strip()
    try:
        if ":" in text:
            start, step, stop = (float(p) for p in text.split(":"))
        else:
            grid = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"bad grid {value!r}: {exc}") from exc
    if ":" in text:
        if step <= 0 or stop < start:
            raise ConfigError(f"bad grid {value!r}: need step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    if not grid:
        raise ConfigError("empty grid")
    return grid


@dataclass(frozen=True)
class LinkConfig:
    scheme: str = "pascs"
    modulation: str = "qpsk"
    channel: str = "sui1"
    epsilon: float = 0.2
    cfo_correction: bool = False
    snr_grid_db: Tuple[float, ...] = tuple(float(s) for s in range(0, 21, 2))
    n_frames: int = 100
    cp_fraction: float = 1 / 4
    sample_rate_hz: float = 4e6
    n_fft: int = 512
    n_data: int = 192
    n_pilot: int = 60
    seed: int = 0
    symbols_per_frame: int = SYMBOLS_PER_FRAME
    carrier_ghz: float = 5.0  # 仅作元数据
    update_mode: str = "block"

    def __post_init__(self) -> None:
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))

    # --------------------------------------------------------- 派生量

    @property
    def cp_len(self) -> int:
        return int(round(self.n_fft * self.cp_fraction))

    @property
    def cancellation(self) -> CancellationScheme:
        return CancellationScheme.named(self.scheme, self.n_pilot)

    @property
    def allocation(self) -> AllocationPlan:
        plan = default_allocation(self.n_fft, self.n_data, self.n_pilot)
        return plan if self.cancellation.has_pilots else plan.without_pilots()

    @property
    def constellation(self) -> Constellation:
        return constellation(self.modulation)

    @property
    def coded_bits_per_symbol(self) -> int:
        return self.n_data * self.constellation.bits_per_symbol

    @property
    def info_bits_per_symbol(self) -> int:
        return self.coded_bits_per_symbol // 2 - CodecSpec().tail_bits

    @property
    def payload_bits_per_frame(self) -> int:
        return self.info_bits_per_symbol * self.symbols_per_frame

    @property
    def occupied_bins(self) -> int:
        n_used = self.allocation.n_used
        return 2 * n_used if self.cancellation.mirrored else n_used

    @property
    def usable_bins(self) -> int:
        return self.n_fft - 2 * NULL_PAIRS

    @property
    def data_bearing_bins(self) -> int:
        """承载数据的子载波（含镜像副本）；导频不计入。"""
        return 2 * self.n_data if self.cancellation.mirrored else self.n_data

    @property
    def energy_per_bit(self) -> float:
        """每个净荷比特的数据发射能量，以单个子载波符号能量为单位。"""
        return self.data_bearing_bins / self.info_bits_per_symbol

    @property
    def overhead_db(self) -> float:
        """导频占用的额外发射能量。"""
        return 10.0 * math.log10(self.occupied_bins / self.data_bearing_bins)

    @property
    def bits_per_bin(self) -> float:
        return self.info_bits_per_symbol / self.occupied_bins

    @property
    def payload_mbps(self) -> float:
        return self.payload_bits_per_frame / FRAME_DURATION_S / 1e6

    @property
    def throughput_mbps(self) -> float:
        """按该方案的子载波效率铺满可用带宽时的净荷速率。"""
        return self.bits_per_bin * self.usable_bins * self.symbols_per_frame / FRAME_DURATION_S / 1e6

    def channel_profile(self) -> Optional[SuiProfile]:
        if self.channel in ("ideal", "awgn"):
            return None
        if self.channel == "rayleigh":
            return flat_rayleigh_profile()
        return sui_profile(self.channel)

    # --------------------------------------------------------- 校验

    def validate(self) -> "LinkConfig":
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {list(SCHEMES)}")
        if self.modulation not in MODULATIONS:
            raise ConfigError(f"unknown modulation {self.modulation!r}; choose from {list(MODULATIONS)}")
        if self.channel not in CHANNELS:
            raise ConfigError(f"unknown channel {self.channel!r}; choose from {list(CHANNELS)}")
        if self.update_mode not in UPDATE_MODES:
            raise ConfigError(f"update_mode must be one of {UPDATE_MODES}")
        if not abs(self.epsilon) < 0.5:
            raise ConfigError(f"|epsilon| must be < 0.5, got {self.epsilon}")
        if not self.snr_grid_db:
            raise ConfigError("snr grid is empty")
        if self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        if not any(math.isclose(self.cp_fraction, f) for f in CP_FRACTIONS):
            raise ConfigError(f"cp_fraction must be one of 1/4, 1/8, 1/16, 1/32, got {self.cp_fraction}")
        if self.sample_rate_hz <= 0 or self.carrier_ghz <= 0:
            raise ConfigError("sample rate and carrier frequency must be positive")
        if not is_power_of_two(self.n_fft):
            raise ConfigError(f"n_fft {self.n_fft} is not a power of two")
        if self.symbols_per_frame < 2 or self.symbols_per_frame % 2:
            raise ConfigError("symbols_per_frame must be even (Alamouti pairs)")
        try:
            self.cancellation
            self.allocation
            interleaver_shape(self.coded_bits_per_symbol)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.info_bits_per_symbol < 1:
            raise ConfigError("OFDM symbol too small for the convolutional code tail")
        self._check_cp_coverage()
        if self.cfo_correction and self.cancellation.has_pilots:
            limit = max_unambiguous_cfo(self.n_fft, self.cp_len)
            if abs(self.epsilon) >= limit:
                logger.warning("epsilon %.3f beyond unambiguous estimator range %.3f", self.epsilon, limit)
        return self

    def _check_cp_coverage(self) -> None:
        profile = self.channel_profile()
        if profile is None:
            return
        try:
            delays = profile.delay_samples(self.sample_rate_hz)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if delays[-1] > self.cp_len:
            raise ConfigError(
                f"{profile.name}: max delay {profile.max_delay_us:g} us = {int(delays[-1])} samples "
                f"exceeds CP of {self.cp_len} samples at {self.sample_rate_hz:g} Hz"
            )

    # --------------------------------------------------------- 序列化

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["snr_grid_db"] = list(self.snr_grid_db)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LinkConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs: Dict[str, Any] = {}
        try:
            for key, value in data.items():
                if key == "snr_grid_db":
                    kwargs[key] = parse_grid(value)
                elif key == "cfo_correction":
                    kwargs[key] = parse_bool(value)
                elif key == "cp_fraction":
                    kwargs[key] = _parse_fraction(value)
                elif key in ("n_frames", "n_fft", "n_data", "n_pilot", "seed", "symbols_per_frame"):
                    kwargs[key] = int(value)
                elif key in ("epsilon", "sample_rate_hz", "carrier_ghz"):
                    kwargs[key] = float(value)
                else:
                    kwargs[key] = str(value).strip().lower()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
        return cls(**kwargs)


def _parse_fraction(value: Any) -> float:
    text = str(value).strip()
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


@dataclass
class RunResult:
    config: LinkConfig
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=CSV_COLUMNS + EXTRA_COLUMNS)

    def write_csv(self, path) -> None:
        write_csv(self.to_frame(), path, CSV_COLUMNS)


def write_csv(table: pd.DataFrame, path, columns: Optional[Sequence[str]] = None) -> None:
    """固定浮点格式写 CSV；运行结果只写固定列，墙钟时间等非确定列不落盘。"""

    columns = list(table.columns) if columns is None else list(columns)
    table[columns].to_csv(path, index=False, float_format="%.10g")


# ----------------------------------------------------------------- 链路


@dataclass(frozen=True, eq=False)
class _FrameTx:
    payload: np.ndarray
    streams: IqBuffer  # (N_TX, L)
    channel: ChannelRealization


class _Link:
    """一个配置下可复用的收发链路；帧之间不共享可变状态。"""

    def __init__(self, cfg: LinkConfig) -> None:
        self.cfg = cfg
        self.plan = cfg.allocation
        self.scheme = cfg.cancellation
        self.const = cfg.constellation
        self.codec = CodecSpec()
        self.rows, self.cols = interleaver_shape(cfg.coded_bits_per_symbol)
        self.pilots = pilot_sequence(self.plan.n_pilot)
        self.n_fft = cfg.n_fft
        self.sym_len = cfg.n_fft + cfg.cp_len
        self.profile = cfg.channel_profile()
        self.roles = self.plan.roles()
        pilot_idx = self.plan.pilot_indices
        self.pilot_bins = (
            np.concatenate([pilot_idx, mirror_index(pilot_idx, self.n_fft)]) if self.scheme.mirrored else pilot_idx
        )
        data = self.plan.data_indices
        self.data_bins = data
        self.data_mirrors = mirror_index(data, self.n_fft)

    @property
    def estimating(self) -> bool:
        return self.scheme.has_pilots

    # --------------------------------------------------------- 发射

    def transmit(self, frame: int) -> _FrameTx:
        cfg = self.cfg
        n_sym = cfg.symbols_per_frame
        rng = make_rng(cfg.seed, _DATA_STREAM, frame)
        payload = rng.integers(0, 2, cfg.payload_bits_per_frame, dtype=np.uint8)

        scrambled = randomize(payload).bits.reshape(n_sym, -1)
        coded = interleave_blocks(conv_encode_blocks(scrambled, self.codec), self.rows, self.cols)
        symbols = map_bits(coded.reshape(-1), self.const).reshape(n_sym, self.plan.n_data)
        ant1, ant2 = alamouti_streams(symbols)

        pilots = np.broadcast_to(self.pilots, (n_sym, self.plan.n_pilot))
        frames = (
            insert_pilots(ant1 * STBC_SCALE, pilots, self.plan),
            assemble_symbol(ant2 * STBC_SCALE, np.zeros(pilots.shape, dtype=complex), self.plan),
        )
        streams = []
        for fr in frames:
            fr = modulate_cancelling(fr, self.scheme)
            buf = add_cp(IqBuffer(ifft(fr.values), cfg.sample_rate_hz, self.n_fft), cfg.cp_len)
            streams.append(buf.samples.reshape(-1))
        tx = IqBuffer(np.stack(streams), cfg.sample_rate_hz, self.n_fft, cfg.cp_len)
        return _FrameTx(payload, tx, self._realize(frame, tx.samples.shape[-1]))

    def _realize(self, frame: int, duration: int) -> ChannelRealization:
        cfg = self.cfg
        if self.profile is None:
            gains = np.ones((N_TX, 1, 1), dtype=complex)
            return ChannelRealization(gains, np.zeros(1, dtype=np.intp), cfg.sample_rate_hz)
        return realize_channel(
            self.profile,
            N_TX,
            duration,
            cfg.sample_rate_hz,
            cfg.update_mode,
            seed=derive_seed(cfg.seed, _CHANNEL_STREAM, frame),
        )

    # --------------------------------------------------------- 接收

    def receive(self, tx: _FrameTx, snr_db: float, noise_seed: int) -> Tuple[int, int, Optional[CfoEstimate], int]:
        cfg = self.cfg
        rx = apply_cfo(apply_channel(tx.streams, tx.channel), cfg.epsilon)
        if cfg.channel != "ideal":
            rx = add_awgn(rx, snr_db, cfg.energy_per_bit / self.n_fft, noise_seed)

        estimate = self._estimate(rx)
        residual = cfg.epsilon
        if estimate is not None and cfg.cfo_correction:
            rx = correct_cfo(rx, estimate)
            residual = cfg.epsilon - estimate.epsilon_hat

        y = fft(strip_cp(rx).samples)
        y *= np.exp(-1j * self._common_phase(residual, y.shape[0]))[:, None]
        gains = self._csi(tx.channel, residual, y.shape[0] // 2)

        z = np.empty_like(y)
        z[0::2], z[1::2] = stbc_combine(y[0::2], y[1::2], gains)
        alpha_sq = np.repeat(gains.alpha_sq, 2, axis=0)
        decisions = demodulate_cancelling(SubcarrierFrame(self.n_fft, z, self.roles), self.scheme)
        if self.scheme.mirrored:
            alpha_eff = 0.5 * (alpha_sq[:, self.data_bins] + alpha_sq[:, self.data_mirrors])
        else:
            alpha_eff = alpha_sq[:, self.data_bins]

        decided, erased = stbc_ml_decide(decisions, alpha_eff, self.const)
        coded = demap_hard(decided, self.const).bits.reshape(y.shape[0], -1)
        decoded = viterbi_decode_blocks(deinterleave_blocks(coded, self.rows, self.cols), self.codec)
        bits = derandomize(BitBlock(decoded.reshape(-1), "randomized"))
        errors, total = count_bit_errors(tx.payload, bits)
        return errors, total, estimate, int(np.count_nonzero(erased))

    def _estimate(self, rx: IqBuffer) -> Optional[CfoEstimate]:
        if not self.estimating:
            return None
        pilots = fft(strip_cp(rx).samples)[:, self.pilot_bins]
        try:
            return estimate_cfo(pilots[:-1], pilots[1:], self.sym_len, self.n_fft)
        except EstimationError as exc:
            logger.warning("CFO estimate unavailable, frame left uncorrected: %s", exc)
            return None

    def _common_phase(self, residual: float, n_sym: int) -> np.ndarray:
        """每个 FFT 窗的公共相位：arg w(0) + 2π ε_res n_start / N。"""

        w0 = ici_coefficients(self.n_fft, residual).at(0)
        n_start = np.arange(n_sym) * self.sym_len + self.cfg.cp_len
        return np.angle(w0) + 2.0 * np.pi * residual * n_start / self.n_fft

    def _csi(self, ch: ChannelRealization, residual: float, n_pairs: int) -> ChannelGains:
        """理想 CSI：每个 Alamouti 符号对中点处的信道频响，乘 |w(0)| 与发射缩放。"""

        scale = abs(ici_coefficients(self.n_fft, residual).at(0)) * STBC_SCALE
        if ch.duration == 1:
            h = frequency_response(ch, self.n_fft) * scale
            return ChannelGains(np.broadcast_to(h[0], (n_pairs, self.n_fft)), np.broadcast_to(h[1], (n_pairs, self.n_fft)))
        centres = (2 * np.arange(n_pairs) + 1) * self.sym_len
        h = np.stack([frequency_response(ch, self.n_fft, c) for c in centres]) * scale
        return ChannelGains(h[:, 0, :], h[:, 1, :])


def run_link(cfg: LinkConfig) -> RunResult:
    """同一帧数据与信道在所有 SNR 点上复用；结果只依赖配置与种子。"""

    cfg.validate()
    link = _Link(cfg)
    if cfg.cfo_correction and not link.estimating:
        logger.warning("%s carries no pilots; CFO correction skipped", cfg.scheme)
    measured_cir = float(measure_cir(cfg, [cfg.epsilon])["measured_cir_db"].iloc[0])

    grid = cfg.snr_grid_db
    errors = np.zeros(len(grid), dtype=np.int64)
    totals = np.zeros(len(grid), dtype=np.int64)
    erasures = np.zeros(len(grid), dtype=np.int64)
    wall = np.zeros(len(grid))
    estimates: List[List[float]] = [[] for _ in grid]

    for frame in range(cfg.n_frames):
        t0 = time.perf_counter()
        tx = link.transmit(frame)
        wall += (time.perf_counter() - t0) / len(grid)
        for i, snr_db in enumerate(grid):
            t0 = time.perf_counter()
            e, n, est, er = link.receive(tx, snr_db, derive_seed(cfg.seed, _NOISE_STREAM, frame, i))
            errors[i] += e
            totals[i] += n
            erasures[i] += er
            if est is not None:
                estimates[i].append(est.epsilon_hat)
            wall[i] += time.perf_counter() - t0
        logger.debug("frame %d/%d: errors %s", frame + 1, cfg.n_frames, errors.tolist())

    ref = rayleigh_reference_ber(np.asarray(grid), cfg.modulation)
    result = RunResult(cfg)
    for i, snr_db in enumerate(grid):
        eps_hat = np.asarray(estimates[i])
        mean_est = float(eps_hat.mean()) if eps_hat.size else math.nan
        rms_err = float(np.sqrt(np.mean((eps_hat - cfg.epsilon) ** 2))) if eps_hat.size else math.nan
        ber = errors[i] / totals[i]
        result.rows.append(
            {
                "scheme": cfg.scheme,
                "modulation": cfg.modulation,
                "channel": cfg.channel,
                "epsilon": cfg.epsilon,
                "snr_db": snr_db,
                "bit_errors": int(errors[i]),
                "bits_total": int(totals[i]),
                "ber": float(ber),
                "measured_cir_db": measured_cir,
                "mean_cfo_est": mean_est,
                "rms_cfo_err": rms_err,
                "seed": cfg.seed,
                "occupied_bins": cfg.occupied_bins,
                "payload_bits_per_frame": cfg.payload_bits_per_frame,
                "payload_mbps": cfg.payload_mbps,
                "bits_per_bin": cfg.bits_per_bin,
                "throughput_mbps": cfg.throughput_mbps,
                "overhead_db": cfg.overhead_db,
                "rayleigh_ref_ber": float(ref[i]),
                "erasures": int(erasures[i]),
                "wall_seconds": float(wall[i]),
            }
        )
        logger.info(
            "%s/%s/%s eps=%.3f snr=%.1f dB: BER %.3e (%d/%d)",
            cfg.scheme,
            cfg.modulation,
            cfg.channel,
            cfg.epsilon,
            snr_db,
            ber,
            errors[i],
            totals[i],
        )
    return result


def measure_cir(cfg: LinkConfig, epsilon_grid: Iterable[float]) -> pd.DataFrame:
    """
    无噪声、理想信道下测 CIR：每个 OFDM 符号独立（相位从 0 开始），
    按子载波把判决量对已知发送符号做相关，相关部分为信号，残差为干扰。
    导频取随机 QPSK，使其干扰与理论中的独立等概假设一致。
    """

    grid = [float(e) for e in epsilon_grid]
    if not grid:
        raise ConfigError("empty CFO grid")
    plan = cfg.allocation
    scheme = cfg.cancellation
    const = cfg.constellation
    qpsk = constellation("qpsk")
    rng = make_rng(cfg.seed, _CIR_STREAM)

    rows = []
    for eps in grid:
        if not abs(eps) < 0.5:
            raise ConfigError(f"|epsilon| must be < 0.5, got {eps}")
        data = const.points[rng.integers(0, const.order, (CIR_SYMBOLS, plan.n_data))]
        pilots = qpsk.points[rng.integers(0, qpsk.order, (CIR_SYMBOLS, plan.n_pilot))]
        frame = modulate_cancelling(assemble_symbol(data, pilots, plan), scheme)
        impaired = ifft(frame.values) * cfo_rotation(cfg.n_fft, eps, cfg.n_fft)
        d = demodulate_cancelling(frame.replace_values(fft(impaired)), scheme)

        power = np.abs(data) ** 2
        corr = np.sum(d * np.conj(data), axis=0) / np.sum(power, axis=0)
        signal = float(np.mean(np.abs(corr) ** 2) * np.mean(power))
        interference = float(np.mean(np.abs(d - corr * data) ** 2))
        theory = theoretical_cir(cfg.n_fft, eps, scheme, plan)
        rows.append(
            {
                "epsilon": eps,
                "measured_cir_db": ratio_db(signal, interference),
                "theoretical_cir_db": theory.cir_db,
                "signal_power": theory.signal_power,
                "ici_data_power": theory.ici_data_power,
                "ici_pilot_power": theory.ici_pilot_power,
            }
        )
        logger.debug("%s eps=%.3f: measured %.2f dB, theory %.2f dB", cfg.scheme, eps, rows[-1]["measured_cir_db"], theory.cir_db)
    return pd.DataFrame(rows, columns=CIR_COLUMNS)


def sweep(cfg_base: LinkConfig, axis: str, values: Sequence[Any]) -> pd.DataFrame:
    """每行一个取值；行种子由主种子和行号派生，单独重跑该行即可复现。"""

    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    tables = []
    for row, value in enumerate(values):
        seed = derive_seed(cfg_base.seed, row)
        if axis == "snr":
            cfg = replace(cfg_base, snr_grid_db=(float(value),), seed=seed)
        elif axis == "epsilon":
            cfg = replace(cfg_base, epsilon=float(value), seed=seed)
        else:
            cfg = replace(cfg_base, scheme=str(value), seed=seed)
        logger.info("sweep %s=%s (row %d/%d)", axis, value, row + 1, len(values))
        tables.append(run_link(cfg).to_frame())
    return pd.concat(tables, ignore_index=True)


def rayleigh_reference_ber(snr_db, modulation: str) -> np.ndarray:
    """
    单天线格雷方形 M-QAM 在平坦 Rayleigh 衰落下的未编码 BER 近似
    （QPSK 时为精确值）。snr_db 与链路结果同为 Eb/N0，按每符号 log2(M) 比特换算成 Es/N0。
    """

    order = MODULATIONS[modulation]
    k = order.bit_length() - 1
    root = math.isqrt(order)
    gamma = k * 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    total = np.zeros_like(gamma)
    for i in range(1, min(2, root // 2) + 1):
        c = (2 * i - 1) ** 2 * 3.0 / (2.0 * (order - 1))
        total += 0.5 * (1.0 - np.sqrt(c * gamma / (1.0 + c * gamma)))
    return 4.0 / k * (1.0 - 1.0 / root) * total
