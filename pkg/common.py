"""公共工具：异常层级、彩色日志、种子派生与 dB 换算。"""
from __future__ import annotations

import logging
from typing import Dict, Union

import numpy as np
from colorama import Fore, Style, init

# CIR 的封顶哨兵值：干扰功率为零（ε=0）时返回
CIR_CAP_DB = 200.0

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# 派生种子保持在 int64 范围内，便于写入 CSV
SEED_MASK = (1 << 63) - 1

LEVEL_COLORS: Dict[int, str] = {
    logging.DEBUG: Fore.CYAN,
    logging.INFO: Fore.GREEN,
    logging.WARNING: Fore.YELLOW,
    logging.ERROR: Fore.RED,
    logging.CRITICAL: Fore.RED + Style.BRIGHT,
}


class SimError(Exception):
    """链路仿真的基础异常。"""

    exit_code = EXIT_NUMERICAL


class ConfigError(SimError, ValueError):
    """配置非法：LinkConfig、命令行参数或配置文件条目。"""

    exit_code = EXIT_CONFIG


class EstimationError(SimError):
    """CFO 估计失败：导频互相关和为零，区别于合法的 0.0 估计。"""


class NumericalError(SimError, ArithmeticError):
    """运行期数值失败（判决量出现 NaN/inf 等）。"""


class ColorFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        color = LEVEL_COLORS.get(record.levelno, "")
        level = record.levelname
        record.levelname = f"{color}{level}{Style.RESET_ALL}"
        try:
            return super().format(record)
        finally:
            record.levelname = level


def setup_logging(verbose: bool = False) -> None:
    """只由命令行入口调用；库代码不安装 handler。"""

    init()
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(ColorFormatter("%(asctime)s %(levelname)s %(name)s: %(message)s", "%H:%M:%S"))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def derive_seed(master: int, *keys: int) -> int:
    """
    计数器式种子拆分：同一个主种子加上 (行号, 帧号, SNR 序号…) 得到互相独立的 64 位子种子。
    """

    seq = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    lo, hi = seq.generate_state(2, dtype=np.uint32)
    return (int(lo) | (int(hi) << 32)) & SEED_MASK


def make_rng(master: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys)))


def as_rng(seed: Union[int, np.random.Generator, None]) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(value) -> float:
    return float(10.0 * np.log10(value))


def ratio_db(signal: float, interference: float, cap: float = CIR_CAP_DB) -> float:
    """10·log10(signal/interference)，干扰为零或比值超过封顶时返回 cap。"""

    if interference <= 0.0 or signal >= interference * 10.0 ** (cap / 10.0):
        return cap
    return linear_to_db(signal / interference)
