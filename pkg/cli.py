#!/usr/bin/env python3
"""
命令行入口。

    python cli.py simulate --scheme pascs --mod qam16 --channel sui3 --cfo 0.2 --correct-cfo \\
        --snr 0:2:20 --frames 2000 --seed 42 --out results.csv
    python cli.py cir --scheme pascs --cfo-grid 0:0.02:0.4 --out cir.csv
    python cli.py profile --model sui1
    python cli.py sweep --axis scheme --values standard,scm,pascs --channel sui1 --snr 12
    python cli.py ici --cfo 0.2 --max-offset 16 --out ici.csv

配置文件为 "键 = 值" 文本，键与长选项同名（去掉 --），# 之后为注释；
优先级：内置默认 < 配置文件 < 命令行。
退出码：0 成功，2 配置非法，3 运行期数值失败。
"""
from __future__ import annotations

import argparse
import logging
import re
import sys
from typing import Dict, List, Optional

import pandas as pd
from bidict import bidict
from colorama import Fore, Style

from channel import TERRAIN_DESCRIPTIONS, sui_profile
from common import EXIT_CONFIG, EXIT_OK, ConfigError, SimError, setup_logging
from ici import SCHEMES, ici_profile
from mapping import MODULATIONS
from ofdm import compute_pilot_spacing
from sim import (
    CHANNELS,
    CSV_COLUMNS,
    SWEEP_AXES,
    LinkConfig,
    measure_cir,
    parse_grid,
    run_link,
    sweep,
    write_csv,
)

logger = logging.getLogger(__name__)

# 命令行 / 配置文件键 <-> LinkConfig 字段
CONFIG_KEYS = bidict(
    {
        "scheme": "scheme",
        "mod": "modulation",
        "channel": "channel",
        "cfo": "epsilon",
        "correct-cfo": "cfo_correction",
        "snr": "snr_grid_db",
        "frames": "n_frames",
        "seed": "seed",
        "cp": "cp_fraction",
        "sample-rate": "sample_rate_hz",
        "update-mode": "update_mode",
        "carrier-ghz": "carrier_ghz",
    }
)
# 不属于 LinkConfig、由各子命令自己消费的键
EXTRA_KEYS = ("cfo-grid", "out")

RE_CONFIG_LINE = re.compile(r"^\s*([A-Za-z][\w-]*)\s*=\s*(.*?)\s*$")

DEFAULT_CFO_GRID = "0:0.02:0.4"


def parse_config_text(text: str) -> Dict[str, str]:
    entries: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        match = RE_CONFIG_LINE.match(line)
        if not match:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = match.group(1).lower().replace("_", "-"), match.group(2)
        if key not in CONFIG_KEYS and key not in EXTRA_KEYS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        entries[key] = value
    return entries


def load_config_file(path: str) -> Dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def _cli_entries(args: argparse.Namespace) -> Dict[str, object]:
    entries: Dict[str, object] = {}
    for key in list(CONFIG_KEYS) + list(EXTRA_KEYS):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            entries[key] = value
    return entries


def resolve_settings(args: argparse.Namespace) -> Dict[str, object]:
    """合并配置文件与命令行，返回以 CLI 键命名的设置。"""

    merged: Dict[str, object] = {}
    if getattr(args, "config", None):
        merged.update(load_config_file(args.config))
    merged.update(_cli_entries(args))
    return merged


def build_config(settings: Dict[str, object], validate: bool = True) -> LinkConfig:
    data = {CONFIG_KEYS[k]: v for k, v in settings.items() if k in CONFIG_KEYS}
    cfg = LinkConfig.from_dict(data)
    return cfg.validate() if validate else cfg


# ----------------------------------------------------------------- 输出


def _headline(text: str) -> None:
    print(Fore.CYAN + Style.BRIGHT + text + Style.RESET_ALL)


def _emit(table: pd.DataFrame, out: Optional[object], columns: Optional[List[str]] = None) -> None:
    if out:
        write_csv(table, out, columns)
        print(Fore.GREEN + f"wrote {len(table)} rows to {out}" + Style.RESET_ALL)
    else:
        print((table if columns is None else table[columns]).to_string(index=False))


# ----------------------------------------------------------------- 子命令


def cmd_simulate(args: argparse.Namespace) -> int:
    settings = resolve_settings(args)
    cfg = build_config(settings)
    _headline(
        f"{cfg.scheme} / {cfg.modulation} / {cfg.channel}  eps={cfg.epsilon}  "
        f"frames={cfg.n_frames}  seed={cfg.seed}"
    )
    result = run_link(cfg)
    _emit(result.to_frame(), settings.get("out"), CSV_COLUMNS)
    return EXIT_OK


def cmd_cir(args: argparse.Namespace) -> int:
    settings = resolve_settings(args)
    cfg = build_config(settings)
    grid = parse_grid(settings.get("cfo-grid", DEFAULT_CFO_GRID))
    _headline(f"CIR vs CFO, scheme {cfg.scheme}")
    _emit(measure_cir(cfg, grid), settings.get("out"))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = resolve_settings(args)
    cfg = build_config(settings)
    if args.axis == "scheme":
        values = [v.strip() for v in args.values.split(",") if v.strip()]
    else:
        values = list(parse_grid(args.values))
    _headline(f"sweep over {args.axis}: {values}")
    _emit(sweep(cfg, args.axis, values), settings.get("out"), CSV_COLUMNS)
    return EXIT_OK


def cmd_profile(args: argparse.Namespace) -> int:
    model = int(args.model) if str(args.model).isdigit() else args.model
    try:
        profile = sui_profile(model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    settings = resolve_settings(args)
    cfg = build_config(settings, validate=False)

    _headline(f"{profile.name.upper()}  terrain {profile.terrain}: {TERRAIN_DESCRIPTIONS[profile.terrain]}")
    taps = pd.DataFrame(
        {
            "tap": range(1, profile.n_taps + 1),
            "power_db": profile.tap_power_db,
            "k_factor": profile.k_factor,
            "delay_us": profile.tap_delay_us,
            "doppler_hz": profile.max_doppler_hz,
            "delay_samples": profile.delay_samples(cfg.sample_rate_hz),
        }
    )
    print(taps.to_string(index=False))
    print(f"antenna correlation {profile.antenna_corr}, gain normalization {profile.gain_norm_db} dB")

    delta_f = cfg.sample_rate_hz / cfg.n_fft
    t_s = (cfg.n_fft + cfg.cp_len) / cfg.sample_rate_hz
    spacing = compute_pilot_spacing(delta_f, t_s, profile.max_delay_us * 1e-6)
    print(
        f"pilot spacing bounds at {cfg.sample_rate_hz:g} Hz, CP {cfg.cp_len}: "
        f"N_pt={spacing.npt}, N_pf={spacing.npf} (delta_f={delta_f:g} Hz, T_s={t_s:g} s)"
    )
    return EXIT_OK


def cmd_ici(args: argparse.Namespace) -> int:
    if not abs(args.cfo) < 0.5:
        raise ConfigError(f"|cfo| must be < 0.5, got {args.cfo}")
    try:
        table = ici_profile(args.n_fft, args.cfo, args.max_offset, args.reference)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _headline(f"ICI coefficient magnitudes, eps={args.cfo}, N={args.n_fft}")
    _emit(table, args.out)
    return EXIT_OK


# ----------------------------------------------------------------- 解析器


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; command-line flags override it")
    p.add_argument("-v", "--verbose", action="store_true", default=False, help="debug logging")


def _add_link(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=list(SCHEMES))
    p.add_argument("--mod", choices=list(MODULATIONS))
    p.add_argument("--channel", choices=list(CHANNELS))
    p.add_argument("--cfo", type=float, help="normalized carrier frequency offset")
    p.add_argument("--correct-cfo", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--snr", help="Eb/N0 grid in dB, start:step:stop or a,b,c")
    p.add_argument("--frames", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cp", help="cyclic prefix fraction: 1/4, 1/8, 1/16 or 1/32")
    p.add_argument("--sample-rate", type=float, help="Hz")
    p.add_argument("--update-mode", choices=["block", "continuous"])
    p.add_argument("--carrier-ghz", type=float)
    p.add_argument("--out", help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="PASCS WiMAX OFDM link simulator",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo BER over an SNR grid")
    _add_link(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cir", help="measured and theoretical CIR over a CFO grid")
    _add_link(p)
    p.add_argument("--cfo-grid", help=f"CFO grid, default {DEFAULT_CFO_GRID}")
    _add_common(p)
    p.set_defaults(func=cmd_cir)

    p = sub.add_parser("sweep", help="one run per value along an axis")
    _add_link(p)
    p.add_argument("--axis", choices=list(SWEEP_AXES), required=True)
    p.add_argument("--values", required=True, help="grid or comma list")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("profile", help="print SUI channel parameters")
    p.add_argument("--model", default="sui1", help="1..6 or sui1..sui6")
    p.add_argument("--sample-rate", type=float, help="Hz")
    p.add_argument("--cp", help="cyclic prefix fraction")
    _add_common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("ici", help="ICI coefficient profile around a reference carrier")
    p.add_argument("--cfo", type=float, default=0.2)
    p.add_argument("--max-offset", type=int, default=16)
    p.add_argument("--reference", type=int, help="reference carrier, default N/4")
    p.add_argument("--n-fft", type=int, default=512)
    p.add_argument("--out", help="CSV output path")
    p.add_argument("-v", "--verbose", action="store_true", default=False, help="debug logging")
    p.set_defaults(func=cmd_ici)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        return args.func(args)
    except SimError as exc:
        logger.error("%s", exc)
        print(Fore.RED + f"error: {exc}" + Style.RESET_ALL, file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
