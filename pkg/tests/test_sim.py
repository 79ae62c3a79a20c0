import math
import time

import numpy as np
import pandas as pd
import pytest

from common import ConfigError, derive_seed
from sim import (
    CIR_COLUMNS,
    CSV_COLUMNS,
    LinkConfig,
    _Link,
    measure_cir,
    parse_bool,
    parse_grid,
    rayleigh_reference_ber,
    run_link,
    sweep,
)


def _quick(**overrides):
    base = dict(channel="ideal", epsilon=0.0, snr_grid_db=(30.0,), n_frames=1, seed=5)
    base.update(overrides)
    return LinkConfig(**base)


class TestParsing:
    def test_range_grid_is_inclusive(self):
        assert parse_grid("0:2:20") == tuple(float(v) for v in range(0, 21, 2))
        grid = parse_grid("0:0.02:0.4")
        assert len(grid) == 21
        assert grid[-1] == 0.4

    def test_list_and_scalar(self):
        assert parse_grid("1, 2,5") == (1.0, 2.0, 5.0)
        assert parse_grid(7) == (7.0,)
        assert parse_grid([3, 4]) == (3.0, 4.0)

    @pytest.mark.parametrize("text", ["", "a:b:c", "0:-1:10", "5:1:0", "1,x"])
    def test_bad_grid(self, text):
        with pytest.raises(ConfigError):
            parse_grid(text)

    @pytest.mark.parametrize("text, value", [("yes", True), ("0", False), ("TRUE", True), (False, False)])
    def test_bool(self, text, value):
        assert parse_bool(text) is value

    def test_bad_bool(self):
        with pytest.raises(ConfigError):
            parse_bool("maybe")


class TestLinkConfig:
    def test_defaults_are_valid(self):
        cfg = LinkConfig().validate()
        assert cfg.cp_len == 128
        assert cfg.snr_grid_db[-1] == 20.0

    @pytest.mark.parametrize("scheme, bins", [("standard", 192), ("scm", 384), ("pascs", 504)])
    def test_occupied_bins(self, scheme, bins):
        assert LinkConfig(scheme=scheme).occupied_bins == bins

    @pytest.mark.parametrize("modulation, info_bits", [("qpsk", 186), ("qam16", 378), ("qam64", 570)])
    def test_payload_sizes(self, modulation, info_bits):
        cfg = LinkConfig(modulation=modulation)
        assert cfg.info_bits_per_symbol == info_bits
        assert cfg.payload_bits_per_frame == 48 * info_bits
        assert cfg.payload_mbps == pytest.approx(48 * info_bits * 200 / 1e6)

    @pytest.mark.parametrize("scheme, bins", [("standard", 192), ("scm", 384), ("pascs", 384)])
    def test_energy_per_bit_counts_data_copies(self, scheme, bins):
        cfg = LinkConfig(scheme=scheme)
        assert cfg.data_bearing_bins == bins
        assert cfg.energy_per_bit == pytest.approx(bins / 186)

    def test_pilot_energy_is_reported_as_overhead(self):
        assert LinkConfig(scheme="pascs").overhead_db == pytest.approx(10 * math.log10(504 / 384))
        assert LinkConfig(scheme="scm").overhead_db == 0.0
        assert LinkConfig(scheme="standard").overhead_db == 0.0

    def test_throughput_shows_bandwidth_cost(self):
        standard, scm, pascs = (LinkConfig(scheme=s, modulation="qam16") for s in ("standard", "scm", "pascs"))
        assert standard.payload_mbps == scm.payload_mbps == pascs.payload_mbps
        assert scm.throughput_mbps == pytest.approx(0.5 * standard.throughput_mbps)
        assert pascs.throughput_mbps == pytest.approx(pascs.payload_mbps)
        assert standard.throughput_mbps > scm.throughput_mbps > pascs.throughput_mbps
        assert standard.bits_per_bin == pytest.approx(378 / 192)

    @pytest.mark.parametrize("scheme", ["standard", "scm", "pascs"])
    def test_transmitted_energy_per_bit(self, scheme):
        cfg = _quick(scheme=scheme)
        streams = _Link(cfg).transmit(0).streams.samples
        body = streams.reshape(2, cfg.symbols_per_frame, -1)[..., cfg.cp_len :]
        per_bit = np.sum(np.abs(body) ** 2) * cfg.n_fft / cfg.payload_bits_per_frame
        assert per_bit == pytest.approx(cfg.energy_per_bit * 10 ** (cfg.overhead_db / 10), rel=1e-9)
        assert per_bit == pytest.approx(cfg.occupied_bins / cfg.info_bits_per_symbol, rel=1e-9)

    def test_pilots_only_for_pascs(self):
        assert LinkConfig(scheme="pascs").allocation.n_pilot == 60
        assert LinkConfig(scheme="scm").allocation.n_pilot == 0

    @pytest.mark.parametrize(
        "overrides",
        [
            {"scheme": "ideal"},
            {"modulation": "qam256"},
            {"channel": "sui7"},
            {"epsilon": 0.5},
            {"snr_grid_db": ()},
            {"n_frames": 0},
            {"cp_fraction": 0.2},
            {"n_fft": 500},
            {"symbols_per_frame": 3},
            {"update_mode": "jakes"},
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(ConfigError):
            LinkConfig(**overrides).validate()

    def test_cyclic_prefix_must_cover_delay_spread(self):
        with pytest.raises(ConfigError, match="sui6"):
            LinkConfig(channel="sui6", cp_fraction=1 / 32).validate()
        LinkConfig(channel="sui6", cp_fraction=1 / 4).validate()

    def test_dict_round_trip(self):
        cfg = LinkConfig(scheme="scm", modulation="qam16", channel="sui3", epsilon=0.1, seed=9)
        assert LinkConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_text_values(self):
        cfg = LinkConfig.from_dict({"snr_grid_db": "0:5:10", "cp_fraction": "1/8", "cfo_correction": "on", "n_frames": "3"})
        assert cfg.snr_grid_db == (0.0, 5.0, 10.0)
        assert cfg.cp_len == 64
        assert cfg.cfo_correction is True
        assert cfg.n_frames == 3

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            LinkConfig.from_dict({"snr": "10"})


class TestRunLink:
    @pytest.mark.parametrize("modulation", ["qpsk", "qam16", "qam64"])
    @pytest.mark.parametrize("scheme", ["standard", "scm", "pascs"])
    def test_clean_link_is_error_free(self, scheme, modulation):
        cfg = _quick(scheme=scheme, modulation=modulation)
        table = run_link(cfg).to_frame()
        assert len(table) == 1
        row = table.iloc[0]
        assert row["bit_errors"] == 0
        assert row["bits_total"] == cfg.payload_bits_per_frame

    @pytest.mark.parametrize("modulation", ["qam16", "qam64"])
    def test_awgn_high_snr(self, modulation):
        table = run_link(_quick(channel="awgn", modulation=modulation)).to_frame()
        assert table["ber"].iloc[0] < 1e-3

    def test_reproducible(self):
        cfg = _quick(channel="sui3", epsilon=0.1, snr_grid_db=(6.0, 12.0), modulation="qam16")
        a = run_link(cfg).to_frame()[CSV_COLUMNS]
        b = run_link(cfg).to_frame()[CSV_COLUMNS]
        pd.testing.assert_frame_equal(a, b)

    def test_ber_falls_with_snr(self):
        cfg = _quick(channel="awgn", modulation="qam16", snr_grid_db=(0.0, 20.0), n_frames=2)
        ber = run_link(cfg).to_frame()["ber"].to_numpy()
        assert ber[0] > 0.01
        assert ber[1] < ber[0]

    def test_ber_non_increasing_over_snr_grid(self):
        cfg = _quick(scheme="standard", channel="awgn", modulation="qam16", snr_grid_db=(2.0, 5.0, 8.0, 11.0), n_frames=3)
        ber = run_link(cfg).to_frame()["ber"].to_numpy()
        assert np.all(np.diff(ber) <= 0)
        assert ber[0] > 10 * max(ber[-1], 1e-5)

    def test_mirror_copies_give_no_free_gain(self):
        # 同一 Eb/N0 下镜像合并只抵消多花的一倍数据能量
        base = dict(channel="awgn", modulation="qam16", snr_grid_db=(6.0,), n_frames=3)
        ber = {s: run_link(_quick(scheme=s, **base)).to_frame()["ber"].iloc[0] for s in ("standard", "scm", "pascs")}
        assert ber["pascs"] == pytest.approx(ber["scm"], rel=0.05)
        assert 0.5 < ber["scm"] / ber["standard"] < 2.0

    def test_cfo_statistics_only_with_pilots(self):
        pascs = run_link(_quick(epsilon=0.1, cfo_correction=True)).to_frame().iloc[0]
        assert pascs["mean_cfo_est"] == pytest.approx(0.1, abs=0.02)
        assert pascs["rms_cfo_err"] < 0.02
        assert pascs["bit_errors"] == 0
        standard = run_link(_quick(scheme="standard", epsilon=0.1, cfo_correction=True)).to_frame().iloc[0]
        assert math.isnan(standard["mean_cfo_est"])
        assert math.isnan(standard["rms_cfo_err"])

    def test_common_phase_removed_without_correction(self):
        # 公共相位按真实 ε 去除；不校正时只剩 ICI
        row = run_link(_quick(epsilon=0.1, cfo_correction=False)).to_frame().iloc[0]
        assert row["bit_errors"] == 0
        assert row["mean_cfo_est"] == pytest.approx(0.1, abs=0.02)

    @pytest.mark.parametrize("channel", ["rayleigh", "sui1", "sui4"])
    def test_fading_channels_run(self, channel):
        row = run_link(_quick(channel=channel, epsilon=0.05)).to_frame().iloc[0]
        assert 0.0 <= row["ber"] < 1.0
        assert row["seed"] == 5

    def test_continuous_update(self):
        row = run_link(_quick(channel="sui5", update_mode="continuous", epsilon=0.05)).to_frame().iloc[0]
        assert 0.0 <= row["ber"] < 1.0

    def test_csv_output(self, tmp_path):
        path = tmp_path / "run.csv"
        run_link(_quick(scheme="standard", snr_grid_db=(10.0, 20.0))).write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 3
        # 无导频方案的 CFO 统计为空单元格
        fields = lines[1].split(",")
        assert fields[CSV_COLUMNS.index("mean_cfo_est")] == ""

    def test_csv_is_byte_identical_across_runs(self, tmp_path):
        cfg = _quick(channel="sui2", epsilon=0.1, cfo_correction=True, snr_grid_db=(4.0, 16.0))
        run_link(cfg).write_csv(tmp_path / "a.csv")
        run_link(cfg).write_csv(tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestMeasuredCir:
    @pytest.mark.parametrize("scheme", ["standard", "scm", "pascs"])
    def test_agrees_with_theory(self, scheme):
        table = measure_cir(LinkConfig(scheme=scheme, seed=3), [0.1, 0.2, 0.3])
        assert list(table.columns) == CIR_COLUMNS
        diff = (table["measured_cir_db"] - table["theoretical_cir_db"]).abs()
        assert diff.max() < 0.5

    def test_improvement_over_standard(self):
        pascs = measure_cir(LinkConfig(scheme="pascs"), [0.2])["measured_cir_db"].iloc[0]
        standard = measure_cir(LinkConfig(scheme="standard"), [0.2])["measured_cir_db"].iloc[0]
        assert 12.0 < pascs - standard < 23.0

    def test_rejects_bad_grid(self):
        with pytest.raises(ConfigError):
            measure_cir(LinkConfig(), [])
        with pytest.raises(ConfigError):
            measure_cir(LinkConfig(), [0.6])


class TestSweep:
    def test_scheme_axis(self):
        table = sweep(_quick(), "scheme", ["standard", "scm", "pascs"])
        assert table["scheme"].tolist() == ["standard", "scm", "pascs"]
        assert table["seed"].tolist() == [derive_seed(5, row) for row in range(3)]

    def test_snr_axis(self):
        table = sweep(_quick(channel="awgn"), "snr", [5.0, 25.0])
        assert table["snr_db"].tolist() == [5.0, 25.0]

    def test_rejects(self):
        with pytest.raises(ConfigError):
            sweep(_quick(), "frames", [1])
        with pytest.raises(ConfigError):
            sweep(_quick(), "snr", [])


def test_rayleigh_reference():
    ber = rayleigh_reference_ber(np.array([10.0]), "qpsk")[0]
    # Eb/N0 = 10 dB：QPSK 的 Es/N0 线性值为 20
    assert ber == pytest.approx(0.5 * (1 - np.sqrt(10 / 11)))
    curve = rayleigh_reference_ber(np.arange(0, 31, 10), "qam64")
    assert np.all(np.diff(curve) < 0)


@pytest.mark.slow
class TestAcceptance:
    def test_self_cancellation_rescues_dense_constellation(self):
        cfg = LinkConfig(modulation="qam64", channel="awgn", epsilon=0.2, snr_grid_db=(30.0,), n_frames=2, seed=1)
        pascs = run_link(cfg).to_frame()["ber"].iloc[0]
        standard = run_link(LinkConfig(**{**cfg.to_dict(), "scheme": "standard"})).to_frame()["ber"].iloc[0]
        assert standard > 1e-3
        assert pascs < 0.1 * standard

    def test_estimator_accuracy_in_fading(self):
        cfg = LinkConfig(channel="sui1", epsilon=0.15, cfo_correction=True, snr_grid_db=(20.0,), n_frames=5, seed=2)
        row = run_link(cfg).to_frame().iloc[0]
        assert row["mean_cfo_est"] == pytest.approx(0.15, abs=0.01)
        assert row["rms_cfo_err"] < 0.02

    def test_pascs_not_worse_in_line_of_sight_fading(self):
        base = dict(channel="sui1", epsilon=0.2, snr_grid_db=(12.0,), n_frames=40, seed=8)
        pascs = run_link(LinkConfig(scheme="pascs", **base)).to_frame()["ber"].iloc[0]
        standard = run_link(LinkConfig(scheme="standard", **base)).to_frame()["ber"].iloc[0]
        assert pascs <= standard

    def test_cfo_correction_recovers_offset_free_performance(self):
        base = dict(scheme="pascs", modulation="qam16", channel="awgn", snr_grid_db=(14.0,), n_frames=20, seed=6)
        reference = run_link(LinkConfig(epsilon=0.0, **base)).to_frame()["ber"].iloc[0]
        corrected = run_link(LinkConfig(epsilon=0.2, cfo_correction=True, **base)).to_frame()["ber"].iloc[0]
        assert corrected <= 2 * reference + 1e-4

    def test_ideal_channel_runtime(self):
        cfg = LinkConfig(modulation="qam64", channel="ideal", epsilon=0.0, snr_grid_db=(30.0,), n_frames=100, seed=4)
        t0 = time.perf_counter()
        row = run_link(cfg).to_frame().iloc[0]
        assert time.perf_counter() - t0 < 10.0
        assert row["bit_errors"] == 0

    def test_line_of_sight_ordering_in_16qam(self):
        # 16-QAM 下 pascs 在 12 dB 附近落到 1e-3 量级；QPSK 在 8..16 dB 已无误码
        base = dict(modulation="qam16", channel="sui1", epsilon=0.2, snr_grid_db=(8.0, 12.0, 16.0), n_frames=100, seed=12)
        ber = {
            "pascs": run_link(LinkConfig(scheme="pascs", cfo_correction=True, **base)).to_frame()["ber"].to_numpy(),
            "scm": run_link(LinkConfig(scheme="scm", **base)).to_frame()["ber"].to_numpy(),
            "standard": run_link(LinkConfig(scheme="standard", **base)).to_frame()["ber"].to_numpy(),
        }
        assert 1e-4 <= ber["pascs"][1] <= 1e-2
        assert np.all(ber["pascs"] <= ber["scm"])
        assert np.all(ber["scm"] <= ber["standard"])
        assert ber["pascs"][0] < ber["scm"][0] < ber["standard"][0]

    def test_sui6_keeps_dense_constellation_above_target(self):
        base = dict(modulation="qam64", channel="sui6", epsilon=0.2, snr_grid_db=(10.0, 20.0), n_frames=40, seed=7)
        for scheme in ("scm", "pascs"):
            ber = run_link(LinkConfig(scheme=scheme, **base)).to_frame()["ber"].to_numpy()
            assert ber[1] > 1e-3, scheme

    def test_line_of_sight_beats_heavy_multipath(self):
        base = dict(scheme="pascs", modulation="qam64", epsilon=0.2, snr_grid_db=(10.0, 20.0), n_frames=40, seed=7)
        sui1 = run_link(LinkConfig(channel="sui1", **base)).to_frame()["ber"].to_numpy()
        sui6 = run_link(LinkConfig(channel="sui6", **base)).to_frame()["ber"].to_numpy()
        assert np.all(sui1 < sui6)
