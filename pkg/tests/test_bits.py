import itertools

import numpy as np
import pytest

from bits import (
    PRBS_ALL_ONES,
    BitBlock,
    CodecSpec,
    conv_encode,
    conv_encode_blocks,
    count_bit_errors,
    deinterleave,
    deinterleave_blocks,
    derandomize,
    interleave,
    interleave_blocks,
    interleaver_shape,
    prbs,
    randomize,
    viterbi_decode,
    viterbi_decode_blocks,
)

PRBS_PERIOD = (1 << 15) - 1


class TestBitBlock:
    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            BitBlock(np.array([0, 1, 2]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            BitBlock(np.zeros(0, dtype=np.uint8))

    def test_rejects_unknown_origin(self):
        with pytest.raises(ValueError):
            BitBlock(np.array([1, 0]), "scrambled")


class TestRandomizer:
    def test_maximal_length_period(self):
        seq = prbs(2 * PRBS_PERIOD)
        np.testing.assert_array_equal(seq[:PRBS_PERIOD], seq[PRBS_PERIOD:])
        assert int(seq[:PRBS_PERIOD].sum()) == 1 << 14

    def test_zero_seed_rejected(self):
        with pytest.raises(ValueError):
            prbs(10, 0)

    def test_involution(self, rng):
        bits = rng.integers(0, 2, 1000)
        scrambled = randomize(bits)
        assert scrambled.origin == "randomized"
        restored = derandomize(scrambled)
        assert restored.origin == "raw"
        np.testing.assert_array_equal(restored.bits, bits)

    def test_first_sixteen_bits_from_all_ones(self):
        # 全 1 寄存器：前 14 拍第 14、15 级均为 1，反馈为 0；第 15 拍两级为 0 与 1
        expected = np.array([0] * 14 + [1, 0], dtype=np.uint8)
        np.testing.assert_array_equal(prbs(16), expected)
        data = np.tile([1, 0, 0, 1], 4).astype(np.uint8)
        np.testing.assert_array_equal(randomize(data, PRBS_ALL_ONES).bits, data ^ expected)

    def test_breaks_long_runs(self):
        scrambled = randomize(np.zeros(256, dtype=np.uint8), PRBS_ALL_ONES)
        assert 0 < scrambled.bits.sum() < 256


class TestConvolutionalCode:
    def test_impulse_response(self):
        coded = conv_encode(np.array([1]))
        expected = [1, 1, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1]
        np.testing.assert_array_equal(coded.bits, expected)
        assert coded.origin == "coded"

    def test_output_length(self):
        coded = conv_encode_blocks(np.zeros((3, 50), dtype=np.uint8))
        assert coded.shape == (3, 2 * (50 + 6))
        assert not coded.any()

    @pytest.mark.parametrize("length", [1, 7, 186, 570])
    def test_clean_decode(self, rng, length):
        bits = rng.integers(0, 2, length)
        decoded = viterbi_decode(conv_encode(bits))
        np.testing.assert_array_equal(decoded.bits, bits)

    def test_corrects_isolated_errors(self, rng):
        bits = rng.integers(0, 2, 200)
        coded = conv_encode(bits).bits.copy()
        coded[[10, 150, 300]] ^= 1
        np.testing.assert_array_equal(viterbi_decode(coded).bits, bits)

    def test_decodes_to_nearest_codeword(self, rng):
        candidates = np.array(list(itertools.product([0, 1], repeat=6)), dtype=np.uint8)
        codewords = conv_encode_blocks(candidates)
        for _ in range(20):
            coded = codewords[rng.integers(len(candidates))].copy()
            coded[rng.choice(coded.size, 6, replace=False)] ^= 1
            best = int((codewords != coded).sum(axis=1).min())
            decoded = viterbi_decode(coded).bits
            assert int((conv_encode(decoded).bits != coded).sum()) == best

    def test_path_distance_never_exceeds_transmitted(self, rng):
        blocks = rng.integers(0, 2, (8, 186)).astype(np.uint8)
        coded = conv_encode_blocks(blocks)
        noisy = coded ^ (rng.random(coded.shape) < 0.06).astype(np.uint8)
        decoded = viterbi_decode_blocks(noisy)
        assert np.all((conv_encode_blocks(decoded) != noisy).sum(axis=1) <= (coded != noisy).sum(axis=1))

    def test_blocks_decode_independently(self, rng):
        blocks = rng.integers(0, 2, (4, 90))
        coded = conv_encode_blocks(blocks)
        coded[2, 40] ^= 1
        np.testing.assert_array_equal(viterbi_decode_blocks(coded), blocks)

    def test_linear_over_gf2(self, rng):
        a, b = rng.integers(0, 2, (2, 120))
        np.testing.assert_array_equal(conv_encode(a ^ b).bits, conv_encode(a).bits ^ conv_encode(b).bits)

    def test_rejects_short_or_odd_input(self):
        with pytest.raises(ValueError):
            viterbi_decode(np.zeros(12, dtype=np.uint8))
        with pytest.raises(ValueError):
            viterbi_decode(np.zeros(31, dtype=np.uint8))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"constraint_length": 1},
            {"generator_polynomials": (0o171,)},
            {"generator_polynomials": (0o171, 0o400)},
            {"tail_bits": 4},
        ],
    )
    def test_codec_spec_validation(self, kwargs):
        with pytest.raises(ValueError):
            CodecSpec(**kwargs)


class TestInterleaver:
    def test_column_write_row_read(self):
        out = interleave_blocks(np.arange(32), rows=2, cols=16)
        np.testing.assert_array_equal(out, np.r_[np.arange(0, 32, 2), np.arange(1, 32, 2)])

    def test_inverse(self, rng):
        blocks = rng.integers(0, 2, (5, 384))
        rows, cols = interleaver_shape(384)
        np.testing.assert_array_equal(deinterleave_blocks(interleave_blocks(blocks, rows, cols), rows, cols), blocks)

    def test_origins(self):
        bits = np.tile([0, 1], 16)
        assert interleave(bits, 2, 16).origin == "interleaved"
        assert deinterleave(bits, 2, 16).origin == "coded"

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            interleave_blocks(np.zeros(30), 2, 16)
        with pytest.raises(ValueError):
            interleaver_shape(100)


def test_count_bit_errors():
    assert count_bit_errors([0, 1, 1, 0], [1, 1, 0, 0]) == (2, 4)
    with pytest.raises(ValueError):
        count_bit_errors([0, 1], [0, 1, 1])
