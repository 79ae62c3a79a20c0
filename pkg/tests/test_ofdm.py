import numpy as np
import pytest

from ofdm import (
    ROLES,
    AllocationPlan,
    IqBuffer,
    add_cp,
    apply_cfo,
    assemble_symbol,
    compute_pilot_spacing,
    default_allocation,
    fft,
    ifft,
    mirror_index,
    strip_cp,
    valid_cp_lengths,
)

FS = 4e6


class TestFft:
    @pytest.mark.parametrize("n", [1, 2, 4, 8, 64, 512, 1024])
    def test_matches_reference(self, rng, n):
        x = rng.standard_normal((3, n)) + 1j * rng.standard_normal((3, n))
        np.testing.assert_allclose(fft(x), np.fft.fft(x, axis=-1), atol=1e-9)

    def test_inverse(self, rng):
        x = rng.standard_normal(512) + 1j * rng.standard_normal(512)
        np.testing.assert_allclose(ifft(fft(x)), x, atol=1e-12)
        np.testing.assert_allclose(ifft(x), np.fft.ifft(x), atol=1e-12)

    def test_parseval_and_linearity(self, rng):
        x, y = rng.standard_normal((2, 512)) + 1j * rng.standard_normal((2, 512))
        assert np.sum(np.abs(fft(x)) ** 2) == pytest.approx(512 * np.sum(np.abs(x) ** 2), rel=1e-9)
        a, b = 0.5 - 2j, 1.5j
        np.testing.assert_allclose(fft(a * x + b * y), a * fft(x) + b * fft(y), atol=1e-10)

    @pytest.mark.parametrize("n", [3, 6, 100])
    def test_rejects_non_power_of_two(self, n):
        with pytest.raises(ValueError):
            fft(np.ones(n))


class TestAllocation:
    def test_default_layout(self, plan):
        assert (plan.n_data, plan.n_pilot) == (192, 60)
        np.testing.assert_array_equal(plan.primary_indices, np.arange(1, 253))
        assert plan.mirror_indices.min() == 259 and plan.mirror_indices.max() == 510
        roles = plan.roles()
        assert np.count_nonzero(roles == ROLES["null"]) == 8
        assert roles[0] == roles[511] == ROLES["null"]
        assert plan.pilot_indices[0] == 1 and plan.pilot_indices[-1] == 252

    def test_mirror_convention(self):
        assert mirror_index(0, 512) == 511
        np.testing.assert_array_equal(mirror_index(np.array([1, 255]), 512), [510, 256])

    def test_without_pilots(self, plan):
        bare = plan.without_pilots()
        assert bare.n_pilot == 0
        np.testing.assert_array_equal(bare.data_indices, plan.data_indices)

    def test_rejects_mirror_pair(self):
        with pytest.raises(ValueError):
            AllocationPlan(8, np.array([1, 6]))

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            AllocationPlan(16, np.array([1, 2]), np.array([2]))

    def test_rejects_too_many_carriers(self):
        with pytest.raises(ValueError):
            default_allocation(512, 250, 10)

    def test_assemble(self, plan):
        data = np.ones((4, plan.n_data))
        pilots = -np.ones(plan.n_pilot)
        frame = assemble_symbol(data, pilots, plan)
        assert frame.values.shape == (4, 512)
        np.testing.assert_array_equal(frame.values[:, plan.pilot_indices], -1)
        assert frame.energy == pytest.approx(4 * (plan.n_data + plan.n_pilot))
        np.testing.assert_array_equal(frame.indices("pilot"), plan.pilot_indices)


class TestCyclicPrefix:
    @pytest.mark.parametrize("cp_len", valid_cp_lengths(512))
    def test_add_and_strip(self, rng, cp_len):
        body = rng.standard_normal((2, 512)) + 0j
        with_cp = add_cp(IqBuffer(body, FS), cp_len)
        assert with_cp.samples.shape == (2, 512 + cp_len)
        np.testing.assert_array_equal(with_cp.samples[:, :cp_len], body[:, -cp_len:])
        np.testing.assert_array_equal(strip_cp(with_cp.as_stream()).samples, body)

    def test_zero_cp_is_identity(self, rng):
        buf = IqBuffer(rng.standard_normal(512), FS)
        assert add_cp(buf, 0) is buf

    def test_rejects_odd_length(self):
        with pytest.raises(ValueError):
            add_cp(IqBuffer(np.zeros(512), FS), 100)


class TestCfo:
    def test_phase_continuous_across_symbols(self):
        buf = IqBuffer(np.ones((2, 512)), FS)
        rotated = apply_cfo(buf, 0.25).samples
        np.testing.assert_allclose(rotated[1, 0], np.exp(2j * np.pi * 0.25))
        np.testing.assert_allclose(np.abs(rotated), 1.0)

    def test_offsets_compose(self, rng):
        buf = IqBuffer(rng.standard_normal((3, 512)) + 1j * rng.standard_normal((3, 512)), FS)
        np.testing.assert_allclose(apply_cfo(apply_cfo(buf, 0.1), -0.25).samples, apply_cfo(buf, -0.15).samples, atol=1e-12)

    def test_zero_offset(self):
        buf = IqBuffer(np.ones(512), FS)
        assert apply_cfo(buf, 0.0) is buf

    @pytest.mark.parametrize("eps", [0.5, -0.5, 0.8])
    def test_out_of_range(self, eps):
        with pytest.raises(ValueError):
            apply_cfo(IqBuffer(np.ones(512), FS), eps)


def test_pilot_spacing_at_default_rate():
    delta_f = FS / 512
    spacing = compute_pilot_spacing(delta_f, 640 / FS, 20e-6)
    assert spacing.npt == 1
    assert spacing.npf == 6
    with pytest.raises(ValueError):
        compute_pilot_spacing(delta_f, 640 / FS, 0.0)
