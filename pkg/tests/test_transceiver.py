import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from semimo.channel import ChannelSet, SeedSpec, draw_channel_set
from semimo.link import QamParams, ber_from_sinr, link_budget, q_function
from semimo.precoding import mf_precoder, zf_precoder
from semimo.transceiver import (
    BitPlaneSource,
    QamConstellation,
    combine_bit_planes,
    qam_demodulate,
    qam_modulate,
    split_bit_planes,
    transmit_frame,
)


class TestBitPlanes:
    def test_single_pixel_binary_expansion(self):
        img = np.array([[170]], dtype=np.uint8)  # 10101010
        src = split_bit_planes(img)
        lsb_to_msb = [int(p[0]) for p in src.planes]
        assert lsb_to_msb == [0, 1, 0, 1, 0, 1, 0, 1]

    def test_zero_pixel_gives_zero_planes(self):
        src = split_bit_planes(np.zeros((2, 2), dtype=np.uint8))
        assert all(np.all(p == 0) for p in src.planes)

    def test_roundtrip_random_image(self):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        assert np.array_equal(split_bit_planes(img).to_image(), img)

    def test_all_ones_planes_combine_to_255(self):
        planes = [np.ones(10, dtype=np.uint8) for _ in range(8)]
        assert np.all(combine_bit_planes(planes) == 255)

    def test_msb_weight(self):
        planes = [np.zeros(4, dtype=np.uint8) for _ in range(8)]
        planes[7] = np.ones(4, dtype=np.uint8)
        assert np.all(combine_bit_planes(planes) == 128)

    def test_rejects_other_stream_counts(self):
        with pytest.raises(ValueError):
            split_bit_planes(np.zeros((2, 2), dtype=np.uint8), n_streams=4)

    def test_combine_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            combine_bit_planes([np.zeros(4, np.uint8), np.zeros(5, np.uint8)])

    @settings(max_examples=20, deadline=None)
    @given(
        arrays(
            np.uint8,
            st.tuples(st.integers(1, 16), st.integers(1, 16)),
            elements=st.integers(0, 255),
        )
    )
    def test_roundtrip_property(self, img):
        assert np.array_equal(split_bit_planes(img).to_image(), img)


class TestConstellation:
    @pytest.mark.parametrize("order", [4, 16, 64])
    def test_unit_average_energy(self, order):
        const = QamConstellation.square(order)
        assert np.mean(np.abs(const.points) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_gray_neighbors_differ_in_one_bit_order16(self):
        const = QamConstellation.square(16)
        # Exhaustive pairwise check: points at minimal axis distance differ
        # in exactly one label bit.
        spacing = np.min(np.diff(const.levels))
        for a in range(16):
            for b in range(a + 1, 16):
                dz = const.points[a] - const.points[b]
                horizontal = abs(dz.real) < 1.5 * spacing and dz.imag == 0
                vertical = abs(dz.imag) < 1.5 * spacing and dz.real == 0
                if horizontal or vertical:
                    assert bin(a ^ b).count("1") == 1

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            QamConstellation.square(8)

    @pytest.mark.parametrize("order", [4, 16, 64])
    def test_noiseless_roundtrip(self, order):
        rng = np.random.default_rng(1)
        bits = rng.integers(0, 2, size=10_000, dtype=np.uint8)
        const = QamConstellation.square(order)
        symbols = qam_modulate(bits, const)
        back = qam_demodulate(symbols, const, n_bits=bits.size)
        assert np.array_equal(back, bits)

    def test_padding_recorded_in_symbol_count(self):
        const = QamConstellation.square(16)
        bits = np.ones(10, dtype=np.uint8)  # 10 bits -> 3 symbols, pad 2
        assert qam_modulate(bits, const).size == 3

    def test_slicing_equals_brute_force_min_distance(self):
        const = QamConstellation.square(16)
        rng = np.random.default_rng(2)
        noisy = rng.normal(size=400) + 1j * rng.normal(size=400)
        fast = qam_demodulate(noisy, const)
        dists = np.abs(noisy[:, None] - const.points[None, :])
        labels = np.argmin(dists, axis=1)
        per_axis = const.bits_per_symbol
        brute = (
            (labels[:, None] >> np.arange(per_axis - 1, -1, -1)) & 1
        ).astype(np.uint8).ravel()
        assert np.array_equal(fast, brute)

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=200))
    def test_roundtrip_property_qpsk(self, bit_list):
        const = QamConstellation.square(4)
        bits = np.array(bit_list, dtype=np.uint8)
        back = qam_demodulate(qam_modulate(bits, const), const, n_bits=bits.size)
        assert np.array_equal(back, bits)


def make_frame_setup(n_tx=16, n_users=8, err_var=0.0, seed=100, size=32):
    channel = draw_channel_set(n_tx, n_users, err_var, SeedSpec(seed))
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, size=(size, size), dtype=np.uint8)
    return channel, split_bit_planes(img), img


class TestTransmitFrame:
    def test_noiseless_zf_perfect_csi_is_error_free(self):
        channel, source, img = make_frame_setup()
        result = transmit_frame(
            source, channel, zf_precoder(channel.h_known), 1.0, 0.0,
            QamConstellation.square(4), SeedSpec(0),
        )
        assert np.all(result.ber == 0)
        assert np.array_equal(result.image(), img)

    def test_empirical_ber_matches_curve_for_zf_perfect_csi(self):
        channel, source, _ = make_frame_setup(size=128)
        precoder = zf_precoder(channel.h_known)
        # Pick the power so the weakest stream sits at BER 1e-2.
        gains = np.abs(np.diagonal(channel.h_known.conj().T @ precoder.matrix_f)) ** 2
        target = 2.3263**2  # Q(2.3263) ~ 1e-2
        power = target / gains.min()
        budget = link_budget(channel, precoder, power, 1.0)
        analytic = ber_from_sinr(budget.sinr, QamParams(4))
        totals = np.zeros(channel.n_users)
        frames = 4
        for frame in range(frames):
            result = transmit_frame(
                source, channel, precoder, power, 1.0,
                QamConstellation.square(4), SeedSpec(9000, frame),
            )
            totals += result.bit_errors
        empirical = totals / (frames * 128 * 128)
        keep = analytic >= 3e-3  # enough errors to resolve at this bit count
        assert keep.any()
        np.testing.assert_allclose(empirical[keep], analytic[keep], rtol=0.25)

    def test_identical_channels_hit_interference_floor(self):
        # Two users sharing one channel direction jam each other: per-axis
        # the interferer shifts the symbol by its own +-1 level, so even
        # noiselessly the error rate stays above Q(beta).
        h = np.zeros((4, 2), dtype=complex)
        h[0, :] = 1.0
        channel = ChannelSet(4, 2, h, h, 0.0)
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        source = split_bit_planes(img)
        planes = (source.planes[0], source.planes[1])
        source2 = BitPlaneSource(64, 64, planes)
        result = transmit_frame(
            source2, channel, mf_precoder(h), 10_000.0, 1.0,
            QamConstellation.square(4), SeedSpec(4),
        )
        floor = q_function(QamParams(4).beta)
        assert np.all(result.ber >= floor)

    def test_mf_floor_vs_zf_decay_at_high_snr(self):
        channel, source, _ = make_frame_setup(size=64, seed=55)
        power = 10_000.0  # 40 dB over unit noise
        budget_mf = link_budget(channel, mf_precoder(channel.h_known), power, 1.0)
        assert budget_mf.i_precode.max() > 0.1 * power  # interference-limited
        ber = {}
        for name, build in [("mf", mf_precoder), ("zf", zf_precoder)]:
            result = transmit_frame(
                source, channel, build(channel.h_known), power, 1.0,
                QamConstellation.square(4), SeedSpec(5),
            )
            ber[name] = result.ber.mean()
        assert ber["mf"] > 10 * ber["zf"]

    def test_undetectable_stream_marked(self):
        # True channel orthogonal to the beam for user 0: zero effective gain.
        h_known = np.eye(2, dtype=complex)
        h_true = h_known.copy()
        h_true[:, 0] = [0.0, 1e-15]
        channel = ChannelSet(2, 2, h_true, h_known, 0.0)
        img = np.full((8, 8), 255, dtype=np.uint8)
        src = split_bit_planes(img)
        source = BitPlaneSource(8, 8, (src.planes[0], src.planes[1]))
        result = transmit_frame(
            source, channel, mf_precoder(h_known), 1.0, 0.0,
            QamConstellation.square(4), SeedSpec(6),
        )
        assert result.ber[0] == 0.5
        assert np.all(result.received.planes[0] == 0)
        assert result.ber[1] == 0.0

    def test_determinism_and_bit_conservation(self):
        channel, source, img = make_frame_setup(err_var=0.05, seed=77)
        args = (
            source, channel, mf_precoder(channel.h_known), 5.0, 1.0,
            QamConstellation.square(4), SeedSpec(7),
        )
        a = transmit_frame(*args)
        b = transmit_frame(*args)
        assert np.array_equal(a.image(), b.image())
        np.testing.assert_array_equal(a.bit_errors, b.bit_errors)
        assert a.image().shape == img.shape
        assert all(p.size == img.size for p in a.received.planes)

    def test_block_splitting_does_not_change_result(self):
        channel, source, _ = make_frame_setup(seed=88)
        base = transmit_frame(
            source, channel, zf_precoder(channel.h_known), 2.0, 1.0,
            QamConstellation.square(4), SeedSpec(8), block_len=1 << 16,
        )
        split = transmit_frame(
            source, channel, zf_precoder(channel.h_known), 2.0, 1.0,
            QamConstellation.square(4), SeedSpec(8), block_len=64,
        )
        # Different block sizes draw noise in different orders, so images may
        # differ, but both are valid deterministic runs of the same seed and
        # the error statistics stay consistent.
        assert abs(base.ber.mean() - split.ber.mean()) < 0.05
        again = transmit_frame(
            source, channel, zf_precoder(channel.h_known), 2.0, 1.0,
            QamConstellation.square(4), SeedSpec(8), block_len=64,
        )
        assert np.array_equal(split.image(), again.image())

    def test_stream_count_mismatch_rejected(self):
        channel, source, _ = make_frame_setup(n_users=8)
        small = BitPlaneSource(source.width, source.height, source.planes[:8])
        other = draw_channel_set(8, 4, 0.0, SeedSpec(1))
        with pytest.raises(ValueError):
            transmit_frame(
                small, other, mf_precoder(other.h_known), 1.0, 1.0,
                QamConstellation.square(4), SeedSpec(0),
            )
