import warnings

import numpy as np
import pytest
from scipy import special, stats

from chanest.channel import (
    ALTERNATE_PATTERN,
    DEFAULT_PATTERN,
    PDP_NAMES,
    ChannelRealization,
    CyclicPrefixWarning,
    NoiseConfig,
    OfdmConfig,
    PowerDelayProfile,
    add_awgn,
    apply_channel,
    build_frame,
    dump_pdp_table,
    generate_channel,
    load_pdp_table,
    ofdm_demodulate,
    ofdm_modulate,
    pilot_pattern,
    simulate_frame,
    standard_pdp,
    true_frequency_response,
)
from chanest.channel.ofdm import qpsk
from chanest.errors import FramingError, ParameterError

CFG = OfdmConfig()
FLAT = PowerDelayProfile("flat", (0.0,), (0.0,))


def fixed_channel(taps_per_symbol, delays_s, n_symbols=14):
    gains = np.broadcast_to(np.asarray(taps_per_symbol, dtype=complex), (n_symbols, len(delays_s))).copy()
    pdp = PowerDelayProfile("fixed", tuple(delays_s), (0.0,) * len(delays_s))
    return ChannelRealization(gains, pdp, 0.0)


class TestOfdmConfig:
    def test_numerology(self):
        assert CFG.sample_rate == 1.92e6
        assert CFG.bandwidth == pytest.approx(1.08e6)
        assert CFG.symbol_samples == 144
        assert CFG.frame_samples == 14 * 144

    def test_used_bins_skip_dc(self):
        bins = CFG.used_bins
        assert len(bins) == 72 and len(set(bins)) == 72
        assert 0 not in bins
        assert bins[0] == 128 - 36 and bins[35] == 127 and bins[36] == 1 and bins[-1] == 36


class TestPdp:
    def test_epa_table(self):
        epa = standard_pdp("EPA")
        assert epa.n_taps == 7
        assert epa.tap_delays[0] == 0 and epa.tap_delays[-1] == pytest.approx(410e-9)
        assert epa.tap_powers_db[0] == 0 and epa.tap_powers_db[-1] == -20.8

    def test_etu_table(self):
        etu = standard_pdp("etu")
        assert etu.n_taps == 9
        assert max(etu.tap_delays) == pytest.approx(5000e-9)

    @pytest.mark.parametrize("name", PDP_NAMES)
    def test_normalized(self, name):
        assert standard_pdp(name).powers.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("name", PDP_NAMES)
    def test_quantized_delay_within_cp(self, name):
        assert standard_pdp(name).quantized_delays(CFG.sample_rate).max() < CFG.cp_length

    def test_epa_quantizes_to_one_sample(self):
        # 410 ns * 1.92 MHz = 0.79 samples
        assert standard_pdp("EPA").quantized_delays(CFG.sample_rate).max() == 1

    def test_unknown_name_lists_valid(self):
        with pytest.raises(ParameterError, match="EPA, EVA, ETU"):
            standard_pdp("XYZ")

    def test_invalid_delays(self):
        with pytest.raises(ParameterError):
            PowerDelayProfile("bad", (0.0, 0.0), (0.0, 0.0))
        with pytest.raises(ParameterError):
            PowerDelayProfile("bad", (1e-9,), (0.0,))

    def test_table_round_trip(self):
        profiles = [standard_pdp(n) for n in PDP_NAMES]
        loaded = load_pdp_table(dump_pdp_table(profiles))
        for p in profiles:
            q = loaded[p.name]
            np.testing.assert_allclose(q.delays, p.delays, rtol=1e-12)
            assert q.tap_powers_db == p.tap_powers_db


class TestFading:
    def test_zero_doppler_is_static(self):
        r = generate_channel(standard_pdp("EVA"), 0.0, 14, seed=3)
        np.testing.assert_array_equal(r.tap_gains, np.broadcast_to(r.tap_gains[0], r.tap_gains.shape))

    def test_seeded(self):
        a = generate_channel(standard_pdp("EPA"), 50.0, 14, seed=9)
        b = generate_channel(standard_pdp("EPA"), 50.0, 14, seed=9)
        assert a.tap_gains.tobytes() == b.tap_gains.tobytes()

    def test_tap_power(self):
        epa = standard_pdp("EPA")
        g = np.array([generate_channel(epa, 97.0, 1, seed=s).tap_gains[0] for s in range(2000)])
        measured = np.mean(np.abs(g) ** 2, axis=0)
        assert abs(measured[0] / epa.powers[0] - 1) < 0.05

    def test_autocorrelation_follows_bessel(self):
        epa = standard_pdp("EPA")
        g = np.array([generate_channel(epa, 97.0, 14, seed=s).tap_gains[:, 0] for s in range(2000)])
        g /= np.sqrt(epa.powers[0])
        for lag in (1, 5, 13):
            emp = np.mean(g[:, lag:] * np.conj(g[:, :-lag])).real
            ref = special.j0(2 * np.pi * 97.0 * lag * CFG.symbol_duration)
            assert abs(emp - ref) < 0.05

    def test_gaussian_components(self):
        flat = FLAT
        g = np.array([generate_channel(flat, 10.0, 1, seed=s).tap_gains[0, 0] for s in range(10_000)])
        for comp in (g.real, g.imag):
            assert stats.normaltest(comp).pvalue > 0.01

    def test_negative_doppler_rejected(self):
        with pytest.raises(ParameterError):
            generate_channel(FLAT, -1.0, 14)

    def test_colliding_taps_are_summed(self):
        r = fixed_channel([1.0, 2.0j], (0.0, 100e-9))  # both round to sample 0
        np.testing.assert_array_equal(r.quantized_taps(CFG)[:, 0], 1 + 2j)


class TestFrame:
    def test_default_pattern_counts(self):
        x = build_frame(DEFAULT_PATTERN, CFG, seed=1)
        assert x.shape == (72, 14)
        assert np.count_nonzero(x[:, 0]) == 24 and np.count_nonzero(x[:, 12]) == 24
        for s in set(range(14)) - {0, 12}:
            assert np.count_nonzero(x[:, s]) == 72

    def test_alternate_pattern_counts(self):
        x = build_frame(ALTERNATE_PATTERN, CFG, seed=1)
        for s in (0, 4, 8, 12):
            assert np.count_nonzero(x[:, s]) == 12

    @pytest.mark.parametrize("pattern", [DEFAULT_PATTERN, ALTERNATE_PATTERN])
    def test_unit_modulus_and_pilot_positions(self, pattern):
        x = build_frame(pattern, CFG, seed=4)
        nz = x[x != 0]
        np.testing.assert_allclose(np.abs(nz), 1.0, atol=1e-15)
        assert pattern.n_pilots == 48
        pilot_cols = x[:, pattern.symbol_index]
        assert np.array_equal(pilot_cols != 0, pattern.mask(CFG)[:, pattern.symbol_index])

    def test_pattern_positions(self):
        assert DEFAULT_PATTERN.pilot_subcarriers[0][:3] == (1, 4, 7)
        assert DEFAULT_PATTERN.pilot_subcarriers[1][:3] == (2, 5, 8)
        assert [sc[0] for sc in ALTERNATE_PATTERN.pilot_subcarriers] == [1, 2, 4, 6]
        assert max(max(sc) for sc in ALTERNATE_PATTERN.pilot_subcarriers) == 72
        assert pilot_pattern("Alternate") is ALTERNATE_PATTERN
        with pytest.raises(ParameterError):
            pilot_pattern("sparse")


class TestModulation:
    def test_zero(self):
        assert not np.any(ofdm_modulate(np.zeros((72, 14)), CFG))
        assert not np.any(ofdm_demodulate(np.zeros(CFG.frame_samples), CFG))

    def test_single_bin_is_constant_modulus(self):
        x = np.zeros((72, 14), dtype=complex)
        x[10, 3] = 1.0
        sym = ofdm_modulate(x, CFG).reshape(14, 144)[3]
        np.testing.assert_allclose(np.abs(sym), 1 / np.sqrt(128), atol=1e-15)

    def test_loopback(self, rng):
        x = qpsk(rng, (72, 14)).reshape(72, 14)
        np.testing.assert_allclose(ofdm_demodulate(ofdm_modulate(x, CFG), CFG), x, atol=1e-12)

    def test_energy_preserved(self, rng):
        x = qpsk(rng, (72, 14)).reshape(72, 14)
        t = ofdm_modulate(x, CFG).reshape(14, 144)[:, 16:]
        assert np.sum(np.abs(t) ** 2) == pytest.approx(np.sum(np.abs(x) ** 2), abs=1e-12)

    def test_batched(self, rng):
        x = qpsk(rng, (3, 72, 14)).reshape(3, 72, 14)
        s = ofdm_modulate(x, CFG)
        assert s.shape == (3, CFG.frame_samples)
        np.testing.assert_array_equal(s[1], ofdm_modulate(x[1], CFG))

    def test_wrong_length(self):
        with pytest.raises(FramingError):
            ofdm_demodulate(np.zeros(100), CFG)


class TestLink:
    def test_identity_channel(self, rng):
        s = rng.normal(size=CFG.frame_samples) + 0j
        out = apply_channel(s, fixed_channel([1.0], (0.0,)), CFG)
        np.testing.assert_array_equal(out, s)

    def test_one_sample_delay_shift_theorem(self, rng):
        ch = fixed_channel([0.0, 1.0], (0.0, 1 / CFG.sample_rate))
        h = true_frequency_response(ch, CFG)
        np.testing.assert_allclose(h[:, 0], np.exp(-2j * np.pi * CFG.used_bins / 128), atol=1e-14)
        x = qpsk(rng, (72, 14)).reshape(72, 14)
        y = ofdm_demodulate(apply_channel(ofdm_modulate(x, CFG), ch, CFG), CFG)
        np.testing.assert_allclose(y, h * x, atol=1e-9)

    def test_flat_unit_tap_response(self):
        np.testing.assert_allclose(true_frequency_response(fixed_channel([1.0], (0.0,)), CFG), 1.0)

    def test_zero_doppler_columns_equal(self):
        h = true_frequency_response(generate_channel(standard_pdp("ETU"), 0.0, 14, seed=2), CFG)
        np.testing.assert_allclose(h, np.broadcast_to(h[:, :1], h.shape), atol=0)

    @pytest.mark.parametrize("name", PDP_NAMES)
    def test_response_matches_received_over_sent(self, name, rng):
        ch = generate_channel(standard_pdp(name), 97.0, 14, seed=11)
        x = qpsk(rng, (72, 14)).reshape(72, 14)
        y = ofdm_demodulate(apply_channel(ofdm_modulate(x, CFG), ch, CFG), CFG)
        np.testing.assert_allclose(y / x, true_frequency_response(ch, CFG), atol=1e-9)

    def test_epa_no_warning(self):
        ch = generate_channel(standard_pdp("EPA"), 10.0, 14, seed=0)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            apply_channel(np.zeros(CFG.frame_samples), ch, CFG)

    def test_long_delay_warns(self):
        ch = fixed_channel([1.0, 0.5], (0.0, 20 / CFG.sample_rate))
        assert ch.exceeds_cp(CFG)
        with pytest.warns(CyclicPrefixWarning):
            apply_channel(np.zeros(CFG.frame_samples), ch, CFG)


class TestNoise:
    def test_infinite_snr(self, rng):
        s = rng.normal(size=50) + 1j * rng.normal(size=50)
        np.testing.assert_array_equal(add_awgn(s, NoiseConfig(float("inf")), seed=1), s)

    def test_snr_relation(self):
        n = NoiseConfig(13.0)
        assert 10 * np.log10(n.sigma_x_sq / n.sigma_n_sq) == pytest.approx(13.0, abs=1e-12)

    def test_per_subcarrier_power_at_0db(self):
        # 10^4 OFDM symbols = 715 frames of 14
        frames = 715
        rx = add_awgn(np.zeros((frames, CFG.frame_samples)), NoiseConfig(0.0), seed=5)
        noise = ofdm_demodulate(rx, CFG)
        assert abs(np.mean(np.abs(noise) ** 2) - 1.0) < 0.03

    def test_seeded(self):
        a = add_awgn(np.zeros(64), NoiseConfig(5.0), seed=3)
        b = add_awgn(np.zeros(64), NoiseConfig(5.0), seed=3)
        assert a.tobytes() == b.tobytes()


class TestSimulateFrame:
    def test_label_independent_of_snr(self):
        a = simulate_frame(standard_pdp("EPA"), DEFAULT_PATTERN, 0.0, 40.0, seed=77)
        b = simulate_frame(standard_pdp("EPA"), DEFAULT_PATTERN, 20.0, 40.0, seed=77)
        assert a.h.tobytes() == b.h.tobytes() and a.x.tobytes() == b.x.tobytes()
        assert a.y.tobytes() != b.y.tobytes()

    def test_noise_free_frame_obeys_elementwise_model(self):
        f = simulate_frame(standard_pdp("EVA"), DEFAULT_PATTERN, float("inf"), 97.0, seed=8)
        np.testing.assert_allclose(f.y, f.h * f.x, atol=1e-9)
