"""MMSE detection, SINR/SE accounting, PSD estimation and guard search."""

import numpy as np
import pytest

from ddmod import channel as ch
from ddmod import drufmc, ofdm
from ddmod.config import desk_config, table1_config
from ddmod.metrics import (
    GuardSearchError,
    avg_spectral_efficiency,
    guard_count_for_threshold,
    mmse_detect,
    net_sinr,
    normalized_mse,
    oob_level_db,
    psd_estimate,
    qpsk_grid,
    sinr_map,
    sinr_map_from_values,
)
from ddmod.transforms import isfft


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestMmseDetect:
    def test_identity_channel_low_noise_passthrough(self):
        rng = np.random.default_rng(0)
        y = crandn(rng, 6)
        x_hat = mmse_detect(np.eye(6), y, 1e-12)
        assert np.abs(x_hat - y).max() < 1e-9

    def test_identity_channel_unit_noise_halves(self):
        rng = np.random.default_rng(1)
        y = crandn(rng, 6)
        assert np.abs(mmse_detect(np.eye(6), y, 1.0) - y / 2).max() < 1e-12

    def test_matches_dense_inverse_formula(self):
        rng = np.random.default_rng(2)
        c = crandn(rng, 4, 4)
        y = crandn(rng, 4)
        sigma2 = 0.37
        a_inv = np.linalg.inv(c @ c.conj().T + sigma2 * np.eye(4))
        expected = np.array([c[:, j].conj() @ a_inv @ y for j in range(4)])
        assert np.abs(mmse_detect(c, y, sigma2) - expected).max() < 1e-10

    def test_singular_system_reported(self):
        from ddmod.metrics import IllConditionedError

        with pytest.raises(IllConditionedError):
            mmse_detect(np.zeros((3, 3)), np.ones(3), 0.0)


class TestSinrMap:
    def test_scaled_identity(self):
        p_t, sigma2 = 4.0, 0.5
        m = sinr_map(np.sqrt(p_t) * np.eye(8), sigma2)
        assert np.abs(m.values - p_t / sigma2).max() < 1e-9

    def test_two_by_two_hand_oracle(self):
        # C = [[1, 0.1], [0, 1]], sigma^2 = 0.1.  Worked by hand through the
        # interference-inverse identity SINR_j = C_j^H (sum_{l!=j} C_l C_l^H
        # + sigma^2 I)^{-1} C_j: SINR_1 = 1.1/0.111, SINR_2 = 0.01/1.1 + 10.
        c = np.array([[1.0, 0.1], [0.0, 1.0]])
        m = sinr_map(c, 0.1)
        assert m.values[0, 0] == pytest.approx(1.1 / 0.111, rel=1e-9)
        assert m.values[1, 0] == pytest.approx(0.01 / 1.1 + 10.0, rel=1e-9)

    def test_matches_dense_eq_formula(self):
        rng = np.random.default_rng(3)
        c = crandn(rng, 4, 4)
        sigma2 = 0.2
        a_inv = np.linalg.inv(c @ c.conj().T + sigma2 * np.eye(4))
        expected = np.empty(4)
        for j in range(4):
            d = a_inv @ c[:, j]
            num = np.abs(d.conj() @ c[:, j]) ** 2
            inter = sum(np.abs(d.conj() @ c[:, l]) ** 2 for l in range(4) if l != j)
            expected[j] = num / (inter + sigma2 * np.linalg.norm(d) ** 2)
        got = sinr_map(c, sigma2).values[:, 0]
        assert np.abs(got - expected).max() < 1e-10

    def test_monotone_in_noise(self):
        cfg = desk_config(n=2)
        chan = ch.realize(ch.sample_eva_paths(4, 500 / 3.6, cfg.f_c_hz), cfg,
                          with_cp=True, n_symbols=2)
        eff = ofdm.ofdm_full_effective_channel(chan, cfg)
        prev = None
        for sigma2 in [1e-4, 1e-3, 1e-2, 1e-1, 1.0]:
            vals = sinr_map(eff, sigma2, cfg).values
            if prev is not None:
                assert np.all(vals <= prev * (1 + 1e-9))
            prev = vals

    def test_matched_filter_bound(self):
        rng = np.random.default_rng(5)
        c = crandn(rng, 6, 6)
        sigma2 = 0.15
        vals = sinr_map(c, sigma2).values[:, 0]
        bound = np.sum(np.abs(c) ** 2, axis=0) / sigma2
        assert np.all(vals >= 0)
        assert np.all(vals <= bound + 1e-9)


class TestNetSinr:
    def test_uniform_map_any_guard(self):
        m = sinr_map_from_values(np.full((8, 2), 3.0))
        for ng in [0, 1, 2, 3]:
            assert net_sinr(m, ng) == pytest.approx(10 * np.log10(3.0))

    def test_interior_average(self):
        vals = np.arange(16, dtype=float).reshape(8, 2) + 1.0
        m = sinr_map_from_values(vals)
        expected = vals[2:6, :].mean()
        assert net_sinr(m, 2) == pytest.approx(10 * np.log10(expected))
        assert net_sinr(m, 0) == pytest.approx(10 * np.log10(vals.mean()))

    def test_invalid_guard(self):
        m = sinr_map_from_values(np.ones((8, 2)))
        with pytest.raises(ValueError, match="guard"):
            net_sinr(m, 4)


class TestSpectralEfficiency:
    def test_cp_efficiency_from_reference_timing(self):
        # symbol 8.33 us, CP 0.586 us: T / (T + T_CP) = 0.9343
        cfg = table1_config()
        assert cfg.cp_efficiency() == pytest.approx(0.9343, abs=5e-4)
        assert cfg.cp_efficiency() == pytest.approx(
            cfg.symbol_duration_s / (cfg.symbol_duration_s + cfg.cp_duration_s), rel=1e-12
        )

    def test_zero_map_zero_se(self):
        m = sinr_map_from_values(np.zeros((8, 2)))
        assert avg_spectral_efficiency(m, 1.0, 0) == 0.0

    def test_guard_bins_excluded_but_normalized(self):
        vals = np.full((8, 2), 3.0)
        m = sinr_map_from_values(vals)
        full = avg_spectral_efficiency(m, 1.0, 0)
        guarded = avg_spectral_efficiency(m, 1.0, 2)
        assert full == pytest.approx(np.log2(4.0))
        assert guarded == pytest.approx(np.log2(4.0) * 4 / 8)

    def test_consistency_with_map_recomputation(self):
        rng = np.random.default_rng(6)
        vals = rng.random((8, 4)) * 10
        m = sinr_map_from_values(vals, n_guard=1)
        xi = 0.9
        direct = xi * np.log2(1 + vals[1:7, :]).sum() / vals.size
        assert avg_spectral_efficiency(m, xi) == pytest.approx(direct, rel=1e-12)


class TestNormalizedMse:
    def test_exact_estimate(self):
        x = np.array([1 + 1j, 2.0, -3j])
        assert normalized_mse(x, x) == 0.0

    def test_zero_estimate(self):
        x = np.array([1 + 1j, 2.0, -3j])
        assert normalized_mse(np.zeros(3), x) == pytest.approx(1.0)

    def test_quarter_error(self):
        x = np.array([2.0, 0.0, 0.0])
        e = np.array([0.0, 1.0, 0.0])
        assert normalized_mse(x + e, x) == pytest.approx(0.25)

    def test_zero_reference(self):
        with pytest.raises(ValueError, match="zero reference"):
            normalized_mse(np.ones(3), np.zeros(3))


class TestPsd:
    def test_constant_signal_is_dc_line(self):
        cfg = desk_config(k=8, o_s=2, b=1, d=8, n=2, filter_len=1)
        est = psd_estimate(lambda rng: np.ones(512, dtype=complex), cfg, trials=1, seed=0)
        center = np.argmax(est.density)
        assert abs(est.freqs_hz[center]) < est.sample_rate_hz / 256
        away = np.abs(est.freqs_hz - est.freqs_hz[center]) > 3 * (est.freqs_hz[1] - est.freqs_hz[0])
        assert est.density[away].max() < 1e-12 * est.density[center]

    def test_parseval(self):
        cfg = desk_config()
        frames = []

        def frame(rng):
            f = ofdm.ofdm_modulate(isfft(qpsk_grid(rng, cfg.k, cfg.n)), cfg)
            frames.append(f)
            return f

        est = psd_estimate(frame, cfg, trials=50, seed=7)
        df = est.freqs_hz[1] - est.freqs_hz[0]
        integral = est.density.sum() * df
        power = np.mean(np.abs(np.concatenate(frames)) ** 2)
        assert integral == pytest.approx(power, rel=0.01)

    def test_filtered_waveform_decays_faster(self):
        # beyond ~10 subcarriers from the band edge the filtered chain sits
        # below the plain multicarrier spectrum at every frequency (measured;
        # closer to the edge both are dominated by the edge subband mainlobe)
        cfg = table1_config()

        def gen(fam):
            def fn(rng):
                x_ft = isfft(qpsk_grid(rng, cfg.k, cfg.n))
                if fam == "drufmc":
                    return drufmc.ufmc_modulate_ft(x_ft, cfg)
                return ofdm.ofdm_modulate(x_ft, cfg)
            return fn

        eo = psd_estimate(gen("otfs"), cfg, trials=40, seed=5)
        ed = psd_estimate(gen("drufmc"), cfg, trials=40, seed=5)
        sel = np.abs(eo.freqs_hz) > cfg.bandwidth_hz / 2 + 10 * cfg.delta_f_hz
        assert np.all(ed.db_rel_peak()[sel] < eo.db_rel_peak()[sel])
        # the filtered spectrum reaches depths the rectangular pulse never does
        oob = np.abs(eo.freqs_hz) > cfg.bandwidth_hz / 2
        assert ed.db_rel_peak()[oob].min() < -55.0
        assert eo.db_rel_peak()[oob].min() > -50.0


class TestGuardSearch:
    def test_zero_threshold_needs_no_guard(self):
        cfg = desk_config()

        def gen(ng):
            def fn(rng):
                x_ft = isfft(qpsk_grid(rng, cfg.k, cfg.n))
                if ng:
                    x_ft[:ng] = 0
                    x_ft[cfg.k - ng:] = 0
                return ofdm.ofdm_modulate(x_ft, cfg)
            return fn

        assert guard_count_for_threshold(gen, cfg, delta_oob_db=0.0, trials=3, seed=1) == 0

    def test_oob_level_monotone_in_guard_count(self):
        cfg = desk_config()

        def gen(ng):
            def fn(rng):
                x_ft = isfft(qpsk_grid(rng, cfg.k, cfg.n))
                if ng:
                    x_ft[:ng] = 0
                    x_ft[cfg.k - ng:] = 0
                return ofdm.ofdm_modulate(x_ft, cfg)
            return fn

        levels = [
            oob_level_db(psd_estimate(gen(ng), cfg, trials=30, seed=3), cfg.bandwidth_hz)
            for ng in [0, 2, 4, 8]
        ]
        assert all(b <= a + 0.1 for a, b in zip(levels, levels[1:]))

    def test_unachievable_threshold_raises(self):
        cfg = desk_config(k=8, o_s=2, b=1, d=8, n=2, filter_len=1)

        def gen(ng):
            return lambda rng: crandn(rng, 256)   # white noise fills the band

        with pytest.raises(GuardSearchError, match="not achievable"):
            guard_count_for_threshold(gen, cfg, delta_oob_db=-40.0, trials=2, seed=0)
