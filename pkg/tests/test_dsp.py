import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal as sps

from ltc_emotion import dsp
from ltc_emotion.dsp import Band, Signal, WelchConfig
from ltc_emotion.errors import (
    ConvergenceError,
    DataError,
    InvalidBandError,
    NormalizationError,
    RankError,
    SignalTooShortError,
)

FS = 256.0


def tone(freq, seconds=4.0, fs=FS, amp=1.0, phase=0.0):
    t = np.arange(int(seconds * fs)) / fs
    return Signal(amp * np.sin(2 * np.pi * freq * t + phase), fs)


class TestWelch:
    def test_matches_scipy(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(3, 1024))
        cfg = WelchConfig(segment_length=256)
        ours = dsp.welch_psd(Signal(x, FS), cfg)
        f, ref = sps.welch(x, fs=FS, window="hann", nperseg=256, noverlap=128, detrend="constant")
        np.testing.assert_allclose(ours.freqs, f)
        np.testing.assert_allclose(ours.power, ref, rtol=1e-10, atol=1e-18)

    def test_matches_scipy_with_padding(self):
        x = np.random.default_rng(1).normal(size=300)
        cfg = WelchConfig(segment_length=100, nfft=256)
        ours = dsp.welch_psd(Signal(x, 4.0), cfg)
        _, ref = sps.welch(x, fs=4.0, nperseg=100, noverlap=50, nfft=256)
        np.testing.assert_allclose(ours.power, ref, rtol=1e-10, atol=1e-18)

    def test_tone_peak_bin(self):
        spec = dsp.welch_psd(tone(10.0))
        assert spec.freqs[np.argmax(spec.power)] == pytest.approx(10.0)

    def test_parseval(self):
        x = np.random.default_rng(2).normal(size=4096)
        spec = dsp.welch_psd(Signal(x, FS))
        assert spec.total_power() == pytest.approx(x.var(), rel=0.05)

    def test_segment_longer_than_signal(self):
        with pytest.raises(DataError):
            dsp.welch_psd(Signal(np.zeros(100), FS), WelchConfig(segment_length=256))


class TestBands:
    def test_band_validation(self):
        with pytest.raises(InvalidBandError):
            Band("bad", 10.0, 5.0).check(FS)
        with pytest.raises(DataError):
            Band("nyq", 10.0, 200.0).check(FS)

    def test_band_power_isolates_tone(self):
        spec = dsp.welch_psd(tone(10.0))
        alpha = dsp.band_power(spec, dsp.BANDS["alpha"])
        beta = dsp.band_power(spec, dsp.BANDS["beta"])
        assert alpha > 1000 * beta

    def test_integrated_power_of_tone(self):
        spec = dsp.welch_psd(tone(10.0, amp=2.0))
        assert dsp.band_power(spec, Band("w", 5, 15), reduce="sum") == pytest.approx(2.0, rel=0.02)

    def test_empty_band(self):
        spec = dsp.welch_psd(tone(10.0))
        with pytest.raises(DataError):
            dsp.band_power(spec, Band("narrow", 10.1, 10.2))


class TestFilters:
    def test_fir_zero_lag_in_band(self):
        sig = tone(10.0, seconds=8.0, phase=0.3)
        out = dsp.fir_bandpass_zero_phase(sig, 1.0, 45.0)
        mid = slice(900, -900)
        lag = np.argmax(sps.correlate(out.data[mid], sig.data[mid], mode="full")) - (
            sig.data[mid].size - 1
        )
        assert lag == 0
        np.testing.assert_allclose(out.data[mid], sig.data[mid], atol=0.01)

    def test_fir_rejects_out_of_band(self):
        out = dsp.fir_bandpass_zero_phase(tone(60.0, seconds=8.0), 1.0, 45.0)
        assert np.abs(out.data[900:-900]).max() < 1e-3

    def test_fir_too_short(self):
        with pytest.raises(SignalTooShortError):
            dsp.fir_bandpass_zero_phase(Signal(np.zeros(100), FS), 1.0, 45.0)

    def test_notch_removes_mains(self):
        sig = tone(50.0, seconds=8.0)
        out = dsp.notch_filter(sig, 50.0)
        assert np.abs(out.data[256:-256]).max() < 0.05
        keep = dsp.notch_filter(tone(10.0, seconds=8.0), 50.0)
        np.testing.assert_allclose(keep.data[256:-256], tone(10.0, seconds=8.0).data[256:-256],
                                   atol=0.01)

    def test_butter_zero_phase_matches_scipy(self):
        x = np.random.default_rng(3).normal(size=2048)
        band = dsp.BANDS["alpha"]
        ours = dsp.butter_sos_filtfilt(Signal(x, 128.0), band)
        ref = sps.sosfiltfilt(sps.butter(4, [band.lo, band.hi], btype="band", fs=128.0,
                                         output="sos"), x)
        np.testing.assert_allclose(ours.data, ref, atol=1e-12)


class TestResample:
    def test_length_and_identity(self):
        sig = tone(5.0, seconds=2.0)
        out = dsp.resample(sig, 128.0)
        assert out.n_samples == 256 and out.fs == 128.0
        same = dsp.resample(sig, FS)
        np.testing.assert_array_equal(same.data, sig.data)

    def test_preserves_low_frequency(self):
        out = dsp.resample(tone(5.0, seconds=4.0), 128.0)
        ref = tone(5.0, seconds=4.0, fs=128.0)
        np.testing.assert_allclose(out.data[32:-32], ref.data[32:-32], atol=0.01)

    @given(st.sampled_from([64.0, 100.0, 128.0, 200.0]), st.integers(200, 900))
    @settings(max_examples=20, deadline=None)
    def test_output_length(self, new_fs, n):
        sig = Signal(np.random.default_rng(n).normal(size=n), 256.0)
        assert dsp.resample(sig, new_fs).n_samples == int(round(n * new_fs / 256.0))


class TestNormalise:
    def test_zscore(self):
        x = np.random.default_rng(4).normal(3.0, 2.0, size=(4, 500))
        z = dsp.zscore(Signal(x, FS)).data
        np.testing.assert_allclose(z.mean(axis=1), 0, atol=1e-12)
        np.testing.assert_allclose(z.std(axis=1), 1, atol=1e-12)

    def test_zscore_constant_channel(self):
        x = np.ones((3, 100))
        x[0] = np.arange(100)
        with pytest.raises(NormalizationError) as err:
            dsp.zscore(Signal(x, FS))
        assert err.value.channel == 1

    def test_car(self):
        x = np.random.default_rng(5).normal(size=(14, 300))
        out = dsp.common_average_reference(Signal(x, FS)).data
        np.testing.assert_allclose(out.sum(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(out, x - x.mean(axis=0), atol=1e-12)


class TestPeaksAndSlope:
    def test_peaks_of_pulse_train(self):
        t = np.arange(0, 10, 1 / 64.0)
        x = sum(np.exp(-0.5 * ((t - c) / 0.05) ** 2) for c in np.arange(0.5, 10, 0.8))
        peaks = dsp.detect_peaks(Signal(x, 64.0), 0.5)
        np.testing.assert_allclose(peaks / 64.0, np.arange(0.5, 10, 0.8), atol=1 / 64.0)

    def test_flat_signal_has_no_peaks(self):
        assert dsp.detect_peaks(Signal(np.full(100, 3.0), 64.0), 0.5).size == 0

    def test_linear_slope_exact(self):
        t = np.arange(40) / 4.0
        b0, b1 = dsp.linear_slope(Signal(32.0 + 0.5 * t, 4.0))
        assert b1 == pytest.approx(0.5, abs=1e-12) and b0 == pytest.approx(32.0, abs=1e-12)

    def test_moving_average_preserves_constant(self):
        out = dsp.moving_average(Signal(np.full(50, 2.5), 4.0), 4.0)
        np.testing.assert_allclose(out.data, 2.5)


def _super_gaussian_sources(n=4000, seed=0):
    rng = np.random.default_rng(seed)
    s1 = np.sign(np.sin(np.linspace(0, 40 * np.pi, n)))  # square wave
    s2 = rng.laplace(size=n)
    return np.vstack([s1, s2])


class TestICA:
    def test_recovers_sources(self):
        s = _super_gaussian_sources()
        a = np.array([[1.0, 0.6], [0.4, 1.0]])
        res = dsp.fastica(Signal(a @ s, FS), seed=1)
        corr = np.abs(np.corrcoef(np.vstack([res.sources, s]))[:2, 2:])
        assert np.all(corr.max(axis=1) > 0.99)

    def test_reconstruction_is_exact(self):
        s = _super_gaussian_sources()
        x = np.array([[1.0, 0.6], [0.4, 1.0]]) @ s + 5.0
        res = dsp.fastica(Signal(x, FS))
        back = res.mixing @ res.sources + res.mean[:, None]
        np.testing.assert_allclose(back, x, atol=1e-8)

    def test_mixing_columns_unit_norm(self):
        s = _super_gaussian_sources()
        res = dsp.fastica(Signal(np.array([[2.0, 0.5], [0.3, 3.0]]) @ s, FS))
        np.testing.assert_allclose(np.linalg.norm(res.mixing, axis=0), 1.0)

    def test_rank_deficient(self):
        row = np.random.default_rng(0).normal(size=1000)
        with pytest.raises(RankError):
            dsp.fastica(Signal(np.vstack([row, 2 * row]), FS))

    def test_non_convergence(self):
        x = np.random.default_rng(0).normal(size=(3, 2000))  # Gaussian: no preferred rotation
        with pytest.raises(ConvergenceError) as err:
            dsp.fastica(Signal(x, FS), max_iter=3, tol=1e-12)
        assert err.value.iterations == 3

    def test_remove_artifact_component(self):
        # a minute of data with ~20 blinks; shorter records leave the few pulses
        # correlated with the sources by chance, which ICA cannot undo
        rng = np.random.default_rng(7)
        n = 60 * 256
        t = np.arange(n) / FS
        clean = np.vstack([np.sin(2 * np.pi * 3 * t), rng.laplace(size=n)])
        artifact = np.zeros(n)
        for c in rng.uniform(0.5, t[-1] - 0.5, 20):
            artifact += np.exp(-0.5 * ((t - c) / 0.1) ** 2)
        artifact *= 10.0 * clean.std() / artifact.std()  # 100x the variance
        mix = np.array([[1.0, 0.3, 0.8], [0.2, 1.0, 0.5], [0.6, 0.5, 0.3]])
        observed = mix @ np.vstack([clean, artifact])
        res = dsp.fastica(Signal(observed, FS), seed=0)
        restored = dsp.remove_high_variance_components(res.sources, res.mixing, 1, res.mean)
        target = mix[:, :2] @ clean
        for ch in range(3):
            assert np.corrcoef(restored[ch], target[ch])[0, 1] > 0.95

    def test_remove_bounds(self):
        with pytest.raises(DataError):
            dsp.remove_high_variance_components(np.zeros((2, 10)), np.eye(2), 2)
