"""EEG conditioning and per-epoch spectral / statistical features."""
import numpy as np

from .. import dsp
from ..dsp import CANONICAL_BANDS, BANDS, Signal, WelchConfig
from ..errors import DataError, LTCEmotionError, StageError
from .labels import EEG_CHANNELS, EEG_FS, FAA_PAIRS

ICA_REMOVED_COMPONENTS = 2
LINE_FREQ = 50.0


def preprocess_eeg(raw, line_freq=LINE_FREQ, n_remove=ICA_REMOVED_COMPONENTS, target_fs=EEG_FS,
                   ica_seed=0):
    """Run the conditioning chain on a multichannel recording.

    bandpass 1-45 Hz -> notch -> FastICA with the top ``n_remove`` variance
    components dropped -> common average -> resample -> per-channel z-score.
    """
    if raw.duration < 2.0:
        raise DataError(f"need at least 2 s of EEG, got {raw.duration:.3f} s")

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LTCEmotionError as exc:
            raise StageError(name, exc) from exc

    x = stage("bandpass", dsp.fir_bandpass_zero_phase, raw, 1.0, 45.0)
    if line_freq is not None and line_freq < x.fs / 2:
        x = stage("notch", dsp.notch_filter, x, line_freq)
    if n_remove:
        ica = stage("ica", dsp.fastica, x, seed=ica_seed)
        cleaned = stage("ica", dsp.remove_high_variance_components,
                        ica.sources, ica.mixing, n_remove, mean=ica.mean)
        x = x.with_data(cleaned)
    x = stage("car", dsp.common_average_reference, x)
    x = stage("resample", dsp.resample, x, target_fs)
    return stage("zscore", dsp.zscore, x)


def _epoch_signal(eeg, fs):
    return eeg if isinstance(eeg, Signal) else Signal(eeg, fs)


def default_welch(fs, n_samples):
    return WelchConfig(segment_length=int(min(round(fs), n_samples)), overlap=0.5)


def compute_psd_features(eeg, fs=EEG_FS, bands=CANONICAL_BANDS):
    """Mean Welch power per (channel, band) -> (channels, 5)."""
    sig = _epoch_signal(eeg, fs)
    spec = dsp.welch_psd(sig, default_welch(sig.fs, sig.n_samples))
    return np.stack([dsp.band_power(spec, b) for b in bands], axis=-1)


def band_signals(eeg, fs=EEG_FS, bands=CANONICAL_BANDS, order=4):
    """Butterworth zero-phase sub-band signals, shape (bands, channels, T)."""
    sig = _epoch_signal(eeg, fs)
    return np.stack([dsp.butter_sos_filtfilt(sig, b, order).data for b in bands])


def gaussian_differential_entropy(variance, floor=1e-12):
    """``0.5 ln(2 pi e var)``; variance is floored to keep the result finite."""
    var = np.maximum(np.asarray(variance, dtype=float), floor)
    return 0.5 * np.log(2 * np.pi * np.e * var)


def compute_de_features(eeg, fs=EEG_FS, sub_bands=None):
    """Differential entropy of each band-filtered channel -> (channels, 5)."""
    if sub_bands is None:
        sub_bands = band_signals(eeg, fs)
    return gaussian_differential_entropy(sub_bands.var(axis=-1)).T


def _moments(x):
    mean = x.mean(axis=-1)
    centred = x - mean[..., None]
    var = (centred**2).mean(axis=-1)
    std = np.sqrt(var)
    ok = var > 1e-24
    safe = np.where(ok, var, 1.0)
    skew = np.where(ok, (centred**3).mean(axis=-1) / safe**1.5, 0.0)
    kurt = np.where(ok, (centred**4).mean(axis=-1) / safe**2 - 3.0, 0.0)
    return mean, std, skew, kurt


def compute_band_stats(eeg, fs=EEG_FS, sub_bands=None):
    """Per-band (mean, std, skewness, excess kurtosis) -> (channels, 20).

    Columns are band-major: delta mean/std/skew/kurt, then theta, and so on.
    Zero-variance bands get skewness and kurtosis 0.
    """
    if sub_bands is None:
        sub_bands = band_signals(eeg, fs)
    stats = np.stack(_moments(sub_bands), axis=-1)  # (bands, channels, 4)
    return stats.transpose(1, 0, 2).reshape(stats.shape[1], -1)


def alpha_power(eeg, fs=EEG_FS):
    sig = _epoch_signal(eeg, fs)
    spec = dsp.welch_psd(sig, default_welch(sig.fs, sig.n_samples))
    return dsp.band_power(spec, BANDS["alpha"])


def compute_faa(eeg, fs=EEG_FS, channel_map=EEG_CHANNELS, pairs=FAA_PAIRS):
    """ln(P_right) - ln(P_left) of alpha power for each frontal pair."""
    power = alpha_power(eeg, fs)
    index = {name: i for i, name in enumerate(channel_map)}
    out = []
    for right, left in pairs:
        p_r, p_l = power[index[right]], power[index[left]]
        if p_r <= 0 or p_l <= 0:
            raise DataError(f"zero alpha power in pair {right}/{left}")
        out.append(np.log(p_r) - np.log(p_l))
    return np.array(out)


def eeg_features(eeg, fs=EEG_FS):
    """All EEG feature blocks for one preprocessed epoch."""
    sub = band_signals(eeg, fs)
    return {
        "psd": compute_psd_features(eeg, fs),
        "de": compute_de_features(eeg, fs, sub_bands=sub),
        "stats": compute_band_stats(eeg, fs, sub_bands=sub),
        "asym": compute_faa(eeg, fs),
    }
