"""Autonomic features from BVP, EDA, heart rate and skin temperature."""
import numpy as np
from scipy import signal as sps

from .. import dsp
from ..dsp import Band, Signal, WelchConfig
from ..errors import DataError, InsufficientBeatsError

BEAT_MIN_DISTANCE = 0.5  # s, caps the rate at 120 BPM
PROMINENCE_FACTOR = 0.1
IBI_FS = 4.0
LF_BAND = Band("lf", 0.04, 0.15)
HF_BAND = Band("hf", 0.15, 0.4)
TONIC_WINDOW = 4.0  # s
SCR_MIN_DISTANCE = 1.0  # s
HF_FLOOR = 1e-18  # s^2, below this the HF band is treated as empty


def detect_beats(bvp):
    return dsp.detect_peaks(bvp, BEAT_MIN_DISTANCE, PROMINENCE_FACTOR)


def rmssd(ibi):
    d = np.diff(np.asarray(ibi, dtype=float))
    return float(np.sqrt(np.mean(d**2))) if d.size else 0.0


def ibi_band_powers(ibi, beat_times, fs=IBI_FS):
    """Integrated LF and HF power of the IBI series interpolated onto a uniform grid."""
    ibi = np.asarray(ibi, dtype=float)
    if ibi.size < 2:
        return 0.0, 0.0
    grid = np.arange(beat_times[0], beat_times[-1] + 1e-9, 1.0 / fs)
    if grid.size < 2:
        return 0.0, 0.0
    series = np.interp(grid, beat_times, ibi)
    seg = min(grid.size, 256)
    # zero-padding keeps LF/HF bins populated for short windows
    cfg = WelchConfig(segment_length=seg, overlap=0.5, nfft=max(256, seg))
    spec = dsp.welch_psd(Signal(series, fs), cfg)
    return (float(dsp.band_power(spec, LF_BAND, reduce="sum")),
            float(dsp.band_power(spec, HF_BAND, reduce="sum")))


def hrv_from_ibi(ibi, beat_times):
    ibi = np.asarray(ibi, dtype=float)
    lf, hf = ibi_band_powers(ibi, beat_times)
    return np.array([
        ibi.mean(),
        ibi.std(),
        rmssd(ibi),
        lf,
        hf,
        lf / hf if hf > HF_FLOOR else 0.0,
        ibi.size + 1,
    ])


def compute_hrv_features(bvp):
    """[mean IBI, SDNN, RMSSD, LF, HF, LF/HF, beat count] from a BVP window."""
    peaks = detect_beats(bvp)
    if peaks.size < 2:
        raise InsufficientBeatsError(f"found {peaks.size} beats, need at least 2")
    times = peaks / bvp.fs
    return hrv_from_ibi(np.diff(times), times[1:])


def derive_heart_rate(bvp, fs_out=IBI_FS):
    """Instantaneous rate (BPM) from BVP beats on a uniform grid, edges held."""
    peaks = detect_beats(bvp)
    n_out = int(round(bvp.duration * fs_out))
    if peaks.size < 2:
        return Signal(np.full(n_out, np.nan), fs_out)
    times = peaks / bvp.fs
    rate = 60.0 / np.diff(times)
    grid = np.arange(n_out) / fs_out
    return Signal(np.interp(grid, times[1:], rate), fs_out)


def decompose_eda(eda, window=TONIC_WINDOW):
    """Split into (tonic, phasic); phasic is the exact residual."""
    tonic = dsp.moving_average(eda, window).data
    return tonic, eda.data - tonic


def compute_eda_features(eda):
    tonic, phasic = decompose_eda(eda)
    _, tonic_slope = dsp.linear_slope(Signal(tonic, eda.fs))
    peaks = dsp.detect_peaks(Signal(phasic, eda.fs), SCR_MIN_DISTANCE, PROMINENCE_FACTOR)
    if peaks.size:
        amp = sps.peak_prominences(phasic, peaks)[0].mean()
    else:
        amp = 0.0
    return np.array([
        tonic.mean(), tonic.std(), tonic_slope,
        phasic.mean(), phasic.std(), phasic.max(),
        float(peaks.size), amp,
    ])


def compute_hr_features(hr):
    x = np.asarray(hr.data, dtype=float)
    if x.size < 2:
        raise DataError("heart-rate window needs >= 2 samples")
    d = np.diff(x)
    return np.array([x.mean(), x.std(), x.min(), x.max(), x.max() - x.min(), d.mean(), d.std()])


def compute_temp_features(temp):
    x = np.asarray(temp.data, dtype=float)
    if x.size < 2:
        raise DataError("temperature window needs >= 2 samples")
    b0, b1 = dsp.linear_slope(temp)
    return np.array([x.mean(), x.std(), x.min(), x.max(), b1, b0])
