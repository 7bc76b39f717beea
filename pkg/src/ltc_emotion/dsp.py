"""Signal-processing primitives: filtering, resampling, spectra, peaks, ICA.

Every function is pure. Multichannel data is laid out channels x time.
"""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal as sps
from scipy.ndimage import uniform_filter1d

from .errors import (
    ConvergenceError,
    DataError,
    InvalidBandError,
    InvalidFrequencyError,
    NormalizationError,
    RankError,
    SignalTooShortError,
)


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled series. ``data`` is (T,) or (channels, T)."""

    data: np.ndarray
    fs: float

    def __post_init__(self):
        if not self.fs > 0:
            raise DataError(f"sampling rate must be positive, got {self.fs}")
        data = np.asarray(self.data, dtype=float)
        if data.ndim not in (1, 2):
            raise DataError(f"signal must be 1-D or 2-D, got shape {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def channels(self):
        return 1 if self.data.ndim == 1 else self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[-1]

    @property
    def duration(self):
        return self.n_samples / self.fs

    def with_data(self, data, fs=None):
        return Signal(data, self.fs if fs is None else fs)


@dataclass(frozen=True)
class Band:
    name: str
    lo: float
    hi: float

    def check(self, fs):
        if not (0 < self.lo < self.hi <= fs / 2):
            raise InvalidBandError(
                f"band {self.name} ({self.lo}-{self.hi} Hz) invalid for fs={fs}"
            )


CANONICAL_BANDS = (
    Band("delta", 1.0, 4.0),
    Band("theta", 4.0, 8.0),
    Band("alpha", 8.0, 13.0),
    Band("beta", 13.0, 30.0),
    Band("gamma", 30.0, 45.0),
)
BANDS = {b.name: b for b in CANONICAL_BANDS}


@dataclass(frozen=True)
class WelchConfig:
    """Segment length ``L`` (samples), fractional overlap, taper name.

    ``nfft`` > L zero-pads each segment for a finer frequency grid.
    """

    segment_length: int
    overlap: float = 0.5
    window: str = "hann"
    nfft: int | None = None
    detrend: bool = True

    @property
    def step(self):
        return self.segment_length - int(round(self.overlap * self.segment_length))

    def n_segments(self, n_samples):
        if self.segment_length > n_samples:
            return 0
        return 1 + (n_samples - self.segment_length) // self.step

    def validate(self, n_samples):
        if self.segment_length < 1:
            raise DataError("segment length must be >= 1")
        if not 0 <= self.overlap < 1:
            raise DataError(f"overlap must lie in [0, 1), got {self.overlap}")
        if self.segment_length > n_samples:
            raise DataError(
                f"segment length {self.segment_length} exceeds signal length {n_samples}"
            )
        if self.nfft is not None and self.nfft < self.segment_length:
            raise DataError("nfft must be >= segment length")


@dataclass(frozen=True)
class Spectrum:
    """One-sided power spectral density; ``power`` is (..., n_freqs) in units^2/Hz."""

    freqs: np.ndarray
    power: np.ndarray

    @property
    def df(self):
        return float(self.freqs[1] - self.freqs[0]) if len(self.freqs) > 1 else 0.0

    def total_power(self):
        return np.sum(self.power, axis=-1) * self.df


def _odd(n):
    n = int(np.ceil(n))
    return n + 1 if n % 2 == 0 else n


def fir_bandpass_taps(fs, lo, hi):
    """Hamming-windowed sinc bandpass; length ~3.3 fs / transition width."""
    transition = min(lo, 2.0)
    numtaps = _odd(3.3 * fs / transition)
    return sps.firwin(numtaps, [lo, hi], pass_zero=False, window="hamming", fs=fs)


def _forward_backward_fir(taps, x):
    n = x.shape[-1]
    if n <= len(taps) - 1:
        raise SignalTooShortError(
            f"signal of {n} samples is not longer than filter order {len(taps) - 1}"
        )
    padlen = min(3 * len(taps), n - 1)
    return sps.filtfilt(taps, [1.0], x, axis=-1, padlen=padlen)


def fir_bandpass_zero_phase(sig, lo, hi):
    """Zero-phase FIR bandpass via forward-backward application."""
    if not (0 < lo < hi < sig.fs / 2):
        raise InvalidBandError(f"bandpass {lo}-{hi} Hz outside (0, {sig.fs / 2}) Hz")
    taps = fir_bandpass_taps(sig.fs, lo, hi)
    return sig.with_data(_forward_backward_fir(taps, sig.data))


def notch_filter(sig, f0, q=30.0):
    """Second-order IIR notch at ``f0``, applied forward-backward."""
    if not (0 < f0 < sig.fs / 2):
        raise InvalidFrequencyError(f"notch {f0} Hz must lie below Nyquist {sig.fs / 2} Hz")
    b, a = sps.iirnotch(f0, q, fs=sig.fs)
    sos = sps.tf2sos(b, a)
    return sig.with_data(_sosfiltfilt(sos, sig.data))


def _sosfiltfilt(sos, x):
    # scipy's default pad length for sosfiltfilt
    ntaps = 2 * len(sos) + 1
    ntaps -= min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum())
    padlen = 3 * ntaps
    if x.shape[-1] <= padlen:
        raise SignalTooShortError(
            f"signal of {x.shape[-1]} samples too short for padding of {padlen}"
        )
    return sps.sosfiltfilt(sos, x, axis=-1)


def butter_sos(band, fs, order=4):
    band.check(fs)
    return sps.butter(order, [band.lo, band.hi], btype="bandpass", output="sos", fs=fs)


def butter_sos_filtfilt(sig, band, order=4):
    """Butterworth bandpass in second-order sections, run forward and backward.

    The squared magnitude response doubles the stopband attenuation (in dB)
    and the phase cancels exactly.
    """
    if order < 1:
        raise DataError("filter order must be >= 1")
    sos = butter_sos(band, sig.fs, order)
    return sig.with_data(_sosfiltfilt(sos, sig.data))


def resample(sig, new_fs):
    """Polyphase rational resampling with an anti-alias cutoff at 0.9 x new Nyquist."""
    if not new_fs > 0:
        raise DataError(f"new sampling rate must be positive, got {new_fs}")
    if new_fs == sig.fs:
        return sig.with_data(sig.data.copy())
    ratio = Fraction(new_fs / sig.fs).limit_denominator(1000)
    up, down = ratio.numerator, ratio.denominator
    n_out = int(round(sig.n_samples * new_fs / sig.fs))
    max_rate = max(up, down)
    half_len = 10 * max_rate
    taps = sps.firwin(2 * half_len + 1, 0.9 / max_rate, window=("kaiser", 5.0))
    y = sps.resample_poly(sig.data, up, down, axis=-1, window=taps)
    if y.shape[-1] >= n_out:
        y = y[..., :n_out]
    else:
        pad = [(0, 0)] * (y.ndim - 1) + [(0, n_out - y.shape[-1])]
        y = np.pad(y, pad, mode="edge")
    return Signal(y, new_fs)


def zscore(sig):
    x = np.atleast_2d(sig.data)
    mean = x.mean(axis=-1, keepdims=True)
    std = x.std(axis=-1, keepdims=True)
    bad = np.flatnonzero(std[:, 0] <= 1e-12 * np.maximum(1.0, np.abs(mean[:, 0])))
    if bad.size:
        raise NormalizationError(f"channel {bad[0]} has zero variance", channel=int(bad[0]))
    z = (x - mean) / std
    return sig.with_data(z.reshape(sig.data.shape))


def common_average_reference(sig):
    if sig.channels < 2:
        raise DataError("common average reference needs at least 2 channels")
    x = sig.data
    return sig.with_data(x - x.mean(axis=0, keepdims=True))


def welch_psd(sig, cfg=None):
    """Averaged modified periodograms, one-sided, density scaling.

    Each segment periodogram is ``|sum x[n] w[n] e^{-j2pi kn/N}|^2 / (L U)``
    with ``U = mean(w^2)``; divided by ``fs`` to give power per Hz. The
    total integrated power then approximates the signal variance.
    """
    if cfg is None:
        cfg = WelchConfig(segment_length=int(min(round(sig.fs), sig.n_samples)))
    L = cfg.segment_length
    cfg.validate(sig.n_samples)
    nfft = cfg.nfft or L
    window = sps.get_window(cfg.window, L)
    U = np.mean(window**2)
    x = sig.data
    starts = np.arange(cfg.n_segments(sig.n_samples)) * cfg.step
    idx = starts[:, None] + np.arange(L)[None, :]
    segments = x[..., idx]  # (..., K, L)
    if cfg.detrend:
        segments = segments - segments.mean(axis=-1, keepdims=True)
    spectra = np.fft.rfft(segments * window, n=nfft, axis=-1)
    periodograms = np.abs(spectra) ** 2 / (L * U * sig.fs)
    power = periodograms.mean(axis=-2)
    # fold negative frequencies into the one-sided estimate
    if nfft % 2 == 0:
        power[..., 1:-1] *= 2
    else:
        power[..., 1:] *= 2
    freqs = np.fft.rfftfreq(nfft, d=1.0 / sig.fs)
    return Spectrum(freqs, power)


def band_mask(freqs, band):
    return (freqs >= band.lo) & (freqs < band.hi)


def band_power(spectrum, band, reduce="mean"):
    """Mean (or integrated, ``reduce='sum'``) power over bins in ``[lo, hi)``."""
    mask = band_mask(spectrum.freqs, band)
    if not mask.any():
        raise DataError(
            f"no frequency bins in band {band.name} ({band.lo}-{band.hi} Hz)"
        )
    sel = spectrum.power[..., mask]
    if reduce == "mean":
        return sel.mean(axis=-1)
    if reduce == "sum":
        return sel.sum(axis=-1) * spectrum.df
    raise ValueError(f"unknown reduction {reduce!r}")


def detect_peaks(sig, min_distance, prominence_factor=0.1):
    """Local maxima at least ``min_distance`` seconds apart.

    Prominence must reach ``prominence_factor`` times the signal's standard
    deviation. Within a distance window the taller peak wins.
    """
    x = np.asarray(sig.data, dtype=float)
    if x.ndim != 1:
        raise DataError("peak detection expects a univariate signal")
    distance = int(np.ceil(min_distance * sig.fs - 1e-9))
    if distance < 1:
        raise DataError("min_distance * fs must be >= 1")
    std = x.std()
    if x.size < 3 or std <= 1e-12 * (1.0 + np.abs(x).max()):
        return np.array([], dtype=int)
    peaks, _ = sps.find_peaks(x, distance=distance, prominence=prominence_factor * std)
    return peaks.astype(int)


def linear_slope(sig):
    """Least-squares fit ``x(t) = b0 + b1 t`` with t in seconds from the first sample."""
    x = np.asarray(sig.data, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DataError("linear fit needs a univariate signal with >= 2 samples")
    t = np.arange(x.size) / sig.fs
    tc = t - t.mean()
    slope = np.dot(tc, x - x.mean()) / np.dot(tc, tc)
    intercept = x.mean() - slope * t.mean()
    return float(intercept), float(slope)


def moving_average(sig, window):
    """Centred boxcar of ``window`` seconds with reflection padding at the edges."""
    size = int(round(window * sig.fs))
    if size < 1:
        raise DataError("window * fs must be >= 1")
    return sig.with_data(uniform_filter1d(sig.data, size=size, axis=-1, mode="reflect"))


@dataclass
class ICAResult:
    """Sources are (n_components, T); ``mixing`` is (channels, n_components).

    Mixing columns are scaled to unit norm so each source carries the
    amplitude of its sensor-space contribution.
    """

    sources: np.ndarray
    mixing: np.ndarray
    unmixing: np.ndarray
    mean: np.ndarray
    n_iter: int


def _sym_decorrelate(W):
    s, u = np.linalg.eigh(W @ W.T)
    s = np.clip(s, np.finfo(float).tiny, None)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ W


def fastica(sig, n_components=None, max_iter=200, tol=1e-4, seed=0):
    """Symmetric FastICA with the log-cosh contrast.

    Raises
    ------
    RankError
        If the data covariance has fewer than ``n_components`` usable dimensions.
    ConvergenceError
        If the unmixing matrix has not settled after ``max_iter`` iterations.
    """
    x = np.atleast_2d(np.asarray(sig.data, dtype=float))
    n_ch, n_t = x.shape
    if n_components is None:
        n_components = n_ch
    if not 2 <= n_components <= n_ch:
        raise DataError(f"need 2 <= n_components <= channels ({n_ch}), got {n_components}")
    mean = x.mean(axis=1, keepdims=True)
    xc = x - mean
    cov = xc @ xc.T / n_t
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:n_components]
    evals, evecs = evals[order], evecs[:, order]
    if evals[-1] <= 1e-10 * max(evals[0], 1e-300):
        raise RankError(
            f"data rank below {n_components} components (eigenvalue {evals[-1]:.3g})"
        )
    whitening = (evecs / np.sqrt(evals)).T  # (k, C)
    z = whitening @ xc

    rng = np.random.Generator(np.random.Philox(seed))
    W = _sym_decorrelate(rng.standard_normal((n_components, n_components)))
    for it in range(1, max_iter + 1):
        wz = W @ z
        g = np.tanh(wz)
        g_prime = 1.0 - g**2
        W_new = (g @ z.T) / n_t - g_prime.mean(axis=1)[:, None] * W
        W_new = _sym_decorrelate(W_new)
        lim = np.max(np.abs(np.abs(np.einsum("ij,ij->i", W_new, W)) - 1.0))
        W = W_new
        if lim < tol:
            break
    else:
        raise ConvergenceError(f"FastICA did not converge in {max_iter} iterations", max_iter)

    unmixing = W @ whitening
    mixing = np.linalg.pinv(unmixing)
    norms = np.linalg.norm(mixing, axis=0)
    mixing = mixing / norms
    unmixing = unmixing * norms[:, None]
    sources = unmixing @ xc
    return ICAResult(sources, mixing, unmixing, mean[:, 0], it)


def component_variance(sources):
    """Unbiased per-component variance (normalised by T - 1)."""
    s = np.asarray(sources, dtype=float)
    return ((s - s.mean(axis=1, keepdims=True)) ** 2).sum(axis=1) / (s.shape[1] - 1)


def remove_high_variance_components(sources, mixing, k, mean=None):
    """Back-project all components except the ``k`` with the largest variance."""
    sources = np.asarray(sources, dtype=float)
    n_comp = sources.shape[0]
    if not 0 <= k < n_comp:
        raise DataError(f"cannot remove {k} of {n_comp} components")
    var = component_variance(sources)
    drop = np.argsort(var, kind="stable")[::-1][:k]
    keep = np.setdiff1d(np.arange(n_comp), drop)
    out = mixing[:, keep] @ sources[keep]
    if mean is not None:
        out = out + np.asarray(mean)[:, None]
    return out
