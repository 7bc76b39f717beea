"""Synthetic multimodal recordings with class structure planted by construction.

Each class differs in four places: EEG band amplitudes, the position of a
transient burst inside every 2 s window, heart-rate level / variability
depth, and the rate of skin-conductance responses. ``noise`` scales sensor
noise and per-recording jitter of all class parameters.
"""
import os
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..dsp import Signal
from .dataset import Recording
from .labels import CLASS_NAMES, EPOCH_SECONDS

EEG_FS_RAW = 256.0
BVP_FS = 64.0
EDA_FS = 4.0
TEMP_FS = 4.0
N_EEG = 14
# neural oscillator sources per band (delta, theta, alpha, beta, gamma)
SOURCE_BANDS = ((1.5, 3.5), (4.5, 7.5), (8.5, 12.5), (14.0, 28.0), (31.0, 44.0))
SOURCES_PER_BAND = (2, 2, 3, 2, 2)
BASE_UV = 10.0


@dataclass(frozen=True)
class ClassProfile:
    name: str
    band_gain: tuple  # amplitude multiplier per canonical band
    burst_time: float | None  # seconds into each 2 s window; None = random
    burst_freq: float
    heart_rate: float  # BPM
    hrv_depth: float  # fractional IBI modulation
    scr_per_min: float
    temp_slope: float  # degC / s


DEFAULT_PROFILES = (
    ClassProfile("angry", (1.0, 0.6, 0.5, 1.7, 1.2), 0.25, 20.0, 92.0, 0.02, 14.0, -0.010),
    ClassProfile("disgust", (1.5, 1.0, 0.6, 0.8, 0.5), 1.00, 6.0, 78.0, 0.06, 8.0, 0.000),
    ClassProfile("fear", (0.7, 0.8, 0.4, 1.3, 1.7), 0.25, 35.0, 98.0, 0.03, 18.0, -0.015),
    ClassProfile("happy", (0.6, 0.7, 1.7, 1.0, 0.6), 1.60, 10.0, 84.0, 0.08, 10.0, 0.005),
    ClassProfile("neutral", (0.8, 0.8, 1.2, 0.6, 0.4), None, 10.0, 70.0, 0.10, 2.0, 0.000),
    ClassProfile("sad", (1.7, 1.3, 0.8, 0.5, 0.4), 1.60, 3.0, 66.0, 0.12, 4.0, 0.003),
    ClassProfile("surprise", (0.7, 1.5, 0.9, 1.1, 0.9), 0.60, 25.0, 88.0, 0.04, 12.0, -0.005),
)


@dataclass
class SynthConfig:
    per_class: int = 100
    noise: float = 0.2
    seed: int = 0
    epochs_per_recording: int = 10
    n_subjects: int = 10
    profiles: tuple = field(default=DEFAULT_PROFILES)


def _rng(*key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def _key(name):
    return zlib.crc32(name.encode())


def _subject_traits(seed, subject):
    rng = _rng(seed, 0x5B1EC7, subject)
    personality = rng.integers(1, 5, size=5).astype(float)
    return personality, rng


def _base_mixing(seed):
    rng = _rng(seed, 0x313C)
    mix = rng.normal(0.0, 1.0, size=(N_EEG, N_EEG))
    # last two columns are blink (frontal) and muscle (temporal) artifacts
    frontal = np.array([1.0, 0.8, 0.7, 0.3, 0.1, 0.0, 0.0, 0.0, 0.0, 0.1, 0.3, 0.7, 0.8, 1.0])
    temporal = np.array([0.2, 0.5, 0.2, 0.6, 1.0, 0.4, 0.1, 0.1, 0.4, 1.0, 0.6, 0.2, 0.5, 0.2])
    mix[:, -2] = frontal + 0.1 * rng.normal(size=N_EEG)
    mix[:, -1] = temporal + 0.1 * rng.normal(size=N_EEG)
    return mix


def _band_noise(rng, n, lo, hi, fs=EEG_FS_RAW):
    """Unit-variance Gaussian noise restricted to [lo, hi] Hz by FFT masking."""
    spec = np.fft.rfft(rng.normal(size=n))
    f = np.fft.rfftfreq(n, 1.0 / fs)
    spec[(f < lo) | (f > hi)] = 0.0
    x = np.fft.irfft(spec, n)
    return x / x.std()


def _eeg(profile, rng, duration, noise, mixing):
    t = np.arange(int(round(duration * EEG_FS_RAW))) / EEG_FS_RAW
    sources = []
    for (lo, hi), n_src, gain in zip(SOURCE_BANDS, SOURCES_PER_BAND, profile.band_gain):
        for _ in range(n_src):
            g = gain * np.exp(noise * 0.5 * rng.normal())
            # band-limited noise under a log-normal envelope: super-Gaussian, ICA-friendly
            carrier = _band_noise(rng, t.size, lo, hi)
            envelope = np.exp(0.7 * _band_noise(rng, t.size, 0.05, 0.5))
            s = carrier * envelope
            sources.append(BASE_UV * g * s / s.std())

    burst = np.zeros_like(t)
    for w0 in np.arange(0.0, duration, EPOCH_SECONDS):
        if profile.burst_time is None:
            # no time-locked transient: bursts land anywhere in the window
            centre = w0 + rng.uniform(0.2, EPOCH_SECONDS - 0.2)
        else:
            centre = w0 + profile.burst_time + noise * 0.15 * rng.normal()
        env = np.exp(-0.5 * ((t - centre) / 0.12) ** 2)
        burst += env * np.sin(2 * np.pi * profile.burst_freq * (t - centre))
    sources.append(4.0 * BASE_UV * burst)

    blink = np.zeros_like(t)
    tb = rng.uniform(0.5, 2.5)
    while tb < duration:
        blink += np.exp(-0.5 * ((t - tb) / 0.1) ** 2)
        tb += rng.uniform(2.0, 4.0)
    sources.append(20.0 * BASE_UV * blink)

    muscle = rng.normal(size=t.size)
    muscle = np.convolve(muscle, np.ones(3) / 3, mode="same")
    gate = (np.sin(2 * np.pi * rng.uniform(0.2, 0.4) * t + rng.uniform(0, 6.3)) > 0).astype(float)
    sources.append(5.0 * BASE_UV * gate * muscle)

    eeg = mixing @ np.vstack(sources)
    eeg += 0.5 * BASE_UV * np.sin(2 * np.pi * 50.0 * t)  # mains pickup
    eeg += noise * BASE_UV * rng.normal(size=eeg.shape)
    return Signal(eeg, EEG_FS_RAW)


def _bvp(profile, rng, duration, noise):
    hr = profile.heart_rate + noise * 8.0 * rng.normal()
    mean_ibi = 60.0 / hr
    depth = max(profile.hrv_depth * np.exp(noise * 0.5 * rng.normal()), 0.0)
    phase = rng.uniform(0, 2 * np.pi)
    beats = [rng.uniform(0.1, 0.1 + mean_ibi)]
    while beats[-1] < duration + 2.0:
        tk = beats[-1]
        ibi = mean_ibi * (1.0 + depth * np.sin(2 * np.pi * 0.1 * tk + phase))
        ibi += noise * 0.02 * rng.normal()
        beats.append(tk + max(ibi, 0.35))
    t = np.arange(int(round(duration * BVP_FS))) / BVP_FS
    x = np.zeros_like(t)
    for b in beats:
        x += np.exp(-0.5 * ((t - b) / 0.07) ** 2)
        x += 0.3 * np.exp(-0.5 * ((t - b - 0.28) / 0.06) ** 2)  # dicrotic wave
    x += 0.05 * np.sin(2 * np.pi * 0.05 * t + rng.uniform(0, 6.3))
    x += noise * 0.05 * rng.normal(size=t.size)
    return Signal(x, BVP_FS)


def _eda(profile, rng, duration, noise, level):
    t = np.arange(int(round(duration * EDA_FS))) / EDA_FS
    x = level + 0.002 * t
    rate = profile.scr_per_min * np.exp(noise * 0.3 * rng.normal())
    if rate > 0:
        period = 60.0 / rate
        onset = rng.uniform(0, period)
        while onset < duration:
            s = np.clip(t - onset, 0, None)
            amp = 0.3 * np.exp(noise * 0.3 * rng.normal())
            x += amp * (np.exp(-s / 2.0) - np.exp(-s / 0.5)) * (t >= onset)
            onset += period * (1.0 + noise * 0.3 * rng.normal())
    x += noise * 0.01 * rng.normal(size=t.size)
    return Signal(x, EDA_FS)


def _temp(profile, rng, duration, noise, level):
    t = np.arange(int(round(duration * TEMP_FS))) / TEMP_FS
    slope = profile.temp_slope + noise * 0.005 * rng.normal()
    return Signal(level + slope * t + noise * 0.02 * rng.normal(size=t.size), TEMP_FS)


def synth_generate(cfg):
    """Raw recordings covering ``cfg.per_class`` epochs for every class.

    Randomness is keyed by (seed, profile name, recording index), so
    reordering the profile tuple permutes labels without changing any signal.
    """
    if cfg.per_class <= 0:
        raise ValueError("per_class must be positive")
    mixing0 = _base_mixing(cfg.seed)
    recordings = []
    for label, profile in enumerate(cfg.profiles):
        remaining = cfg.per_class
        r = 0
        while remaining > 0:
            n_ep = min(cfg.epochs_per_recording, remaining)
            duration = n_ep * EPOCH_SECONDS
            key = _key(profile.name)
            subject = (key + r) % cfg.n_subjects
            personality, srng = _subject_traits(cfg.seed, subject)
            mixing = mixing0 + cfg.noise * 0.3 * srng.normal(size=mixing0.shape)
            eda_level = 2.0 + srng.uniform(0, 3.0)
            temp_level = 32.0 + srng.uniform(0, 2.0)
            rng = _rng(cfg.seed, key, r)
            recordings.append(Recording(
                eeg=_eeg(profile, rng, duration, cfg.noise, mixing),
                bvp=_bvp(profile, rng, duration, cfg.noise),
                eda=_eda(profile, rng, duration, cfg.noise, eda_level),
                temp=_temp(profile, rng, duration, cfg.noise, temp_level),
                label=label,
                subject_id=subject,
                personality=personality,
                name=f"{profile.name}_{r:04d}",
            ))
            remaining -= n_ep
            r += 1
    return recordings


def save_recordings(recordings, directory):
    os.makedirs(directory, exist_ok=True)
    for rec in recordings:
        np.savez(
            os.path.join(directory, f"{rec.name}.npz"),
            eeg=rec.eeg.data, fs_eeg=rec.eeg.fs,
            bvp=rec.bvp.data, fs_bvp=rec.bvp.fs,
            eda=rec.eda.data, fs_eda=rec.eda.fs,
            temp=rec.temp.data, fs_temp=rec.temp.fs,
            label=rec.label, subject_id=rec.subject_id, personality=rec.personality,
        )


def load_recording(path):
    with np.load(path) as z:
        return Recording(
            eeg=Signal(z["eeg"], float(z["fs_eeg"])),
            bvp=Signal(z["bvp"], float(z["fs_bvp"])),
            eda=Signal(z["eda"], float(z["fs_eda"])),
            temp=Signal(z["temp"], float(z["fs_temp"])),
            label=int(z["label"]),
            subject_id=int(z["subject_id"]),
            personality=np.asarray(z["personality"], dtype=float),
            name=os.path.splitext(os.path.basename(path))[0],
        )


CLASS_PROFILE_NAMES = tuple(p.name for p in DEFAULT_PROFILES)
assert CLASS_PROFILE_NAMES == CLASS_NAMES
