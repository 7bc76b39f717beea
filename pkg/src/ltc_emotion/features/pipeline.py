"""Recording -> epochs -> feature bundle -> stratified dataset."""
import logging
from collections import Counter

import numpy as np

from ..dsp import Signal
from ..errors import InsufficientBeatsError, LTCEmotionError, StageError
from .dataset import Recording, assemble_dataset, epoch_recording
from .eeg import eeg_features, preprocess_eeg
from .labels import BLOCK_NAMES
from .peripheral import (
    compute_eda_features,
    compute_hr_features,
    compute_hrv_features,
    compute_temp_features,
    derive_heart_rate,
)

log = logging.getLogger(__name__)


def prepare_recording(rec, ica_seed=0):
    """Condition EEG and derive the heart-rate stream; other streams pass through.

    EEG gaps (NaN) are zero-filled for filtering and re-marked afterwards so
    the affected epochs fail the coverage check.
    """
    raw = rec.eeg.data
    gap = ~np.isfinite(raw).all(axis=0)
    eeg = preprocess_eeg(Signal(np.where(np.isfinite(raw), raw, 0.0), rec.eeg.fs),
                         ica_seed=ica_seed)
    if gap.any():
        ratio = eeg.fs / rec.eeg.fs
        idx = np.unique(np.floor(np.flatnonzero(gap) * ratio).astype(int))
        data = eeg.data.copy()
        data[:, idx[idx < data.shape[1]]] = np.nan
        eeg = eeg.with_data(data)
    bvp = rec.bvp
    hr = derive_heart_rate(Signal(np.nan_to_num(bvp.data), bvp.fs))
    missing_bvp = ~np.isfinite(bvp.data)
    if missing_bvp.any():
        hr_data = hr.data.copy()
        t_miss = np.flatnonzero(missing_bvp) / bvp.fs
        hr_data[np.unique(np.floor(t_miss * hr.fs).astype(int)).clip(0, hr_data.size - 1)] = np.nan
        hr = hr.with_data(hr_data)
    return Recording(eeg=eeg, bvp=bvp, eda=rec.eda, temp=rec.temp, label=rec.label,
                     subject_id=rec.subject_id, personality=rec.personality, hr=hr,
                     name=rec.name)


def epoch_features(epoch):
    """Feature blocks for one epoch, keyed by block name."""
    out = {"eeg_raw": epoch.eeg_raw}
    out.update(eeg_features(epoch.eeg_raw))
    out["hrv"] = compute_hrv_features(epoch.bvp)
    out["eda"] = compute_eda_features(epoch.eda)
    out["hr"] = compute_hr_features(epoch.hr)
    out["temp"] = compute_temp_features(epoch.temp)
    out["personality"] = np.asarray(epoch.personality, dtype=float)
    return out


def extract_samples(recordings, ica_seed=0):
    """Feature rows for every valid epoch plus a drop report.

    Returns ``(blocks, labels, subject_ids, report)``.
    """
    rows = {name: [] for name in BLOCK_NAMES}
    labels, subjects = [], []
    dropped = Counter()
    n_windows = 0
    for rec in recordings:
        prepared = prepare_recording(rec, ica_seed=ica_seed)
        epochs, drop = epoch_recording(prepared)
        n_windows += len(epochs) + sum(drop.values())
        dropped.update(drop)
        for ep in epochs:
            try:
                feats = epoch_features(ep)
            except InsufficientBeatsError:
                dropped["insufficient_beats"] += 1
                continue
            except LTCEmotionError as exc:
                raise StageError(f"features:{rec.name}@{ep.start:g}s", exc) from exc
            for name in BLOCK_NAMES:
                rows[name].append(feats[name])
            labels.append(ep.label)
            subjects.append(ep.subject_id)
    blocks = {name: np.asarray(v, dtype=float) for name, v in rows.items()}
    report = {"recordings": len(recordings), "windows": n_windows,
              "kept": len(labels), "dropped": dict(sorted(dropped.items()))}
    log.info("extracted %d epochs, dropped %s", len(labels), report["dropped"])
    return blocks, np.asarray(labels, dtype=np.int64), np.asarray(subjects, dtype=np.int64), report


def build_dataset(recordings, split_ratio=0.8, seed=0, meta=None):
    blocks, labels, subjects, report = extract_samples(recordings)
    meta = dict(meta or {})
    meta["drop_report"] = report
    ds = assemble_dataset(blocks, labels, subjects, split_ratio=split_ratio, seed=seed, meta=meta)
    return ds, report
