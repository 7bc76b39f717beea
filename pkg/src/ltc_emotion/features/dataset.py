"""Recordings, epochs, the per-sample feature dataset and its on-disk format."""
import json
import os
import struct
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..dsp import Signal
from ..errors import DataError, StratificationError
from .labels import BLOCK_NAMES, BLOCK_SHAPES, CLASS_NAMES, EPOCH_SECONDS, N_CLASSES

SCHEMA_VERSION = 1
TENSOR_MAGIC = b"LTCTNSR1"
_DTYPE_CODES = {1: "<f8", 2: "<f4", 3: "<i8", 4: "<i4", 5: "|u1"}
_CODE_FOR_DTYPE = {np.dtype(v).str: k for k, v in _DTYPE_CODES.items()}


@dataclass
class Recording:
    """One continuous multimodal session with a single emotion label.

    NaN samples mark missing coverage in any stream.
    """

    eeg: Signal
    bvp: Signal
    eda: Signal
    temp: Signal
    label: int
    subject_id: int
    personality: np.ndarray
    hr: Signal | None = None
    name: str = ""

    def streams(self):
        out = {"eeg": self.eeg, "bvp": self.bvp, "eda": self.eda, "temp": self.temp}
        if self.hr is not None:
            out["hr"] = self.hr
        return out


@dataclass
class Epoch:
    eeg_raw: np.ndarray
    bvp: Signal
    eda: Signal
    temp: Signal
    hr: Signal | None
    subject_id: int
    label: int
    personality: np.ndarray
    start: float = 0.0


def _window(sig, start, seconds):
    i0 = int(round(start * sig.fs))
    i1 = i0 + int(round(seconds * sig.fs))
    if i1 > sig.n_samples:
        return None
    return sig.data[..., i0:i1]


def epoch_recording(rec, seconds=EPOCH_SECONDS):
    """Cut consecutive non-overlapping windows with full coverage of every stream.

    Returns ``(epochs, dropped)`` where ``dropped`` counts rejected windows per
    missing stream. Windows extending past the end of a stream are not counted.
    """
    streams = rec.streams()
    duration = min(s.duration for s in streams.values())
    n_windows = int(np.floor(duration / seconds + 1e-9))
    epochs, dropped = [], Counter()
    for k in range(n_windows):
        start = k * seconds
        parts = {name: _window(sig, start, seconds) for name, sig in streams.items()}
        missing = [n for n, p in parts.items() if p is None or not np.all(np.isfinite(p))]
        if missing:
            for n in missing:
                dropped[f"missing_{n}"] += 1
            continue
        epochs.append(Epoch(
            eeg_raw=parts["eeg"],
            bvp=Signal(parts["bvp"], rec.bvp.fs),
            eda=Signal(parts["eda"], rec.eda.fs),
            temp=Signal(parts["temp"], rec.temp.fs),
            hr=Signal(parts["hr"], rec.hr.fs) if "hr" in parts else None,
            subject_id=rec.subject_id,
            label=rec.label,
            personality=np.asarray(rec.personality, dtype=float),
            start=start,
        ))
    return epochs, dict(dropped)


@dataclass
class Dataset:
    """Column-oriented sample store.

    ``blocks`` maps block name to an (N, ...) array; ``split`` is 0 for train
    and 1 for test.
    """

    blocks: dict
    labels: np.ndarray
    subject_ids: np.ndarray
    split: np.ndarray
    seed: int = 0
    class_names: tuple = CLASS_NAMES
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.subject_ids = np.asarray(self.subject_ids, dtype=np.int64)
        self.split = np.asarray(self.split, dtype=np.int64)
        n = len(self.labels)
        for name, arr in self.blocks.items():
            if arr.shape[0] != n:
                raise DataError(f"block {name} has {arr.shape[0]} rows, expected {n}")
            if name in BLOCK_SHAPES and arr.shape[1:] != BLOCK_SHAPES[name]:
                raise DataError(
                    f"block {name} has shape {arr.shape[1:]}, expected {BLOCK_SHAPES[name]}"
                )

    def __len__(self):
        return len(self.labels)

    @property
    def class_counts(self):
        return np.bincount(self.labels, minlength=len(self.class_names))

    def indices(self, split):
        code = {"train": 0, "test": 1}[split] if isinstance(split, str) else split
        return np.flatnonzero(self.split == code)

    def take(self, idx):
        return Dataset(
            blocks={k: v[idx] for k, v in self.blocks.items()},
            labels=self.labels[idx],
            subject_ids=self.subject_ids[idx],
            split=self.split[idx],
            seed=self.seed,
            class_names=self.class_names,
            meta=dict(self.meta),
        )

    def subset(self, split):
        return self.take(self.indices(split))

    def check_invariants(self):
        for name, arr in self.blocks.items():
            if not np.all(np.isfinite(arr)):
                raise DataError(f"block {name} contains non-finite values")
        if np.any((self.labels < 0) | (self.labels >= len(self.class_names))):
            raise DataError("label out of range")
        return True


def stratified_split(labels, split_ratio=0.8, seed=0, n_classes=N_CLASSES):
    """0/1 split flags with ``round(ratio * n_c)`` train samples in every class."""
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=n_classes)
    if np.any(counts < 2):
        bad = [CLASS_NAMES[c] if c < len(CLASS_NAMES) else c for c in np.flatnonzero(counts < 2)]
        raise StratificationError(f"classes with fewer than 2 samples: {bad}")
    rng = np.random.Generator(np.random.Philox(seed))
    split = np.ones(len(labels), dtype=np.int64)
    for c in range(n_classes):
        idx = np.flatnonzero(labels == c)
        n_train = int(np.clip(np.round(split_ratio * idx.size), 1, idx.size - 1))
        split[rng.permutation(idx)[:n_train]] = 0
    return split


def assemble_dataset(blocks, labels, subject_ids, split_ratio=0.8, seed=0, meta=None):
    labels = np.asarray(labels, dtype=np.int64)
    split = stratified_split(labels, split_ratio, seed)
    return Dataset(blocks={k: np.asarray(v) for k, v in blocks.items()}, labels=labels,
                   subject_ids=subject_ids, split=split, seed=seed, meta=dict(meta or {}))


def compute_class_weights(labels_or_counts, n_classes=N_CLASSES, from_counts=False):
    """Inverse-frequency weights ``N / (K * N_c)``."""
    if from_counts:
        counts = np.asarray(labels_or_counts, dtype=float)
    else:
        counts = np.bincount(np.asarray(labels_or_counts), minlength=n_classes).astype(float)
    if counts.size != n_classes or np.any(counts <= 0):
        raise DataError(f"every class needs at least one sample, got counts {counts.tolist()}")
    return counts.sum() / (n_classes * counts)


# --- binary tensor files -------------------------------------------------

def write_tensor(path, array):
    """Magic, dtype code (u1), ndim (u1), 6 pad bytes, ndim u8 dims, raw LE data."""
    arr = np.asarray(array)
    le = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
    code = _CODE_FOR_DTYPE.get(np.dtype(le).str)
    if code is None:
        raise DataError(f"unsupported dtype {arr.dtype}")
    arr = np.ascontiguousarray(arr, dtype=_DTYPE_CODES[code])
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<BB6x", code, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.tobytes(order="C"))


def read_tensor(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != TENSOR_MAGIC:
        raise DataError(f"{path}: bad magic")
    code, ndim = struct.unpack_from("<BB6x", raw, 8)
    if code not in _DTYPE_CODES:
        raise DataError(f"{path}: unknown dtype code {code}")
    shape = struct.unpack_from(f"<{ndim}Q", raw, 16)
    offset = 16 + 8 * ndim
    dtype = np.dtype(_DTYPE_CODES[code])
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(raw) - offset != expected:
        raise DataError(f"{path}: payload is {len(raw) - offset} bytes, expected {expected}")
    return np.frombuffer(raw, dtype=dtype, offset=offset).reshape(shape).copy()


def save_dataset(ds, directory):
    os.makedirs(directory, exist_ok=True)
    widths = {name: list(arr.shape[1:]) for name, arr in ds.blocks.items()}
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "class_names": list(ds.class_names),
        "n_samples": len(ds),
        "class_counts": ds.class_counts.tolist(),
        "blocks": {name: {"file": f"{name}.bin", "shape": w} for name, w in widths.items()},
        "block_order": [b for b in BLOCK_NAMES if b in ds.blocks]
        + [b for b in ds.blocks if b not in BLOCK_NAMES],
        "seed": int(ds.seed),
        "meta": ds.meta,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, arr in ds.blocks.items():
        write_tensor(os.path.join(directory, f"{name}.bin"), arr)
    with open(os.path.join(directory, "labels.csv"), "w") as fh:
        fh.write("index,class_id,subject_id,split\n")
        for i, (c, s, f) in enumerate(zip(ds.labels, ds.subject_ids, ds.split)):
            fh.write(f"{i},{int(c)},{int(s)},{int(f)}\n")


def load_dataset(directory):
    path = os.path.join(directory, "manifest.json")
    if not os.path.exists(path):
        raise DataError(f"{directory}: no manifest.json")
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"{directory}: unsupported schema {manifest.get('schema_version')}")
    blocks = {}
    for name in manifest["block_order"]:
        info = manifest["blocks"][name]
        arr = read_tensor(os.path.join(directory, info["file"]))
        if list(arr.shape[1:]) != info["shape"]:
            raise DataError(f"{name}: shape {arr.shape[1:]} disagrees with manifest")
        blocks[name] = arr
    rows = np.loadtxt(os.path.join(directory, "labels.csv"), delimiter=",", skiprows=1,
                      dtype=np.int64, ndmin=2)
    if rows.shape[0] != manifest["n_samples"]:
        raise DataError(f"{directory}: labels.csv has {rows.shape[0]} rows")
    return Dataset(blocks=blocks, labels=rows[:, 1], subject_ids=rows[:, 2], split=rows[:, 3],
                   seed=manifest["seed"], class_names=tuple(manifest["class_names"]),
                   meta=manifest.get("meta", {}))
