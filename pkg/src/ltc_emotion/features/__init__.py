"""Feature extraction, dataset assembly and synthetic data."""
from .dataset import (
    Dataset,
    Epoch,
    Recording,
    assemble_dataset,
    compute_class_weights,
    epoch_recording,
    load_dataset,
    save_dataset,
)
from .eeg import (
    compute_band_stats,
    compute_de_features,
    compute_faa,
    compute_psd_features,
    preprocess_eeg,
)
from .labels import BLOCK_NAMES, BLOCK_SHAPES, CLASS_NAMES, EEG_CHANNELS, N_CLASSES
from .peripheral import (
    compute_eda_features,
    compute_hr_features,
    compute_hrv_features,
    compute_temp_features,
)
from .pipeline import build_dataset, extract_samples
from .synth import SynthConfig, synth_generate
