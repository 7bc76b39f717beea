"""Fixed vocabularies: emotion classes, montage, feature block layout."""

CLASS_NAMES = ("angry", "disgust", "fear", "happy", "neutral", "sad", "surprise")
N_CLASSES = len(CLASS_NAMES)
CLASS_INDEX = {name: i for i, name in enumerate(CLASS_NAMES)}

# Emotiv-style 14-channel montage; reversing the order mirrors hemispheres.
EEG_CHANNELS = (
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1",
    "O2", "P8", "T8", "FC6", "F4", "F8", "AF4",
)
# (right, left) frontal pairs for alpha asymmetry
FAA_PAIRS = (("AF4", "AF3"), ("F8", "F7"), ("F4", "F3"))

PERSONALITY_TRAITS = (
    "extraversion", "neuroticism", "agreeableness", "conscientiousness", "openness",
)

EEG_FS = 128.0
EPOCH_SECONDS = 2.0
EPOCH_SAMPLES = int(EEG_FS * EPOCH_SECONDS)

HRV_FEATURES = ("mean_ibi", "sdnn", "rmssd", "lf_power", "hf_power", "lf_hf", "beat_count")
EDA_FEATURES = (
    "tonic_mean", "tonic_std", "tonic_slope",
    "phasic_mean", "phasic_std", "phasic_max",
    "scr_count", "scr_mean_amplitude",
)
HR_FEATURES = ("mean", "std", "min", "max", "range", "diff_mean", "diff_std")
TEMP_FEATURES = ("mean", "std", "min", "max", "slope", "intercept")
STAT_NAMES = ("mean", "std", "skew", "kurtosis")

# Order matters: it is the fusion order of the model.
BLOCK_SHAPES = {
    "eeg_raw": (len(EEG_CHANNELS), EPOCH_SAMPLES),
    "psd": (len(EEG_CHANNELS), 5),
    "de": (len(EEG_CHANNELS), 5),
    "stats": (len(EEG_CHANNELS), 20),
    "asym": (len(FAA_PAIRS),),
    "hrv": (len(HRV_FEATURES),),
    "eda": (len(EDA_FEATURES),),
    "hr": (len(HR_FEATURES),),
    "temp": (len(TEMP_FEATURES),),
    "personality": (len(PERSONALITY_TRAITS),),
}
BLOCK_NAMES = tuple(BLOCK_SHAPES)
