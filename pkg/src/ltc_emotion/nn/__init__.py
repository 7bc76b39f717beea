from .layers import BatchNorm, ConvBlock, Linear, MLPEncoder, TemporalAttention, attention_pool
from .model import (
    ABLATION_PRESETS,
    MODALITIES,
    MODALITY_BLOCK,
    Classifier,
    EmotionNet,
    FeatureScaler,
    FusionAutoencoder,
    ModelConfig,
    ModelOutput,
    count_parameters,
    miniature_config,
    model_forward,
    parse_modalities,
)

__all__ = [
    "ABLATION_PRESETS", "BatchNorm", "Classifier", "ConvBlock", "EmotionNet", "FeatureScaler",
    "FusionAutoencoder", "Linear", "MLPEncoder", "MODALITIES", "MODALITY_BLOCK", "ModelConfig",
    "ModelOutput", "TemporalAttention", "attention_pool", "count_parameters", "miniature_config",
    "model_forward", "parse_modalities",
]
