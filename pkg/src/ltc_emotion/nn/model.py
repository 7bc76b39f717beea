"""Full multimodal model: CNN + LTC + attention for raw EEG, MLP encoders for
tabular features, fusion autoencoder and classifier head."""
from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..autograd import Module, Tensor, concat, dropout, relu
from ..errors import ConfigError, LTCEmotionError, ShapeError, StageError
from ..features.labels import BLOCK_SHAPES, N_CLASSES
from ..ltc import LNNStack, make_rng
from .layers import BatchNorm, ConvBlock, Linear, MLPEncoder, TemporalAttention

# Fusion order. ``raw_eeg`` reads the ``eeg_raw`` block; all others share names.
MODALITIES = ("raw_eeg", "psd", "de", "stats", "asym", "hrv", "eda", "hr", "temp", "personality")
MODALITY_BLOCK = {m: ("eeg_raw" if m == "raw_eeg" else m) for m in MODALITIES}
LOG_BLOCKS = ("psd",)

DEFAULT_ENCODER_DIMS = {
    "psd": (64, 32),
    "de": (64, 32),
    "stats": (128, 64, 32),
    "asym": (16, 8),
    "hrv": (32, 16),
    "eda": (32, 16),
    "hr": (32, 16),
    "temp": (32, 16),
    "personality": (32, 16),
}
# these keep dropout after their last layer
DROPOUT_ON_OUTPUT = ("psd", "de", "stats")

# Modality-ablation rows; heart rate travels with the HRV column.
ABLATION_PRESETS = {
    "A1": MODALITIES,
    "A2": ("raw_eeg", "psd", "de", "stats", "asym"),
    "A3": ("raw_eeg", "psd", "de", "stats", "asym", "personality"),
    "A4": ("hrv", "eda", "hr", "temp", "personality"),
    "A5": ("raw_eeg",),
    "A6": ("raw_eeg", "personality"),
    "A7": ("psd", "de", "stats", "asym", "hrv", "eda", "hr", "temp", "personality"),
    "A8": ("raw_eeg", "psd"),
    "A9": ("raw_eeg", "psd", "personality"),
    "A10": ("raw_eeg", "de"),
    "A11": ("raw_eeg", "de", "personality"),
    "A12": ("raw_eeg", "stats", "asym"),
    "A13": ("raw_eeg", "stats", "asym", "personality"),
}


def parse_modalities(spec):
    """Comma list of modality names, or an ablation preset id such as ``A6``."""
    if isinstance(spec, (tuple, list)):
        names = list(spec)
    elif spec in ABLATION_PRESETS:
        return ABLATION_PRESETS[spec]
    elif spec in ("all", ""):
        return MODALITIES
    else:
        names = [s.strip() for s in spec.split(",") if s.strip()]
    unknown = [n for n in names if n not in MODALITIES]
    if unknown or not names:
        raise ConfigError(f"unknown modalities {unknown}; choose from {', '.join(MODALITIES)}")
    return tuple(m for m in MODALITIES if m in names)


@dataclass
class ModelConfig:
    n_channels: int = 14
    n_timesteps: int = 256
    cnn_filters: tuple = (48, 64, 48)
    kernel: int = 7
    padding: int = 3
    pool_stride: int = 2
    lnn_hidden: int = 128
    lnn_layers: int = 1
    attention_dim: int = 32
    encoder_dims: dict = field(default_factory=lambda: dict(DEFAULT_ENCODER_DIMS))
    ae_hidden: int = 256
    latent_dim: int = 128
    classifier_dims: tuple = (256, 128)
    n_classes: int = N_CLASSES
    dropout: float = 0.3
    modalities: tuple = MODALITIES
    seed: int = 0

    def validate(self):
        if not self.modalities:
            raise ConfigError("at least one modality must be enabled")
        parse_modalities(tuple(self.modalities))
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        for name in ("kernel", "lnn_hidden", "lnn_layers", "attention_dim", "ae_hidden",
                     "latent_dim", "n_classes"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.n_classes < 2:
            raise ConfigError("need at least two classes")
        if "raw_eeg" in self.modalities:
            length = self.n_timesteps
            for _ in self.cnn_filters:
                length = (length + 2 * self.padding - self.kernel + 1) // self.pool_stride
            if length < 1:
                raise ConfigError("CNN reduces the sequence to zero length")
        return self

    @property
    def sequence_length(self):
        length = self.n_timesteps
        for _ in self.cnn_filters:
            length = (length + 2 * self.padding - self.kernel + 1) // self.pool_stride
        return length

    def modality_width(self, m):
        return self.lnn_hidden if m == "raw_eeg" else self.encoder_dims[m][-1]

    @property
    def fused_dim(self):
        return sum(self.modality_width(m) for m in self.modalities)

    def with_modalities(self, spec):
        return replace(self, modalities=parse_modalities(spec))


def miniature_config(**overrides):
    """Tiny model used for finite-difference checks."""
    base = dict(cnn_filters=(4, 4, 4), lnn_hidden=8, attention_dim=4, latent_dim=8,
                ae_hidden=8, classifier_dims=(8, 8), n_classes=2,
                encoder_dims={m: (4, 4) for m in DEFAULT_ENCODER_DIMS})
    base.update(overrides)
    return ModelConfig(**base)


@dataclass
class ModelOutput:
    logits: Tensor
    attention: Tensor | None  # (B, T') or None when raw EEG is disabled
    z: Tensor
    fused: Tensor
    recon: Tensor


class FeatureScaler(Module):
    """Per-column standardisation fitted on training rows.

    PSD is log-transformed first: band powers span orders of magnitude.
    """

    def __init__(self, blocks):
        super().__init__()
        self.blocks = tuple(blocks)
        for b in self.blocks:
            width = int(np.prod(BLOCK_SHAPES[b]))
            self.register_buffer(f"{b}.mean", np.zeros(width))
            self.register_buffer(f"{b}.std", np.ones(width))

    @staticmethod
    def _flatten(block, x):
        x = np.asarray(x, dtype=np.float64)
        x = x.reshape(x.shape[0], -1)  # channel-major for (14, k) blocks
        if block in LOG_BLOCKS:
            x = np.log(np.maximum(x, 1e-12))
        return x

    def fit(self, data):
        for b in self.blocks:
            x = self._flatten(b, data[b])
            std = x.std(axis=0)
            self._buffers[f"{b}.mean"][...] = x.mean(axis=0)
            self._buffers[f"{b}.std"][...] = np.where(std > 1e-8, std, 1.0)
        return self

    def transform(self, block, x):
        x = self._flatten(block, x)
        return (x - self._buffers[f"{block}.mean"]) / self._buffers[f"{block}.std"]


class FusionAutoencoder(Module):
    def __init__(self, d_in, d_hidden, d_z, p, rng):
        super().__init__()
        self.p = p
        self.enc1 = Linear(d_in, d_hidden, rng)
        self.enc2 = Linear(d_hidden, d_z, rng)
        self.dec1 = Linear(d_z, d_hidden, rng)
        self.dec2 = Linear(d_hidden, d_in, rng)

    def __call__(self, fused, rng):
        """Return ``(z, z_dropped, reconstruction)``."""
        h = dropout(relu(self.enc1(fused)), self.p, self.training, rng)
        z = relu(self.enc2(h))
        z_drop = dropout(z, self.p, self.training, rng)
        h = dropout(relu(self.dec1(z_drop)), self.p, self.training, rng)
        return z, z_drop, self.dec2(h)


class Classifier(Module):
    def __init__(self, d_in, hidden, n_classes, p, rng):
        super().__init__()
        self.p = p
        dims = (d_in,) + tuple(hidden)
        self.hidden = [Linear(a, b, rng) for a, b in zip(dims[:-1], dims[1:])]
        self.norms = [BatchNorm(b) for b in dims[1:]]
        # small final gain keeps initial logits near zero
        self.out = Linear(dims[-1], n_classes, rng, gain=0.1)

    def __call__(self, z, rng):
        x = z
        for lin, bn in zip(self.hidden, self.norms):
            x = dropout(relu(bn(lin(x))), self.p, self.training, rng)
        return self.out(x)


class EmotionNet(Module):
    def __init__(self, cfg=None):
        super().__init__()
        self.cfg = cfg = (cfg or ModelConfig()).validate()
        rng = make_rng(cfg.seed)
        p = cfg.dropout
        self.raw = "raw_eeg" in cfg.modalities
        if self.raw:
            chans = (cfg.n_channels,) + tuple(cfg.cnn_filters)
            self.cnn = [ConvBlock(a, b, cfg.kernel, cfg.padding, cfg.pool_stride, p, rng)
                        for a, b in zip(chans[:-1], chans[1:])]
            self.ltc = LNNStack(chans[-1], cfg.lnn_hidden, cfg.lnn_layers, p, rng)
            self.attention = TemporalAttention(cfg.lnn_hidden, cfg.attention_dim, p, rng)
        tabular = [m for m in cfg.modalities if m != "raw_eeg"]
        self.encoders = {
            m: MLPEncoder(m, (int(np.prod(BLOCK_SHAPES[m])),) + tuple(cfg.encoder_dims[m]), p, rng,
                          final_dropout=m in DROPOUT_ON_OUTPUT)
            for m in tabular
        }
        self.scaler = FeatureScaler(tabular)
        self.autoencoder = FusionAutoencoder(cfg.fused_dim, cfg.ae_hidden, cfg.latent_dim, p, rng)
        self.classifier = Classifier(cfg.latent_dim, cfg.classifier_dims, cfg.n_classes, p, rng)

    # checkpoint names: ltc.layer{l}.*, everything else nn.<component>.<layer>.<tensor>
    def named_parameters(self, prefix=""):
        for name, p in super().named_parameters(prefix):
            yield _public_name(name), p

    def named_buffers(self, prefix=""):
        for name, b in super().named_buffers(prefix):
            yield _public_name(name), b

    def fit_scaler(self, blocks):
        self.scaler.fit(blocks)
        return self

    def encode_raw(self, eeg, rng=None):
        """Raw EEG (B, C, T) -> pooled (B, d_h), attention (B, T'), hidden (B, T', d_h)."""
        cfg = self.cfg
        x = eeg if isinstance(eeg, Tensor) else Tensor(eeg)
        if x.shape[1:] != (cfg.n_channels, cfg.n_timesteps):
            raise ShapeError(
                f"raw EEG must be (B, {cfg.n_channels}, {cfg.n_timesteps}), got {x.shape}"
            )
        for block in self.cnn:
            x = block(x, rng)
        hidden = self.ltc.forward(x.transpose(0, 2, 1), rng)
        pooled, alpha = self.attention(hidden, rng)
        return pooled, alpha, hidden

    def encode_modality(self, name, features, rng=None):
        block = MODALITY_BLOCK[name]
        x = np.asarray(features, dtype=np.float64)
        if x.shape[1:] != BLOCK_SHAPES[block]:
            raise ShapeError(f"{name}: expected per-sample shape {BLOCK_SHAPES[block]}, got {x.shape[1:]}")
        return self.encoders[name](Tensor(self.scaler.transform(block, x)), rng)

    def forward(self, batch, rng=None):
        parts, alpha = [], None
        for m in self.cfg.modalities:
            block = MODALITY_BLOCK[m]
            if block not in batch:
                raise StageError(f"encode:{m}", ShapeError(f"batch has no {block!r} block"))
            try:
                if m == "raw_eeg":
                    pooled, alpha, _ = self.encode_raw(batch[block], rng)
                    parts.append(pooled)
                else:
                    parts.append(self.encode_modality(m, batch[block], rng))
            except LTCEmotionError as exc:
                if isinstance(exc, StageError):
                    raise
                raise StageError(f"encode:{m}", exc) from exc
        fused = concat(parts, axis=1) if len(parts) > 1 else parts[0]
        z, z_drop, recon = self.autoencoder(fused, rng)
        logits = self.classifier(z_drop, rng)
        return ModelOutput(logits=logits, attention=alpha, z=z, fused=fused, recon=recon)

    __call__ = forward


def _public_name(name):
    if name.startswith("ltc."):
        return name
    return "nn." + name


def model_forward(model, batch, training=False, rng=None):
    model.train(training)
    if training and rng is None:
        rng = make_rng(model.cfg.seed)
    return model.forward(batch, rng)


def count_parameters(model):
    return model.n_parameters()


CONFIG_FIELDS = tuple(f.name for f in fields(ModelConfig))
