"""Save and restore a model together with the config that built it."""
import os

from ..autograd import load_archive, save_archive
from ..config import apply_overrides, config_lines
from ..errors import DataError
from .model import EmotionNet, ModelConfig


def save_model(path, model, meta=None):
    info = {}
    for line in config_lines("model", model.cfg):
        key, value = line.split(" = ", 1)
        info[key] = value
    info.update({k: str(v) for k, v in (meta or {}).items()})
    save_archive(path, model.state_dict(), info)


def config_from_meta(meta):
    model_keys = {k[len("model."):]: v for k, v in meta.items() if k.startswith("model.")}
    return apply_overrides(ModelConfig(), model_keys)


def load_model(path, cfg=None):
    """Rebuild the model from a checkpoint; ``cfg`` overrides the stored config
    and must then agree with the stored tensors."""
    if not os.path.exists(path):
        raise DataError(f"checkpoint {path} does not exist")
    tensors, meta = load_archive(path)
    model = EmotionNet(cfg or config_from_meta(meta))
    model.load_state_dict(tensors)
    model.eval()
    return model, meta
