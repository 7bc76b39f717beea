"""Flat ``section.key = value`` config files for dataclass configs.

Tuples are written as comma lists and dict fields expand to
``section.field.key`` lines, so every file is plain, diffable text::

    model.cnn_filters = 48,64,48
    model.encoder_dims.psd = 64,32
    train.lr = 0.0005
"""
from dataclasses import fields, replace

from .errors import ConfigError


def _format(value):
    if isinstance(value, (tuple, list)):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(text, like, key):
    text = text.strip()
    try:
        if isinstance(like, bool):
            if text.lower() not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return text.lower() in ("true", "1")
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
        if isinstance(like, (tuple, list)):
            items = [t.strip() for t in text.split(",") if t.strip()]
            sample = like[0] if like else ""
            return tuple(_coerce(t, sample, key) for t in items)
        if like is None:
            return None if text in ("", "None") else text
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(like).__name__}") from None


def config_lines(section, cfg):
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, dict):
            for k, v in value.items():
                lines.append(f"{section}.{f.name}.{k} = {_format(v)}")
        else:
            lines.append(f"{section}.{f.name} = {_format(value)}")
    return lines


def write_config(path, sections):
    """``sections`` maps a prefix (``model``, ``train``, ``data``) to a dataclass or dict."""
    lines = []
    for section, cfg in sections.items():
        if isinstance(cfg, dict):
            lines += [f"{section}.{k} = {_format(v)}" for k, v in cfg.items()]
        else:
            lines += config_lines(section, cfg)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_config(path):
    """Parse into ``{section: {key: raw string}}``; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            section, _, name = key.partition(".")
            if not name:
                raise ConfigError(f"{path}:{n}: key {key!r} needs a section prefix")
            out.setdefault(section, {})[name] = value
    return out


def apply_overrides(cfg, overrides, section="model"):
    """Return a copy of dataclass ``cfg`` with string ``overrides`` applied."""
    known = {f.name for f in fields(cfg)}
    changes = {}
    for key, text in overrides.items():
        name, _, sub = key.partition(".")
        if name not in known:
            raise ConfigError(f"unknown setting {section}.{key}")
        current = getattr(cfg, name)
        if isinstance(current, dict):
            if not sub:
                raise ConfigError(f"{section}.{name} needs a sub-key")
            merged = dict(changes.get(name, current))
            like = current.get(sub, next(iter(current.values()), ()))
            merged[sub] = _coerce(text, like, f"{section}.{key}")
            changes[name] = merged
        else:
            changes[name] = _coerce(text, current, f"{section}.{key}")
    return replace(cfg, **changes)
