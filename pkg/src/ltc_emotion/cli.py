"""Command-line entry point: synth, preprocess, train, eval, analyze.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric failure.
Reports from ``eval`` and ``analyze`` go to ``--out``, else to
``$LTC_EMOTION_REPORT_DIR``, else to ``./reports``.
"""
import argparse
import glob
import json
import logging
import os
import sys
from dataclasses import fields

import numpy as np

from .analysis import (
    attention_long_csv,
    attention_profiles,
    bootstrap_ci,
    calibration,
    neuron_dynamics,
    separability,
)
from .config import apply_overrides, read_config, write_config
from .errors import ConfigError, DataError, LTCEmotionError, NumericError, ShapeError, StageError
from .features.dataset import load_dataset, save_dataset
from .features.pipeline import build_dataset
from .features.synth import SynthConfig, load_recording, save_recordings, synth_generate
from .nn.checkpoint import load_model, save_model
from .nn.model import EmotionNet, ModelConfig, parse_modalities
from .train import TrainConfig, compute_metrics, predict, train_loop, write_history

REPORT_ENV = "LTC_EMOTION_REPORT_DIR"
ANALYSES = ("attention", "dynamics", "calibration", "bootstrap", "separability")
CHECKPOINT = "model.ckpt"
log = logging.getLogger("ltc_emotion")


class UsageError(Exception):
    pass


def _report_dir(args):
    path = args.out or os.environ.get(REPORT_ENV) or "reports"
    os.makedirs(path, exist_ok=True)
    return path


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def _print_counts(ds):
    counts = ", ".join(f"{n}={c}" for n, c in zip(ds.class_names, ds.class_counts))
    print(f"{len(ds)} samples ({counts})")


# -- commands -----------------------------------------------------------------

def cmd_synth(args):
    cfg = SynthConfig(per_class=args.per_class, noise=args.noise, seed=args.seed,
                      epochs_per_recording=args.epochs_per_recording, n_subjects=args.subjects)
    recordings = synth_generate(cfg)
    if args.raw_out:
        save_recordings(recordings, args.raw_out)
    meta = {"source": "synthetic", "noise": cfg.noise, "per_class": cfg.per_class}
    ds, report = build_dataset(recordings, split_ratio=args.split_ratio, seed=args.seed, meta=meta)
    save_dataset(ds, args.out)
    _print_counts(ds)
    print(f"dropped windows: {report['dropped'] or 'none'}")
    return 0


def cmd_preprocess(args):
    files = sorted(glob.glob(os.path.join(args.raw, "*.npz")))
    if not files:
        raise DataError(f"no .npz recordings in {args.raw}")
    recordings, failures = [], []
    for path in files:
        try:
            recordings.append(load_recording(path))
        except (OSError, EOFError, KeyError, ValueError) as exc:
            failures.append(f"{os.path.basename(path)}: {exc}")
    if failures:
        raise DataError("malformed recordings:\n  " + "\n  ".join(failures))
    ds, report = build_dataset(recordings, split_ratio=args.split_ratio, seed=args.seed,
                               meta={"source": os.path.abspath(args.raw)})
    save_dataset(ds, args.out)
    _dump_json(os.path.join(args.out, "drop_report.json"), report)
    _print_counts(ds)
    print(f"windows {report['windows']}, kept {report['kept']}, dropped {report['dropped'] or 'none'}")
    return 0


def _configs(args):
    sections = read_config(args.config) if args.config else {}
    unknown = set(sections) - {"model", "train", "data"}
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    mcfg = apply_overrides(ModelConfig(), sections.get("model", {}), "model")
    tcfg = apply_overrides(TrainConfig(), sections.get("train", {}), "train")
    if getattr(args, "modalities", None):
        mcfg = mcfg.with_modalities(parse_modalities(args.modalities))
    flags = {f.name: getattr(args, f.name) for f in fields(TrainConfig)
             if getattr(args, f.name, None) is not None}
    tcfg = apply_overrides(tcfg, {k: str(v) for k, v in flags.items()}, "train")
    if getattr(args, "seed", None) is not None:
        mcfg = apply_overrides(mcfg, {"seed": str(args.seed)})
    return mcfg.validate(), tcfg.validate()


def cmd_train(args):
    mcfg, tcfg = _configs(args)
    ds = load_dataset(args.data)
    ds.check_invariants()
    os.makedirs(args.out, exist_ok=True)
    model = EmotionNet(mcfg)
    print(f"model: {model.n_parameters()} parameters, fused width {mcfg.fused_dim}")
    result = train_loop(model, ds, tcfg)
    stop = result.early_stop
    save_model(os.path.join(args.out, CHECKPOINT), model,
               {"trained": "true", "best_epoch": stop.best_epoch,
                "best_macro_f1": repr(stop.best_macro_f1)})
    write_history(os.path.join(args.out, "history.csv"), result.history)
    write_config(os.path.join(args.out, "config.txt"), {"model": mcfg, "train": tcfg})
    test = ds.indices("test")
    probs = predict(model, {k: v[test] for k, v in ds.blocks.items()})["probs"]
    report = compute_metrics(probs, ds.labels[test], ds.class_names)
    with open(os.path.join(args.out, "metrics.json"), "w") as fh:
        fh.write(report.to_json())
    print(f"best epoch {stop.best_epoch}: test macro F1 {stop.best_macro_f1:.4f}, "
          f"accuracy {report.accuracy:.4f}")
    return 0


def _load(args):
    cfg = None
    if getattr(args, "config", None):
        sections = read_config(args.config)
        cfg = apply_overrides(ModelConfig(), sections.get("model", {}), "model").validate()
    model, meta = load_model(args.checkpoint, cfg)
    if meta.get("trained") != "true":
        raise DataError(f"{args.checkpoint} is not a trained checkpoint")
    ds = load_dataset(args.data)
    return model, ds


def _split_rows(ds, split):
    return np.arange(len(ds)) if split == "all" else ds.indices(split)


def cmd_eval(args):
    model, ds = _load(args)
    rows = _split_rows(ds, args.split)
    probs = predict(model, {k: v[rows] for k, v in ds.blocks.items()})["probs"]
    report = compute_metrics(probs, ds.labels[rows], ds.class_names)
    text = report.to_json()
    with open(os.path.join(_report_dir(args), f"metrics_{args.split}.json"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def _analysis_attention(model, ds, out, args):
    if model.cfg.modalities and "raw_eeg" not in model.cfg.modalities:
        raise ConfigError("attention analysis needs the raw EEG pathway")
    res = predict(model, ds.blocks)
    profile = attention_profiles(res["attention"], ds.labels, ds.class_names)
    path = os.path.join(out, "attention.csv")
    with open(path, "w") as fh:
        fh.write(attention_long_csv(profile))
    return path


def _analysis_dynamics(model, ds, out, args):
    if "raw_eeg" not in model.cfg.modalities:
        raise ConfigError("dynamics analysis needs the LTC pathway")
    layers = []
    for li, cell in enumerate(model.ltc.cells()):
        dyn = neuron_dynamics(cell, seed=args.seed)
        roles = dyn.roles
        layers.append({
            "layer": li,
            "neurons": [
                {"index": i, "tau": float(dyn.tau[i]),
                 "memory_dominance": float(dyn.memory_dominance[i]),
                 "role": roles.rows[roles.assignment[i]]["role"]}
                for i in range(dyn.tau.size)
            ],
            "roles": roles.rows,
            "empty_roles": roles.empty_roles,
            "shapiro_log_tau": dict(zip(("W", "p"), dyn.shapiro_log_tau or ())),
            "spearman_tau_md": dict(zip(("rho", "p"), dyn.spearman_tau_md or ())),
        })
    path = os.path.join(out, "dynamics.json")
    _dump_json(path, {"layers": layers})
    return path


def _test_predictions(model, ds):
    test = ds.indices("test")
    res = predict(model, {k: v[test] for k, v in ds.blocks.items()})
    return res, ds.labels[test]


def _analysis_calibration(model, ds, out, args):
    res, y = _test_predictions(model, ds)
    rep = calibration(res["probs"], y, n_bins=args.bins)
    path = os.path.join(out, "calibration.json")
    _dump_json(path, vars(rep))
    return path


def _analysis_bootstrap(model, ds, out, args):
    res, y = _test_predictions(model, ds)
    boot = bootstrap_ci(res["probs"].argmax(axis=1) == y, n_boot=args.n_boot, seed=args.seed)
    path = os.path.join(out, "bootstrap.json")
    _dump_json(path, {"accuracy": boot.point, "lo": boot.lo, "hi": boot.hi, "level": boot.level,
                      "n_boot": args.n_boot, "std": float(boot.distribution.std())})
    return path


def _analysis_separability(model, ds, out, args):
    res, y = _test_predictions(model, ds)
    rep = separability(res["z"], y)
    path = os.path.join(out, "separability.json")
    _dump_json(path, vars(rep))
    return path


def cmd_analyze(args):
    model, ds = _load(args)
    out = _report_dir(args)
    which = ANALYSES if args.which == "all" else (args.which,)
    runners = {"attention": _analysis_attention, "dynamics": _analysis_dynamics,
               "calibration": _analysis_calibration, "bootstrap": _analysis_bootstrap,
               "separability": _analysis_separability}
    for name in which:
        print(runners[name](model, ds, out, args))
    return 0


# -- parser -------------------------------------------------------------------

def _add_train_flags(p):
    d = TrainConfig()
    p.add_argument("--lr", type=float, help=f"peak learning rate (default {d.lr})")
    p.add_argument("--batch-size", dest="batch_size", type=int,
                   help=f"minibatch size (default {d.batch_size})")
    p.add_argument("--epochs", type=int, help=f"schedule length E (default {d.epochs})")
    p.add_argument("--max-epochs", dest="max_epochs", type=int,
                   help="stop after this many epochs without shortening the schedule (default: E)")
    p.add_argument("--warmup-epochs", dest="warmup_epochs", type=int,
                   help=f"linear warmup epochs (default {d.warmup_epochs})")
    p.add_argument("--weight-decay", dest="weight_decay", type=float,
                   help=f"decoupled weight decay (default {d.weight_decay})")
    p.add_argument("--grad-clip", dest="grad_clip", type=float,
                   help=f"global gradient-norm bound (default {d.grad_clip})")
    p.add_argument("--label-smoothing", dest="label_smoothing", type=float,
                   help=f"label smoothing (default {d.label_smoothing})")
    p.add_argument("--lambda0", type=float,
                   help=f"initial reconstruction weight (default {d.lambda0})")
    p.add_argument("--patience", type=int,
                   help=f"early-stopping patience in epochs (default {d.patience})")


def build_parser():
    parser = argparse.ArgumentParser(prog="ltc-emotion", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("synth", help="generate a synthetic feature dataset", formatter_class=fmt)
    p.add_argument("--out", required=True, help="dataset directory to write")
    p.add_argument("--per-class", dest="per_class", type=int, default=100,
                   help="epochs per emotion class")
    p.add_argument("--noise", type=float, default=0.2, help="noise and jitter level")
    p.add_argument("--seed", type=int, required=True, help="generator and split seed")
    p.add_argument("--split-ratio", dest="split_ratio", type=float, default=0.8,
                   help="train fraction per class")
    p.add_argument("--epochs-per-recording", dest="epochs_per_recording", type=int, default=10,
                   help="2 s windows per synthetic recording")
    p.add_argument("--subjects", type=int, default=10, help="number of synthetic subjects")
    p.add_argument("--raw-out", dest="raw_out", help="also write raw recordings (.npz) here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="raw recordings -> feature dataset", formatter_class=fmt)
    p.add_argument("--raw", required=True, help="directory of .npz recordings")
    p.add_argument("--out", required=True, help="dataset directory to write")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--split-ratio", dest="split_ratio", type=float, default=0.8,
                   help="train fraction per class")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a model and write checkpoint, history, metrics",
                       formatter_class=fmt)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="run directory to write")
    p.add_argument("--seed", type=int, required=True, help="initialisation and shuffling seed")
    p.add_argument("--config", help="key = value config file (model./train. sections)")
    p.add_argument("--modalities",
                   help="comma list of modalities or a preset A1..A13 (default: all)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="metrics report for a checkpoint", formatter_class=fmt)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--checkpoint", required=True, help="checkpoint written by train")
    p.add_argument("--config", help="model config to build instead of the stored one")
    p.add_argument("--split", choices=("train", "test", "all"), default="test")
    p.add_argument("--out", help=f"report directory (default ${REPORT_ENV} or ./reports)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="post-hoc analyses of a trained model", formatter_class=fmt)
    p.add_argument("which", choices=ANALYSES + ("all",))
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--checkpoint", required=True, help="checkpoint written by train")
    p.add_argument("--out", help=f"report directory (default ${REPORT_ENV} or ./reports)")
    p.add_argument("--seed", type=int, default=0, help="seed for k-means and bootstrap")
    p.add_argument("--n-boot", dest="n_boot", type=int, default=1000, help="bootstrap resamples")
    p.add_argument("--bins", type=int, default=10, help="calibration bins")
    p.set_defaults(func=cmd_analyze, config=None)
    return parser


def _exit_code(exc):
    if isinstance(exc, StageError):
        return _exit_code(exc.cause) if isinstance(exc.cause, Exception) else 2
    if isinstance(exc, (ConfigError, UsageError)):
        return 1
    if isinstance(exc, NumericError):
        return 3
    return 2


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (LTCEmotionError, UsageError, FloatingPointError, OSError) as exc:
        if isinstance(exc, FloatingPointError):
            exc = NumericError(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc) if not isinstance(exc, OSError) else 2


if __name__ == "__main__":
    sys.exit(main())
