"""Minibatch training with warmup/cosine schedule and macro-F1 early stopping."""
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..autograd import no_grad, softmax
from ..errors import ConfigError, NumericError
from ..features.dataset import compute_class_weights
from ..ltc import make_rng
from ..nn.model import MODALITY_BLOCK
from .losses import composite_loss, reconstruction_mse, smoothed_weighted_ce
from .metrics import accuracy_and_macro_f1
from .optim import AdamState, adamw_step, clip_gradients, lr_at

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "lr", "train_loss", "ce", "recon", "test_macro_f1", "test_accuracy")


@dataclass
class TrainConfig:
    lr: float = 5e-4
    batch_size: int = 64
    epochs: int = 200
    warmup_epochs: int = 15
    weight_decay: float = 0.01
    grad_clip: float = 1.0
    label_smoothing: float = 0.1
    lambda0: float = 0.001
    patience: int = 25
    seed: int = 0
    class_weights: tuple = ()  # empty: inverse frequency of the training labels
    max_epochs: int = 0  # stop after this many epochs (0: run the full schedule)

    def validate(self):
        for name in ("lr", "batch_size", "epochs", "patience"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"train.{name} must be positive")
        if self.warmup_epochs < 0 or self.weight_decay < 0 or self.grad_clip <= 0:
            raise ConfigError("warmup_epochs, weight_decay must be >= 0 and grad_clip > 0")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError("label_smoothing must lie in [0, 1)")
        if self.lambda0 < 0:
            raise ConfigError("lambda0 must be >= 0")
        if self.patience > self.epochs:
            raise ConfigError("patience cannot exceed the number of epochs")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0")
        return self


@dataclass
class EarlyStopState:
    best_macro_f1: float = -1.0
    best_epoch: int = -1
    epochs_since_improvement: int = 0
    best_state: dict = field(default_factory=dict, repr=False)

    def update(self, epoch, macro_f1, model):
        if macro_f1 > self.best_macro_f1:
            self.best_macro_f1 = macro_f1
            self.best_epoch = epoch
            self.epochs_since_improvement = 0
            self.best_state = model.state_dict()
            return True
        self.epochs_since_improvement += 1
        return False


@dataclass
class TrainResult:
    best_state: dict
    history: list
    early_stop: EarlyStopState
    class_weights: np.ndarray
    stopped_early: bool
    seconds: float


def model_blocks(model, blocks, idx=None):
    """The blocks ``model`` consumes, optionally row-selected."""
    names = [MODALITY_BLOCK[m] for m in model.cfg.modalities]
    if idx is None:
        return {b: blocks[b] for b in names}
    return {b: blocks[b][idx] for b in names}


def predict(model, blocks, batch_size=256):
    """Eval-mode outputs for every row: probs, logits, latent z, attention."""
    model.eval()
    n = len(next(iter(blocks.values())))
    out = {"logits": [], "probs": [], "z": [], "attention": []}
    with no_grad():
        for start in range(0, n, batch_size):
            sel = slice(start, start + batch_size)
            res = model.forward({k: v[sel] for k, v in model_blocks(model, blocks).items()})
            out["logits"].append(res.logits.data)
            out["probs"].append(softmax(res.logits, axis=1).data)
            out["z"].append(res.z.data)
            if res.attention is not None:
                out["attention"].append(res.attention.data)
    return {k: (np.concatenate(v) if v else None) for k, v in out.items()}


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    cuts = list(range(0, n, batch_size))
    chunks = [order[c:c + batch_size] for c in cuts]
    # batchnorm needs at least two rows; fold a lone straggler into the previous batch
    if len(chunks) > 1 and len(chunks[-1]) < 2:
        last = chunks.pop()
        chunks[-1] = np.concatenate([chunks[-1], last])
    return chunks


def train_loop(model, dataset, cfg, on_epoch=None):
    """Train ``model`` on the train split, early-stopping on test macro F1.

    The best parameters are loaded back into ``model`` before returning.
    """
    cfg.validate()
    t0 = time.perf_counter()
    train_idx, test_idx = dataset.indices("train"), dataset.indices("test")
    if train_idx.size < 2 or test_idx.size < 1:
        raise ConfigError("dataset needs a train split of >= 2 rows and a non-empty test split")
    n_classes = model.cfg.n_classes
    y_train = dataset.labels[train_idx]
    if cfg.class_weights:
        weights = np.asarray(cfg.class_weights, dtype=float)
    else:
        weights = compute_class_weights(y_train, n_classes)
    if weights.shape != (n_classes,):
        raise ConfigError(f"need {n_classes} class weights, got {weights.size}")

    train_blocks = model_blocks(model, dataset.blocks, train_idx)
    test_blocks = model_blocks(model, dataset.blocks, test_idx)
    model.fit_scaler(train_blocks)
    y_test = dataset.labels[test_idx]

    params = dict(model.named_parameters())
    arrays = {name: p.data for name, p in params.items()}
    opt = AdamState()
    rng = make_rng(cfg.seed)
    stop = EarlyStopState()
    history = []
    last_epoch = cfg.max_epochs or cfg.epochs
    stopped_early = False
    for epoch in range(min(cfg.epochs, last_epoch)):
        lr = lr_at(epoch, cfg)
        model.train()
        sums = np.zeros(3)
        seen = 0
        for idx in _batches(train_idx.size, cfg.batch_size, rng):
            batch = {k: v[idx] for k, v in train_blocks.items()}
            out = model.forward(batch, rng)
            ce = smoothed_weighted_ce(out.logits, y_train[idx], weights, cfg.label_smoothing)
            recon = reconstruction_mse(out.fused, out.recon)
            loss = composite_loss(ce, recon, epoch, cfg)
            if not np.isfinite(loss.item()):
                raise NumericError(f"non-finite loss at epoch {epoch}")
            model.zero_grad()
            loss.backward()
            grads = {n: p.grad for n, p in params.items() if p.grad is not None}
            clip_gradients(list(grads.values()), cfg.grad_clip)
            adamw_step(arrays, grads, opt, lr, cfg.weight_decay)
            sums += len(idx) * np.array([loss.item(), ce.item(), recon.item()])
            seen += len(idx)
        preds = predict(model, test_blocks)["probs"].argmax(axis=1)
        acc, f1 = accuracy_and_macro_f1(preds, y_test, n_classes)
        row = dict(zip(HISTORY_COLUMNS, (epoch, lr, *(sums / seen), f1, acc)))
        history.append(row)
        improved = stop.update(epoch, f1, model)
        log.info("epoch %d lr %.2e loss %.4f test acc %.4f f1 %.4f%s", epoch, lr, row["train_loss"],
                 acc, f1, " *" if improved else "")
        if on_epoch is not None:
            on_epoch(row)
        if stop.epochs_since_improvement >= cfg.patience:
            stopped_early = True
            break
    model.load_state_dict(stop.best_state)
    model.eval()
    return TrainResult(best_state=stop.best_state, history=history, early_stop=stop,
                       class_weights=weights, stopped_early=stopped_early,
                       seconds=time.perf_counter() - t0)


def format_history(history):
    """CSV text with fixed columns; floats use repr for exact round-trips."""
    lines = [",".join(HISTORY_COLUMNS)]
    for row in history:
        lines.append(",".join(str(row[c]) if c == "epoch" else repr(float(row[c]))
                              for c in HISTORY_COLUMNS))
    return "\n".join(lines) + "\n"


def write_history(path, history):
    with open(path, "w") as fh:
        fh.write(format_history(history))
