"""Feature fusion and a from-scratch two-layer MLP entailment classifier.

The fused representation of a premise vector v1 and hypothesis vector v2 is
the length-5d concatenation [v1 | v2 | v1+v2 | v1-v2 | v1*v2] with an
elementwise product block.  The classifier is a single-hidden-layer
perceptron over that representation, trained with minibatch Adam on softmax
cross-entropy; the epoch scoring highest on the dev set is kept.

Weights are stored as float32 (the checkpoint dtype) while all forward,
backward, and optimizer arithmetic runs in float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import metrics
from .store import DataError, DEFAULT_LABELS, EmbeddingStore, PairExample

MODEL_MAGIC = b"VEMC"
MODEL_VERSION = 1
DEFAULT_HIDDEN = 250
NONLINEARITIES = ("relu", "identity")

EVAL_BLOCK = 4096


def fuse(v1, v2) -> np.ndarray:
    """Length-5d fusion [v1 | v2 | v1+v2 | v1-v2 | v1*v2] of two vectors."""
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    if v1.ndim != 1 or v1.shape != v2.shape:
        raise DataError(f"dimension mismatch: {v1.shape} vs {v2.shape}")
    return np.concatenate([v1, v2, v1 + v2, v1 - v2, v1 * v2])


def fuse_batch(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Row-wise fusion of two (n, d) matrices into (n, 5d)."""
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    if m1.shape != m2.shape or m1.ndim != 2:
        raise DataError(f"shape mismatch: {m1.shape} vs {m2.shape}")
    return np.hstack([m1, m2, m1 + m2, m1 - m2, m1 * m2])


@dataclass(frozen=True)
class MlpModel:
    """Two-layer perceptron weights plus label order and nonlinearity tag."""

    w1: np.ndarray  # (d_in, d_hidden) float32
    b1: np.ndarray  # (d_hidden,) float32
    w2: np.ndarray  # (d_hidden, d_out) float32
    b2: np.ndarray  # (d_out,) float32
    label_order: tuple[str, ...]
    nonlinearity: str = "relu"

    def __post_init__(self):
        if self.nonlinearity not in NONLINEARITIES:
            raise DataError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.w1.shape[1] != self.b1.shape[0] or self.w1.shape[1] != self.w2.shape[0]:
            raise DataError("inconsistent hidden dimensions")
        if self.w2.shape[1] != self.b2.shape[0]:
            raise DataError("inconsistent output dimensions")
        if self.w2.shape[1] != len(self.label_order):
            raise DataError("output size does not match label count")
        for arr in (self.w1, self.b1, self.w2, self.b2):
            if not np.isfinite(arr).all():
                raise DataError("non-finite weights")

    @property
    def d_in(self) -> int:
        return self.w1.shape[0]

    @property
    def d_hidden(self) -> int:
        return self.w1.shape[1]

    @property
    def d_out(self) -> int:
        return self.w2.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 256
    learning_rate: float = 1e-3
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    dev_acc: list[float] = field(default_factory=list)
    dev_f1: list[float] = field(default_factory=list)
    best_epoch: int = 0  # index into the per-epoch series


def history_to_csv(history: TrainHistory) -> str:
    lines = ["epoch,train_loss,train_acc,dev_acc,dev_f1"]
    for i in range(len(history.train_loss)):
        lines.append(
            f"{i + 1},{history.train_loss[i]:.12g},{history.train_acc[i]:.12g},"
            f"{history.dev_acc[i]:.12g},{history.dev_f1[i]:.12g}"
        )
    return "\n".join(lines) + "\n"


def init_model(
    d_in: int,
    d_hidden: int = DEFAULT_HIDDEN,
    label_order: Sequence[str] = DEFAULT_LABELS,
    seed: int = 0,
    nonlinearity: str = "relu",
) -> MlpModel:
    """Seeded uniform fan-in initialization, biases zero."""
    rng = np.random.default_rng(seed)
    d_out = len(label_order)
    bound1 = np.sqrt(6.0 / d_in)
    bound2 = np.sqrt(6.0 / d_hidden)
    return MlpModel(
        w1=rng.uniform(-bound1, bound1, size=(d_in, d_hidden)).astype(np.float32),
        b1=np.zeros(d_hidden, dtype=np.float32),
        w2=rng.uniform(-bound2, bound2, size=(d_hidden, d_out)).astype(np.float32),
        b2=np.zeros(d_out, dtype=np.float32),
        label_order=tuple(label_order),
        nonlinearity=nonlinearity,
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _forward_parts(w1, b1, w2, b2, x, nonlinearity):
    pre = x @ w1 + b1
    hidden = np.maximum(pre, 0.0) if nonlinearity == "relu" else pre
    logits = hidden @ w2 + b2
    return pre, hidden, logits


def forward(model: MlpModel, x) -> np.ndarray:
    """Class probabilities for one fused vector or a batch of them."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.d_in:
        raise DataError(f"input width {x.shape[-1]} does not match d_in {model.d_in}")
    _, _, logits = _forward_parts(
        model.w1.astype(np.float64),
        model.b1.astype(np.float64),
        model.w2.astype(np.float64),
        model.b2.astype(np.float64),
        x,
        model.nonlinearity,
    )
    probs = _softmax(logits)
    return probs[0] if single else probs


def _loss_and_grads(w1, b1, w2, b2, x, y_idx, nonlinearity):
    """Mean cross-entropy over the batch and gradients for all parameters."""
    n = x.shape[0]
    pre, hidden, logits = _forward_parts(w1, b1, w2, b2, x, nonlinearity)
    probs = _softmax(logits)
    nll = -np.log(np.maximum(probs[np.arange(n), y_idx], 1e-300))
    loss = float(nll.mean())
    delta = probs.copy()
    delta[np.arange(n), y_idx] -= 1.0
    delta /= n
    gw2 = hidden.T @ delta
    gb2 = delta.sum(axis=0)
    dhidden = delta @ w2.T
    if nonlinearity == "relu":
        dhidden = dhidden * (pre > 0.0)
    gw1 = x.T @ dhidden
    gb1 = dhidden.sum(axis=0)
    return loss, probs, (gw1, gb1, gw2, gb2)


def gradient_check(model: MlpModel, x, y_idx, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Components whose analytic and numeric values differ by less than 1e-8
    absolute are treated as matching, which covers saturated points where
    both gradients are essentially zero.
    """
    if not 1e-6 <= epsilon <= 1e-4:
        raise DataError("epsilon must be in [1e-6, 1e-4]")
    x = np.asarray(x, dtype=np.float64)
    y_idx = np.asarray(y_idx, dtype=np.int64)
    params = [
        model.w1.astype(np.float64),
        model.b1.astype(np.float64),
        model.w2.astype(np.float64),
        model.b2.astype(np.float64),
    ]

    def loss_at(ps):
        return _loss_and_grads(*ps, x, y_idx, model.nonlinearity)[0]

    _, _, analytic = _loss_and_grads(*params, x, y_idx, model.nonlinearity)
    worst = 0.0
    for p_i, grad in enumerate(analytic):
        param = params[p_i]
        for flat in range(param.size):
            orig = param.flat[flat]
            param.flat[flat] = orig + epsilon
            up = loss_at(params)
            param.flat[flat] = orig - epsilon
            down = loss_at(params)
            param.flat[flat] = orig
            numeric = (up - down) / (2.0 * epsilon)
            ga = grad.flat[flat]
            diff = abs(ga - numeric)
            if diff <= 1e-8:
                continue
            worst = max(worst, diff / max(abs(ga), abs(numeric)))
    return worst


def _label_indices(pairs: Sequence[PairExample], label_order: Sequence[str]) -> np.ndarray:
    pos = {label: i for i, label in enumerate(label_order)}
    try:
        return np.array([pos[p.label] for p in pairs], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"label {exc.args[0]!r} outside label order {list(label_order)}")


def _pair_rows(pairs: Sequence[PairExample], store: EmbeddingStore):
    prem = store.rows([p.premise_id for p in pairs])
    hyp = store.rows([p.hypothesis_id for p in pairs])
    return prem, hyp


def _fused_block(store: EmbeddingStore, prem_rows, hyp_rows) -> np.ndarray:
    return fuse_batch(store.matrix[prem_rows], store.matrix[hyp_rows])


def predict_batch(
    model: MlpModel, pairs: Sequence[PairExample], store: EmbeddingStore
) -> list[str]:
    """Predicted labels for many pairs, evaluated in blocks."""
    if store.dim * 5 != model.d_in:
        raise DataError(
            f"store dim {store.dim} incompatible with model d_in {model.d_in}"
        )
    prem, hyp = _pair_rows(pairs, store)
    out: list[str] = []
    for start in range(0, len(pairs), EVAL_BLOCK):
        stop = start + EVAL_BLOCK
        probs = forward(model, _fused_block(store, prem[start:stop], hyp[start:stop]))
        for idx in probs.argmax(axis=1):
            out.append(model.label_order[idx])
    return out


def predict(
    model: MlpModel, premise_id: str, hypothesis_id: str, store: EmbeddingStore
) -> str:
    """Argmax label for one premise/hypothesis pair (ties break by label order)."""
    probs = forward(model, fuse(store.vector(premise_id), store.vector(hypothesis_id)))
    return model.label_order[int(np.argmax(probs))]


def train(
    pairs_train: Sequence[PairExample],
    pairs_dev: Sequence[PairExample],
    store: EmbeddingStore,
    config: TrainConfig = TrainConfig(),
    d_hidden: int = DEFAULT_HIDDEN,
    label_order: Sequence[str] = DEFAULT_LABELS,
    nonlinearity: str = "relu",
) -> tuple[MlpModel, TrainHistory]:
    """Minibatch Adam training with per-epoch dev evaluation.

    Returns the weights of the epoch with the highest dev accuracy (earliest
    epoch on ties) together with the full per-epoch history.  Deterministic
    under a fixed config seed.
    """
    if not pairs_train:
        raise DataError("empty training set")
    if not pairs_dev:
        raise DataError("empty dev set")
    label_order = tuple(label_order)
    d_in = store.dim * 5
    model = init_model(d_in, d_hidden, label_order, seed=config.seed,
                       nonlinearity=nonlinearity)

    prem_tr, hyp_tr = _pair_rows(pairs_train, store)
    y_tr = _label_indices(pairs_train, label_order)
    dev_gold = [p.label for p in pairs_dev]

    params = [
        model.w1.astype(np.float64),
        model.b1.astype(np.float64),
        model.w2.astype(np.float64),
        model.b2.astype(np.float64),
    ]
    adam_m = [np.zeros_like(p) for p in params]
    adam_v = [np.zeros_like(p) for p in params]
    step = 0

    rng = np.random.default_rng(config.seed + 1)
    n = len(pairs_train)
    history = TrainHistory()
    best_acc = -1.0
    best_params: Optional[list[np.ndarray]] = None

    def snapshot() -> MlpModel:
        return replace(
            model,
            w1=params[0].astype(np.float32),
            b1=params[1].astype(np.float32),
            w2=params[2].astype(np.float32),
            b2=params[3].astype(np.float32),
        )

    for _ in range(config.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            x = _fused_block(store, prem_tr[batch], hyp_tr[batch])
            y = y_tr[batch]
            loss, probs, grads = _loss_and_grads(*params, x, y, nonlinearity)
            loss_sum += loss * len(batch)
            correct += int((probs.argmax(axis=1) == y).sum())
            step += 1
            bias1 = 1.0 - config.beta1**step
            bias2 = 1.0 - config.beta2**step
            for p, m, v, g in zip(params, adam_m, adam_v, grads):
                m *= config.beta1
                m += (1.0 - config.beta1) * g
                v *= config.beta2
                v += (1.0 - config.beta2) * g * g
                p -= config.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + config.adam_eps)

        epoch_model = snapshot()
        dev_pred = predict_batch(epoch_model, pairs_dev, store)
        dev_report = metrics.evaluate(dev_gold, dev_pred, label_order)
        history.train_loss.append(loss_sum / n)
        history.train_acc.append(correct / n)
        history.dev_acc.append(dev_report.accuracy)
        history.dev_f1.append(dev_report.macro_f1)
        if dev_report.accuracy > best_acc:
            best_acc = dev_report.accuracy
            best_params = [p.copy() for p in params]
            history.best_epoch = len(history.dev_acc) - 1

    assert best_params is not None
    params = best_params
    return snapshot(), history


def save_model(model: MlpModel, path) -> None:
    """Write a checkpoint; ``load_model`` reproduces the model bit-exactly."""
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(
            struct.pack("<IIII", MODEL_VERSION, model.d_in, model.d_hidden, model.d_out)
        )
        for text in (model.nonlinearity, *model.label_order):
            raw = text.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        for arr in (model.w1, model.b1, model.w2, model.b2):
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_model(path) -> MlpModel:
    """Read a checkpoint written by ``save_model``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 20 or data[:4] != MODEL_MAGIC:
        raise DataError("not a model checkpoint (bad magic)")
    version, d_in, d_hidden, d_out = struct.unpack_from("<IIII", data, 4)
    if version != MODEL_VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    if min(d_in, d_hidden, d_out) < 1:
        raise DataError("invalid checkpoint dimensions")
    offset = 20
    texts = []
    for _ in range(1 + d_out):
        if len(data) < offset + 2:
            raise DataError("truncated checkpoint")
        (length,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if len(data) < offset + length:
            raise DataError("truncated checkpoint")
        texts.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    nonlinearity, labels = texts[0], tuple(texts[1:])
    shapes = [(d_in, d_hidden), (d_hidden,), (d_hidden, d_out), (d_out,)]
    arrays = []
    for shape in shapes:
        size = int(np.prod(shape))
        nbytes = size * 4
        if len(data) < offset + nbytes:
            raise DataError("truncated checkpoint")
        arrays.append(
            np.frombuffer(data, dtype="<f4", count=size, offset=offset)
            .reshape(shape)
            .copy()
        )
        offset += nbytes
    if offset != len(data):
        raise DataError(f"{len(data) - offset} trailing bytes in checkpoint")
    return MlpModel(
        w1=arrays[0], b1=arrays[1], w2=arrays[2], b2=arrays[3],
        label_order=labels, nonlinearity=nonlinearity,
    )
