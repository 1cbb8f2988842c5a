"""Training loop, batching, splitting, gradient checking, checkpoints.

Training follows plain SGD on cross-entropy: shuffle each epoch, fill
batches by a token budget (total token count across member utterances, not
utterance count), apply the mean batch gradient, early-stop on validation
macro-F1 and keep the best-epoch parameters.

Checkpoints are versioned UTF-8 text: a magic line, ``meta key=value``
provenance (dimensions, channel setup, content hashes), then one
``tensor NAME ROWS COLS`` block per parameter, closed by ``end``.  The
weight tables of the embedding channels are not serialized — checkpoints
store their dimensions and source hashes, and loading takes the tables as
arguments.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sslstm.embeddings import EmbeddingTable, empty_table
from sslstm.labels import LABELS, N_CLASSES, label_index
from sslstm.metrics import confusion, macro_f1
from sslstm.neural import (
    CHANNELS,
    Gradients,
    ModelConfig,
    SSLSTMModel,
    clone_model,
    init_model,
    predict,
    ss_backward,
    ss_forward,
)
from sslstm.text_norm import default_lexicon_sha256

CHECKPOINT_MAGIC = "SSLSTM-CKPT"
CHECKPOINT_VERSION = 1

# Above this many parameters, gradient_check verifies a seeded random
# subsample of this many coordinates instead of every coordinate.
GRADCHECK_EXHAUSTIVE_LIMIT = 10_000
GRADCHECK_SAMPLE = 2_000


class CheckpointError(ValueError):
    """Base class for malformed checkpoint files."""


class UnknownVersionError(CheckpointError):
    """Header is missing, malformed, or names an unsupported version."""


class TruncatedCheckpointError(CheckpointError):
    """File ends or loses structure before the closing ``end`` line."""


class ShapeMismatchError(CheckpointError):
    """Stored tensors do not fit the dimensions the file declares."""


@dataclass
class TrainConfig:
    learning_rate: float = 0.005
    token_budget: int = 4000
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0
    channels: str = "both"
    class_weights: tuple[float, float, float, float] | None = None
    # False/0 for the serial deterministic path; True for the default worker
    # pool, or an explicit worker count.  Results are identical either way.
    parallel: bool | int = False
    # Optional convergence target: stop once training accuracy reaches this
    # fraction.  Used by overfitting harnesses; None disables it.
    stop_when_train_accuracy: float | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.token_budget <= 0:
            raise ValueError("token_budget must be positive")
        if self.max_epochs <= 0:
            raise ValueError("max_epochs must be positive")
        if self.patience < 0:
            raise ValueError("patience must be non-negative")
        if self.channels not in CHANNELS:
            raise ValueError(f"channels must be one of {CHANNELS}")
        if self.class_weights is not None and len(self.class_weights) != N_CLASSES:
            raise ValueError(f"class_weights needs {N_CLASSES} entries")
        if self.parallel is not True and self.parallel is not False:
            if not isinstance(self.parallel, int) or self.parallel < 0:
                raise ValueError("parallel must be a boolean or a worker count >= 0")

    def workers(self) -> int:
        """Worker-pool size implied by ``parallel``; 0 means serial."""
        if self.parallel is True:
            return 4
        return int(self.parallel)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_macro_f1: float
    train_accuracy: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1

    def best_val_macro_f1(self) -> float:
        return max((r.val_macro_f1 for r in self.records), default=0.0)


def cross_entropy(probabilities, target) -> float:
    """Negative log-probability of the target class."""
    idx = label_index(target)
    return float(-np.log(np.asarray(probabilities)[idx]))


def utterance_length(conv, max_len: int | None = None) -> int:
    """Token count of one conversation's final turn, after truncation when a
    maximum sequence length applies."""
    n = len(conv.tokens)
    return min(n, max_len) if max_len is not None else n


def make_batches(dataset, token_budget: int, seed: int | None, max_len: int | None = None):
    """Shuffle, then greedily pack utterances into batches by token count.

    A batch closes as soon as the next utterance would push its token total
    over the budget; an utterance longer than the whole budget travels
    alone.  ``seed=None`` skips the shuffle and packs in the given order.
    """
    if token_budget <= 0:
        raise ValueError("token_budget must be positive")
    items = list(dataset)
    if not items:
        return []
    if seed is None:
        order = range(len(items))
    else:
        order = np.random.default_rng(seed).permutation(len(items))
    batches: list[list] = []
    current: list = []
    used = 0
    for idx in order:
        conv = items[idx]
        n = utterance_length(conv, max_len)
        if current and used + n > token_budget:
            batches.append(current)
            current = []
            used = 0
        current.append(conv)
        used += n
    if current:
        batches.append(current)
    return batches


def sgd_step(model: SSLSTMModel, gradients: Gradients, learning_rate: float) -> SSLSTMModel:
    """In-place update w <- w - lr*g for every parameter; plain SGD, no
    momentum or weight decay.  All shapes are validated before any write."""
    tensors = model.param_tensors()
    if set(gradients.tensors) != set(tensors):
        raise ValueError("gradient tensor names do not match the model")
    for name, grad in gradients.tensors.items():
        if grad.shape != tensors[name].shape:
            raise ValueError(
                f"gradient shape mismatch for {name}: {grad.shape} vs {tensors[name].shape}"
            )
    for name, grad in gradients.tensors.items():
        tensors[name] -= learning_rate * grad
    if model.config.train_embeddings:
        for table, embed in (
            (model.semantic_table, gradients.sem_embed),
            (model.sentiment_table, gradients.sent_embed),
        ):
            if embed:
                for token, grad in embed.items():
                    table.vectors[token] -= learning_rate * grad
    return model


def split_dataset(dataset, ratio: float, seed: int):
    """Stratified split: per label, floor(ratio*n) examples go to train and
    the rest to validation.  Original order is preserved within each side."""
    items = list(dataset)
    if not items:
        raise ValueError("dataset is empty")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    by_label: dict[str, list[int]] = {}
    for i, conv in enumerate(items):
        if conv.label is None:
            raise ValueError(f"conversation {conv.id} has no label")
        by_label.setdefault(conv.label, []).append(i)
    rng = np.random.default_rng(seed)
    train_idx: set[int] = set()
    for label in LABELS:
        idxs = by_label.get(label, [])
        if not idxs:
            continue
        perm = rng.permutation(len(idxs))
        # Small slack keeps exact products like 0.7*10 from flooring down.
        n_train = math.floor(ratio * len(idxs) + 1e-9)
        train_idx.update(idxs[p] for p in perm[:n_train])
    train = [items[i] for i in range(len(items)) if i in train_idx]
    validation = [items[i] for i in range(len(items)) if i not in train_idx]
    return train, validation


def _example_gradient(model, conv, weights):
    probs, cache = ss_forward(model, conv.tokens)
    target = label_index(conv.label)
    loss = cross_entropy(probs, target)
    grads = ss_backward(model, cache, target)
    if weights is not None:
        w = float(weights[target])
        loss *= w
        _scale_gradients(grads, w)
    return loss, grads


def _scale_gradients(grads: Gradients, factor: float) -> None:
    for tensor in grads.tensors.values():
        tensor *= factor
    for embed in (grads.sem_embed, grads.sent_embed):
        if embed:
            for token in embed:
                embed[token] = embed[token] * factor


def _accumulate_gradients(total: Gradients, grads: Gradients) -> None:
    for name, tensor in grads.tensors.items():
        total.tensors[name] += tensor
    for attr in ("sem_embed", "sent_embed"):
        src = getattr(grads, attr)
        if not src:
            continue
        dst = getattr(total, attr)
        if dst is None:
            dst = {}
            setattr(total, attr, dst)
        for token, grad in src.items():
            if token in dst:
                dst[token] = dst[token] + grad
            else:
                dst[token] = grad.copy()


def _accuracy(model, dataset) -> float:
    correct = sum(1 for c in dataset if predict(model, c.tokens) == c.label)
    return correct / len(dataset)


def _val_macro_f1(model, dataset) -> float:
    preds = [predict(model, c.tokens) for c in dataset]
    golds = [c.label for c in dataset]
    return macro_f1(confusion(preds, golds))


def train(model: SSLSTMModel, train_set, validation_set, config: TrainConfig):
    """SGD training loop; returns (best model, history).

    Per epoch: re-batch with an epoch-dependent seed, apply the mean
    gradient of each batch, then score validation macro-F1.  The parameters
    of the best validation epoch are kept; training stops after ``patience``
    epochs without improvement (patience 0 stops at the first) or at
    ``max_epochs``.  With ``parallel`` set, per-example gradients of a batch
    are computed concurrently but summed in batch order, so results match
    serial mode.
    """
    train_set = list(train_set)
    validation_set = list(validation_set)
    if not train_set:
        raise ValueError("training set is empty")
    if not validation_set:
        raise ValueError("validation set is empty")
    if config.channels != model.config.channels:
        raise ValueError(
            f"config channels {config.channels!r} do not match model {model.config.channels!r}"
        )
    weights = None
    if config.class_weights is not None:
        weights = np.asarray(config.class_weights, dtype=np.float64)

    best = clone_model(model)
    best_f1 = -np.inf
    best_epoch = -1
    stale = 0
    records: list[EpochRecord] = []
    workers = config.workers()
    executor = ThreadPoolExecutor(max_workers=workers) if workers else None
    try:
        for epoch in range(config.max_epochs):
            batches = make_batches(
                train_set,
                config.token_budget,
                seed=config.seed + epoch,
                max_len=model.config.max_seq_len,
            )
            loss_total = 0.0
            for batch in batches:
                if executor is not None:
                    results = list(
                        executor.map(lambda c: _example_gradient(model, c, weights), batch)
                    )
                else:
                    results = [_example_gradient(model, c, weights) for c in batch]
                loss, total = results[0]
                loss_total += loss
                for loss, grads in results[1:]:
                    loss_total += loss
                    _accumulate_gradients(total, grads)
                _scale_gradients(total, 1.0 / len(batch))
                sgd_step(model, total, config.learning_rate)
            train_loss = loss_total / len(train_set)
            val_f1 = _val_macro_f1(model, validation_set)
            train_acc = _accuracy(model, train_set)
            records.append(EpochRecord(epoch, train_loss, val_f1, train_acc))
            if val_f1 > best_f1:
                best_f1 = val_f1
                best_epoch = epoch
                best = clone_model(model)
                stale = 0
            else:
                stale += 1
            if (
                config.stop_when_train_accuracy is not None
                and train_acc >= config.stop_when_train_accuracy
            ):
                break
            if stale >= max(config.patience, 1):
                break
    finally:
        if executor is not None:
            executor.shutdown()
    return best, TrainHistory(records=records, best_epoch=best_epoch)


def _example_parts(example):
    tokens = getattr(example, "tokens", None)
    if tokens is not None:
        return tokens, label_index(example.label)
    tokens, target = example
    return tokens, label_index(target)


def gradient_check(model: SSLSTMModel, example, epsilon: float = 1e-4) -> float:
    """Max relative error between backprop and central finite differences.

    ``example`` is a labeled conversation or a ``(tokens, target)`` pair.
    Every parameter coordinate is checked (a seeded random subsample of
    2,000 above 10,000 parameters); the relative error denominator is
    max(|analytic|, |numeric|, 1e-8).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    tokens, target = _example_parts(example)
    _, cache = ss_forward(model, tokens)
    analytic = ss_backward(model, cache, target).tensors
    tensors = model.param_tensors()
    coords = [(name, i) for name, t in tensors.items() for i in range(t.size)]
    if len(coords) > GRADCHECK_EXHAUSTIVE_LIMIT:
        rng = np.random.default_rng(0)
        chosen = rng.choice(len(coords), size=GRADCHECK_SAMPLE, replace=False)
        coords = [coords[int(i)] for i in chosen]
    worst = 0.0
    for name, i in coords:
        flat = tensors[name].reshape(-1)
        orig = flat[i]
        flat[i] = orig + epsilon
        up = cross_entropy(ss_forward(model, tokens)[0], target)
        flat[i] = orig - epsilon
        down = cross_entropy(ss_forward(model, tokens)[0], target)
        flat[i] = orig
        numeric = (up - down) / (2.0 * epsilon)
        a = float(analytic[name].reshape(-1)[i])
        rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        worst = max(worst, rel)
    return worst


@contextmanager
def _open_write(sink):
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fh:
            yield fh
    else:
        yield sink


@contextmanager
def _open_read(source):
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield fh
    elif isinstance(source, (io.RawIOBase, io.BufferedIOBase)):
        yield io.TextIOWrapper(source, encoding="utf-8")
    else:
        yield source


def write_container(sink, meta: dict[str, str], tensors: dict[str, np.ndarray]) -> None:
    """Serialize meta lines and tensor blocks in the versioned text format.
    1-D tensors are stored as single-row matrices."""
    with _open_write(sink) as fh:
        fh.write(f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n")
        for key, value in meta.items():
            value = str(value)
            if " " in key or "=" in key or "\n" in key:
                raise ValueError(f"illegal meta key {key!r}")
            if "\n" in value:
                raise ValueError(f"meta value for {key!r} contains a newline")
            fh.write(f"meta {key}={value}\n")
        for name, arr in tensors.items():
            mat = np.atleast_2d(np.asarray(arr, dtype=np.float64))
            fh.write(f"tensor {name} {mat.shape[0]} {mat.shape[1]}\n")
            for row in mat:
                fh.write(" ".join(f"{v:.9g}" for v in row) + "\n")
        fh.write("end\n")


def read_container(source) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Parse the checkpoint container; inverse of :func:`write_container`.

    Raises :class:`UnknownVersionError` on a bad header and
    :class:`TruncatedCheckpointError` when the file loses structure or ends
    before ``end``.  Tensors come back as 2-D float64 arrays.
    """
    with _open_read(source) as fh:
        lines = fh.read().split("\n")
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            line = lines[pos].rstrip("\r")
            pos += 1
            if line:
                return line
        return None

    header = next_line()
    if header is None:
        raise UnknownVersionError("empty file, expected checkpoint header")
    parts = header.split()
    if len(parts) != 2 or parts[0] != CHECKPOINT_MAGIC:
        raise UnknownVersionError(f"not a checkpoint header: {header!r}")
    if parts[1] != str(CHECKPOINT_VERSION):
        raise UnknownVersionError(f"unsupported checkpoint version {parts[1]!r}")

    meta: dict[str, str] = {}
    tensors: dict[str, np.ndarray] = {}
    while True:
        line = next_line()
        if line is None:
            raise TruncatedCheckpointError("file ends before the 'end' line")
        if line == "end":
            return meta, tensors
        if line.startswith("meta "):
            body = line[len("meta "):]
            key, sep, value = body.partition("=")
            if not sep or not key:
                raise CheckpointError(f"malformed meta line: {line!r}")
            meta[key] = value
            continue
        if line.startswith("tensor "):
            fields = line.split()
            if len(fields) != 4:
                raise TruncatedCheckpointError(f"malformed tensor header: {line!r}")
            name = fields[1]
            if name in tensors:
                raise CheckpointError(f"duplicate tensor {name!r}")
            try:
                rows, cols = int(fields[2]), int(fields[3])
            except ValueError:
                raise TruncatedCheckpointError(
                    f"malformed tensor dimensions: {line!r}"
                ) from None
            mat = np.zeros((rows, cols))
            for r in range(rows):
                row_line = next_line()
                if row_line is None or row_line.startswith(("tensor ", "meta ")) or row_line == "end":
                    raise TruncatedCheckpointError(
                        f"tensor {name!r} is missing rows ({r} of {rows} read)"
                    )
                values = row_line.split()
                if len(values) != cols:
                    raise TruncatedCheckpointError(
                        f"tensor {name!r} row {r} has {len(values)} values, expected {cols}"
                    )
                try:
                    mat[r] = [float(v) for v in values]
                except ValueError:
                    raise TruncatedCheckpointError(
                        f"tensor {name!r} row {r} has non-numeric values"
                    ) from None
            if not np.all(np.isfinite(mat)):
                raise CheckpointError(f"tensor {name!r} contains non-finite values")
            tensors[name] = mat
            continue
        raise CheckpointError(f"unrecognized checkpoint line: {line!r}")


def save_checkpoint(model: SSLSTMModel, config: TrainConfig | None, sink) -> None:
    """Write the model's parameters plus provenance meta to ``sink``.

    Embedding vectors are not stored; their dimensions and source hashes
    are, so a load can verify it was handed the right tables.
    """
    cfg = model.config
    meta = {
        "model": "sslstm",
        "channels": cfg.channels,
        "fc_activation": cfg.fc_activation,
        "sem_hidden": cfg.sem_hidden,
        "sent_hidden": cfg.sent_hidden,
        "fc_hidden": cfg.fc_hidden,
        "max_seq_len": cfg.max_seq_len,
        "train_embeddings": int(cfg.train_embeddings),
        "sem_dim": model.semantic_table.dim,
        "sent_dim": model.sentiment_table.dim,
        "sem_table_sha256": model.semantic_table.source_sha256 or "-",
        "sent_table_sha256": model.sentiment_table.source_sha256 or "-",
        "lexicon_sha256": default_lexicon_sha256(),
    }
    if config is not None:
        meta["learning_rate"] = repr(config.learning_rate)
        meta["token_budget"] = config.token_budget
        meta["seed"] = config.seed
    write_container(sink, meta, model.param_tensors())


def _require_meta(meta: dict[str, str], key: str) -> str:
    if key not in meta:
        raise CheckpointError(f"checkpoint is missing meta key {key!r}")
    return meta[key]


def _check_table(table: EmbeddingTable | None, dim: int, stored_hash: str, role: str):
    if table is None:
        return empty_table(dim, name=role)
    if table.dim != dim:
        raise ShapeMismatchError(
            f"{role} table has dimension {table.dim}, checkpoint expects {dim}"
        )
    if stored_hash not in ("", "-") and table.source_sha256 and table.source_sha256 != stored_hash:
        raise CheckpointError(
            f"{role} table content hash does not match the checkpoint "
            f"({table.source_sha256[:12]} vs {stored_hash[:12]})"
        )
    return table


def load_checkpoint(
    source,
    semantic_table: EmbeddingTable | None = None,
    sentiment_table: EmbeddingTable | None = None,
) -> SSLSTMModel:
    """Rebuild a model from a checkpoint plus its embedding tables.

    Tables omitted here come back empty (every token out-of-vocabulary), so
    predictions then reflect only the stored weights.
    """
    meta, stored = read_container(source)
    if meta.get("model", "sslstm") != "sslstm":
        raise CheckpointError(f"not a classifier checkpoint (model={meta['model']!r})")
    try:
        config = ModelConfig(
            channels=_require_meta(meta, "channels"),
            sem_hidden=int(_require_meta(meta, "sem_hidden")),
            sent_hidden=int(_require_meta(meta, "sent_hidden")),
            fc_hidden=int(_require_meta(meta, "fc_hidden")),
            fc_activation=_require_meta(meta, "fc_activation"),
            max_seq_len=int(_require_meta(meta, "max_seq_len")),
            train_embeddings=bool(int(meta.get("train_embeddings", "0"))),
        )
        sem_dim = int(_require_meta(meta, "sem_dim"))
        sent_dim = int(_require_meta(meta, "sent_dim"))
    except ValueError as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"invalid checkpoint meta: {exc}") from None
    semantic_table = _check_table(
        semantic_table, sem_dim, meta.get("sem_table_sha256", "-"), "semantic"
    )
    sentiment_table = _check_table(
        sentiment_table, sent_dim, meta.get("sent_table_sha256", "-"), "sentiment"
    )
    model = init_model(config, semantic_table, sentiment_table, seed=0)
    expected = model.param_tensors()
    missing = set(expected) - set(stored)
    if missing:
        raise TruncatedCheckpointError(
            f"checkpoint is missing tensors: {', '.join(sorted(missing))}"
        )
    extra = set(stored) - set(expected)
    if extra:
        raise ShapeMismatchError(
            f"checkpoint has unexpected tensors: {', '.join(sorted(extra))}"
        )
    for name, target in expected.items():
        mat = stored[name]
        want = target.shape if target.ndim == 2 else (1, target.shape[0])
        if mat.shape != want:
            raise ShapeMismatchError(
                f"tensor {name!r} has shape {mat.shape}, expected {want}"
            )
        target[:] = mat if target.ndim == 2 else mat[0]
    return model
