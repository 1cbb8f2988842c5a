"""The dual-channel recurrent classifier.

One utterance is embedded twice (semantic and sentiment tables), each stream
runs through its own LSTM, the two final hidden states are concatenated
(semantic block first) and pushed through one fully connected hidden layer
into a 4-way softmax over (happy, sad, angry, others).

Forward and backward passes are hand-written in float64 numpy.  The backward
pass is exact backpropagation through time; its correctness is pinned by
finite-difference checks in the training module and the test suite.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from sslstm.embeddings import EmbeddingTable, lookup
from sslstm.labels import LABELS, N_CLASSES
from sslstm.text_norm import Token

CHANNELS = ("both", "semantic", "sentiment")
FC_ACTIVATIONS = ("relu", "tanh")

_GATES = ("i", "f", "o", "c")


class StaleCacheError(ValueError):
    """Raised when a forward cache does not fit the model it is replayed on."""


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Piecewise form avoids exp overflow for large negative inputs.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


@dataclass
class ModelConfig:
    channels: str = "both"
    sem_hidden: int = 128
    sent_hidden: int = 128
    fc_hidden: int = 128
    fc_activation: str = "relu"
    max_seq_len: int = 50
    train_embeddings: bool = False

    def __post_init__(self):
        if self.channels not in CHANNELS:
            raise ValueError(f"channels must be one of {CHANNELS}, got {self.channels!r}")
        if self.fc_activation not in FC_ACTIVATIONS:
            raise ValueError(f"fc_activation must be one of {FC_ACTIVATIONS}, got {self.fc_activation!r}")
        for name in ("sem_hidden", "sent_hidden", "fc_hidden", "max_seq_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def active_channels(self) -> tuple[str, ...]:
        if self.channels == "both":
            return ("semantic", "sentiment")
        return (self.channels,)


@dataclass
class LSTMParams:
    """Gate weights of one LSTM: W_* act on the input, U_* on the previous
    hidden state, b_* are biases; gates ordered (input, forget, output, cell)."""

    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_c: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.W_i.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W_i.shape[1]


@dataclass
class SSLSTMModel:
    semantic_table: EmbeddingTable
    sentiment_table: EmbeddingTable
    sem: LSTMParams
    sent: LSTMParams
    fc_W: np.ndarray
    fc_b: np.ndarray
    out_W: np.ndarray
    out_b: np.ndarray
    config: ModelConfig

    def param_tensors(self) -> dict[str, np.ndarray]:
        """Live views of every trainable tensor, in checkpoint order."""
        out: dict[str, np.ndarray] = {}
        for prefix, params in (("sem", self.sem), ("sent", self.sent)):
            for kind in ("W", "U", "b"):
                for gate in _GATES:
                    name = f"{kind}_{gate}"
                    out[f"{prefix}_{name}"] = getattr(params, name)
        out["fc_W"] = self.fc_W
        out["fc_b"] = self.fc_b
        out["out_W"] = self.out_W
        out["out_b"] = self.out_b
        return out

    def concat_width(self) -> int:
        width = 0
        if "semantic" in self.config.active_channels():
            width += self.sem.hidden_dim
        if "sentiment" in self.config.active_channels():
            width += self.sent.hidden_dim
        return width


@dataclass
class LSTMCache:
    """Per-step activations of one channel, kept for backpropagation."""

    xs: np.ndarray  # (T, input_dim)
    i: np.ndarray   # (T, hidden) gate outputs
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray   # candidate cell values, tanh
    c: np.ndarray   # cell states
    h: np.ndarray   # hidden states


@dataclass
class ForwardCache:
    tokens: list[str]
    sem: LSTMCache | None
    sent: LSTMCache | None
    concat: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


@dataclass
class Gradients:
    """Loss gradients keyed like :meth:`SSLSTMModel.param_tensors`.

    ``sem_embed``/``sent_embed`` map token -> input-vector gradient and are
    None unless the model is configured to fine-tune embeddings.
    """

    tensors: dict[str, np.ndarray]
    sem_embed: dict[str, np.ndarray] | None = None
    sent_embed: dict[str, np.ndarray] | None = None


def _glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def _init_lstm(rng: np.random.Generator, input_dim: int, hidden_dim: int) -> LSTMParams:
    kw = {}
    for gate in _GATES:
        kw[f"W_{gate}"] = _glorot_uniform(rng, hidden_dim, input_dim)
    for gate in _GATES:
        kw[f"U_{gate}"] = _glorot_uniform(rng, hidden_dim, hidden_dim)
    for gate in _GATES:
        # Forget gate starts open so early training can carry state.
        kw[f"b_{gate}"] = np.ones(hidden_dim) if gate == "f" else np.zeros(hidden_dim)
    return LSTMParams(**kw)


def init_model(
    config: ModelConfig,
    semantic_table: EmbeddingTable,
    sentiment_table: EmbeddingTable,
    seed: int = 0,
) -> SSLSTMModel:
    """Fresh model with symmetric-uniform (fan-in + fan-out scaled) weights,
    zero biases except the forget-gate bias at 1.  Deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    sem = _init_lstm(rng, semantic_table.dim, config.sem_hidden)
    sent = _init_lstm(rng, sentiment_table.dim, config.sent_hidden)
    width = 0
    if "semantic" in config.active_channels():
        width += config.sem_hidden
    if "sentiment" in config.active_channels():
        width += config.sent_hidden
    fc_W = _glorot_uniform(rng, config.fc_hidden, width)
    fc_b = np.zeros(config.fc_hidden)
    out_W = _glorot_uniform(rng, N_CLASSES, config.fc_hidden)
    out_b = np.zeros(N_CLASSES)
    return SSLSTMModel(
        semantic_table=semantic_table,
        sentiment_table=sentiment_table,
        sem=sem,
        sent=sent,
        fc_W=fc_W,
        fc_b=fc_b,
        out_W=out_W,
        out_b=out_b,
        config=config,
    )


def clone_model(model: SSLSTMModel) -> SSLSTMModel:
    """Deep copy of all trainable state.  Embedding tables are shared unless
    the model fine-tunes them, in which case their vectors are copied too."""
    new = copy.copy(model)
    new.sem = LSTMParams(**{k: v.copy() for k, v in vars(model.sem).items()})
    new.sent = LSTMParams(**{k: v.copy() for k, v in vars(model.sent).items()})
    new.fc_W = model.fc_W.copy()
    new.fc_b = model.fc_b.copy()
    new.out_W = model.out_W.copy()
    new.out_b = model.out_b.copy()
    new.config = copy.copy(model.config)
    if model.config.train_embeddings:
        for attr in ("semantic_table", "sentiment_table"):
            table = getattr(model, attr)
            fresh = EmbeddingTable(
                dim=table.dim,
                vectors={t: v.copy() for t, v in table.vectors.items()},
                name=table.name,
                source_sha256=table.source_sha256,
            )
            setattr(new, attr, fresh)
    return new


def lstm_forward(params: LSTMParams, inputs) -> tuple[np.ndarray, np.ndarray, LSTMCache]:
    """Run the standard LSTM recurrence from zero initial state.

    Returns the hidden-state sequence, the final hidden state (zeros for an
    empty input), and the cache needed for the backward pass.
    """
    inputs = [np.asarray(x, dtype=np.float64) for x in inputs]
    h_dim = params.hidden_dim
    for t, x in enumerate(inputs):
        if x.shape != (params.input_dim,):
            raise ValueError(
                f"input {t} has shape {x.shape}, expected ({params.input_dim},)"
            )
    T = len(inputs)
    xs = np.zeros((T, params.input_dim))
    gates = {name: np.zeros((T, h_dim)) for name in ("i", "f", "o", "g", "c", "h")}
    h_prev = np.zeros(h_dim)
    c_prev = np.zeros(h_dim)
    for t, x in enumerate(inputs):
        i_t = _sigmoid(params.W_i @ x + params.U_i @ h_prev + params.b_i)
        f_t = _sigmoid(params.W_f @ x + params.U_f @ h_prev + params.b_f)
        o_t = _sigmoid(params.W_o @ x + params.U_o @ h_prev + params.b_o)
        g_t = np.tanh(params.W_c @ x + params.U_c @ h_prev + params.b_c)
        c_t = f_t * c_prev + i_t * g_t
        h_t = o_t * np.tanh(c_t)
        xs[t] = x
        for name, val in (("i", i_t), ("f", f_t), ("o", o_t), ("g", g_t), ("c", c_t), ("h", h_t)):
            gates[name][t] = val
        h_prev, c_prev = h_t, c_t
    cache = LSTMCache(xs=xs, **{k: gates[k] for k in ("i", "f", "o", "g", "c", "h")})
    return gates["h"], h_prev, cache


def _lstm_backward(
    params: LSTMParams, cache: LSTMCache, dh_final: np.ndarray, want_dx: bool
) -> tuple[dict[str, np.ndarray], np.ndarray | None]:
    """BPTT for one channel given the loss gradient at the final hidden state."""
    T = cache.xs.shape[0]
    grads = {
        f"{kind}_{gate}": np.zeros_like(getattr(params, f"{kind}_{gate}"))
        for kind in ("W", "U", "b")
        for gate in _GATES
    }
    dxs = np.zeros_like(cache.xs) if want_dx else None
    dh = dh_final.copy()
    dc = np.zeros(params.hidden_dim)
    for t in range(T - 1, -1, -1):
        i_t, f_t, o_t, g_t, c_t = cache.i[t], cache.f[t], cache.o[t], cache.g[t], cache.c[t]
        c_prev = cache.c[t - 1] if t > 0 else np.zeros(params.hidden_dim)
        h_prev = cache.h[t - 1] if t > 0 else np.zeros(params.hidden_dim)
        tanh_c = np.tanh(c_t)
        do = dh * tanh_c
        dc = dc + dh * o_t * (1.0 - tanh_c**2)
        di = dc * g_t
        dg = dc * i_t
        df = dc * c_prev
        dc_prev = dc * f_t
        # Through the gate nonlinearities to the pre-activations.
        da = {
            "i": di * i_t * (1.0 - i_t),
            "f": df * f_t * (1.0 - f_t),
            "o": do * o_t * (1.0 - o_t),
            "c": dg * (1.0 - g_t**2),
        }
        dh_prev = np.zeros(params.hidden_dim)
        x_t = cache.xs[t]
        for gate in _GATES:
            d = da[gate]
            grads[f"W_{gate}"] += np.outer(d, x_t)
            grads[f"U_{gate}"] += np.outer(d, h_prev)
            grads[f"b_{gate}"] += d
            dh_prev += getattr(params, f"U_{gate}").T @ d
            if want_dx:
                dxs[t] += getattr(params, f"W_{gate}").T @ d
        dh = dh_prev
        dc = dc_prev
    return grads, dxs


def _embed(model: SSLSTMModel, tokens) -> list[str]:
    out = []
    for tok in tokens[: model.config.max_seq_len]:
        out.append(tok.surface if isinstance(tok, Token) else tok)
    return out


def ss_forward(model: SSLSTMModel, tokens) -> tuple[np.ndarray, ForwardCache]:
    """Class probabilities for one token sequence, plus the backward cache."""
    surfaces = _embed(model, tokens)
    active = model.config.active_channels()
    sem_cache = sent_cache = None
    finals = []
    if "semantic" in active:
        xs = [lookup(model.semantic_table, s) for s in surfaces]
        _, h_final, sem_cache = lstm_forward(model.sem, xs)
        finals.append(h_final)
    if "sentiment" in active:
        xs = [lookup(model.sentiment_table, s) for s in surfaces]
        _, h_final, sent_cache = lstm_forward(model.sent, xs)
        finals.append(h_final)
    concat = np.concatenate(finals)
    z1 = model.fc_W @ concat + model.fc_b
    a1 = np.maximum(z1, 0.0) if model.config.fc_activation == "relu" else np.tanh(z1)
    logits = model.out_W @ a1 + model.out_b
    probs = softmax(logits)
    cache = ForwardCache(
        tokens=surfaces,
        sem=sem_cache,
        sent=sent_cache,
        concat=concat,
        z1=z1,
        a1=a1,
        logits=logits,
        probs=probs,
    )
    return probs, cache


def _check_cache(model: SSLSTMModel, cache: ForwardCache) -> None:
    if cache.concat.shape != (model.concat_width(),):
        raise StaleCacheError(
            f"cache concat width {cache.concat.shape[0]} does not match model {model.concat_width()}"
        )
    if cache.z1.shape != (model.fc_W.shape[0],):
        raise StaleCacheError("cache FC width does not match model")
    active = model.config.active_channels()
    for name, ch_cache, params in (
        ("semantic", cache.sem, model.sem),
        ("sentiment", cache.sent, model.sent),
    ):
        if name in active:
            if ch_cache is None:
                raise StaleCacheError(f"cache is missing the {name} channel")
            if ch_cache.xs.shape[1:] != (params.input_dim,) or ch_cache.h.shape[1:] != (params.hidden_dim,):
                raise StaleCacheError(f"cache {name} channel shapes do not match model")


def ss_backward(model: SSLSTMModel, cache: ForwardCache, target: int) -> Gradients:
    """Exact cross-entropy gradients for every trainable parameter."""
    _check_cache(model, cache)
    target = int(target)
    if not 0 <= target < N_CLASSES:
        raise ValueError(f"target class out of range: {target}")

    dlogits = cache.probs.copy()
    dlogits[target] -= 1.0
    d_out_W = np.outer(dlogits, cache.a1)
    d_out_b = dlogits.copy()
    da1 = model.out_W.T @ dlogits
    if model.config.fc_activation == "relu":
        dz1 = da1 * (cache.z1 > 0.0)
    else:
        dz1 = da1 * (1.0 - cache.a1**2)
    d_fc_W = np.outer(dz1, cache.concat)
    d_fc_b = dz1.copy()
    dconcat = model.fc_W.T @ dz1

    tensors: dict[str, np.ndarray] = {}
    want_dx = model.config.train_embeddings
    embed_grads: dict[str, dict[str, np.ndarray]] = {}
    offset = 0
    active = model.config.active_channels()
    for prefix, name, params, ch_cache, table in (
        ("sem", "semantic", model.sem, cache.sem, model.semantic_table),
        ("sent", "sentiment", model.sent, cache.sent, model.sentiment_table),
    ):
        if name in active:
            dh_final = dconcat[offset : offset + params.hidden_dim]
            offset += params.hidden_dim
            ch_grads, dxs = _lstm_backward(params, ch_cache, dh_final, want_dx)
            if want_dx:
                acc: dict[str, np.ndarray] = {}
                for t, surface in enumerate(cache.tokens):
                    if surface in table.vectors:
                        acc[surface] = acc.get(surface, 0.0) + dxs[t]
                embed_grads[prefix] = acc
        else:
            ch_grads = {
                f"{kind}_{gate}": np.zeros_like(getattr(params, f"{kind}_{gate}"))
                for kind in ("W", "U", "b")
                for gate in _GATES
            }
        for key, val in ch_grads.items():
            tensors[f"{prefix}_{key}"] = val
    tensors["fc_W"] = d_fc_W
    tensors["fc_b"] = d_fc_b
    tensors["out_W"] = d_out_W
    tensors["out_b"] = d_out_b
    return Gradients(
        tensors=tensors,
        sem_embed=embed_grads.get("sem") if want_dx else None,
        sent_embed=embed_grads.get("sent") if want_dx else None,
    )


def predict(model: SSLSTMModel, tokens) -> str:
    """Most probable label; ties break in class order (happy first)."""
    probs, _ = ss_forward(model, tokens)
    return LABELS[int(np.argmax(probs))]
