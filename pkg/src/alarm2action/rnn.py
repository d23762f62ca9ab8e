"""From-scratch recurrent classifier on float64 numpy arrays.

Embedding lookup, a single LSTM (or BiLSTM) layer with output mode
"last", a dense softmax head, exact backpropagation through time,
global-norm gradient clipping and Adam. Gate order throughout is
input i, forget f, cell-candidate g, output o, packed row-wise into
4*hidden blocks:

    i = sigmoid(Wi x + Ui h + bi)      f = sigmoid(Wf x + Uf h + bf)
    g = tanh  (Wg x + Ug h + bg)       o = sigmoid(Wo x + Uo h + bo)
    c_t = f * c_{t-1} + i * g          h_t = o * tanh(c_t)

The bidirectional variant runs a second cell over the reversed sequence
and classifies on [h_fwd_last, h_bwd_last].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CacheMismatch,
    IndexOutOfVocab,
    LabelOutOfRange,
    NonFiniteGradient,
    ShapeMismatch,
)

PROB_FLOOR = 1e-12
WEIGHT_INIT_SCALE = 0.08
FORGET_BIAS_INIT = 1.0

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    num_classes: int
    embed_dim: int = 300
    hidden_dim: int = 300
    bidirectional: bool = False
    seq_len: int = 75

    def __post_init__(self):
        for name in ("vocab_size", "embed_dim", "hidden_dim", "seq_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")

    @property
    def feature_dim(self) -> int:
        return self.hidden_dim * (2 if self.bidirectional else 1)

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "num_classes": self.num_classes,
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "bidirectional": self.bidirectional,
            "seq_len": self.seq_len,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class CellWeights:
    w_x: np.ndarray   # [4H, E]
    w_h: np.ndarray   # [4H, H]
    bias: np.ndarray  # [4H]


@dataclass
class ModelParams:
    embedding: np.ndarray               # [V, E]; row 0 (pad) pinned to zero
    forward_cell: CellWeights
    backward_cell: CellWeights | None
    dense_w: np.ndarray                 # [C, feature_dim]
    dense_b: np.ndarray                 # [C]

    def named_tensors(self):
        yield "embedding", self.embedding
        yield "fwd.w_x", self.forward_cell.w_x
        yield "fwd.w_h", self.forward_cell.w_h
        yield "fwd.bias", self.forward_cell.bias
        if self.backward_cell is not None:
            yield "bwd.w_x", self.backward_cell.w_x
            yield "bwd.w_h", self.backward_cell.w_h
            yield "bwd.bias", self.backward_cell.bias
        yield "dense_w", self.dense_w
        yield "dense_b", self.dense_b

    def all_finite(self) -> bool:
        return all(np.isfinite(arr).all() for _, arr in self.named_tensors())


# Gradients share the ModelParams layout, one array per parameter tensor.
Gradients = ModelParams


def tree_map(fn, *params: ModelParams) -> ModelParams:
    """Apply fn elementwise over matching tensors of one or more params."""

    def cell(getter):
        cells = [getter(p) for p in params]
        return CellWeights(
            w_x=fn(*(c.w_x for c in cells)),
            w_h=fn(*(c.w_h for c in cells)),
            bias=fn(*(c.bias for c in cells)),
        )

    bwd = None
    if params[0].backward_cell is not None:
        bwd = cell(lambda p: p.backward_cell)
    return ModelParams(
        embedding=fn(*(p.embedding for p in params)),
        forward_cell=cell(lambda p: p.forward_cell),
        backward_cell=bwd,
        dense_w=fn(*(p.dense_w for p in params)),
        dense_b=fn(*(p.dense_b for p in params)),
    )


def zeros_like_params(params: ModelParams) -> ModelParams:
    return tree_map(np.zeros_like, params)


def copy_params(params: ModelParams) -> ModelParams:
    return tree_map(np.copy, params)


def init_params(
    cfg: ModelConfig,
    rng: np.random.Generator,
    embedding: np.ndarray | None = None,
) -> ModelParams:
    """Fresh trainable parameters.

    Gate weights ~ U(-0.08, 0.08) with forget-gate bias 1.0; the embedding
    defaults to U(-0.05, 0.05) with a zeroed pad row unless an initialized
    matrix (e.g. loaded from an embedding file) is supplied.
    """
    h, e = cfg.hidden_dim, cfg.embed_dim

    if embedding is None:
        embedding = rng.uniform(-0.05, 0.05, size=(cfg.vocab_size, e))
        embedding[0] = 0.0
    else:
        embedding = np.array(embedding, dtype=np.float64)
        if embedding.shape != (cfg.vocab_size, e):
            raise ShapeMismatch(
                f"embedding shape {embedding.shape} != {(cfg.vocab_size, e)}"
            )

    def cell() -> CellWeights:
        w_x = rng.uniform(-WEIGHT_INIT_SCALE, WEIGHT_INIT_SCALE, size=(4 * h, e))
        w_h = rng.uniform(-WEIGHT_INIT_SCALE, WEIGHT_INIT_SCALE, size=(4 * h, h))
        bias = np.zeros(4 * h)
        bias[h:2 * h] = FORGET_BIAS_INIT
        return CellWeights(w_x=w_x, w_h=w_h, bias=bias)

    fwd = cell()
    bwd = cell() if cfg.bidirectional else None
    dense_w = rng.uniform(
        -WEIGHT_INIT_SCALE, WEIGHT_INIT_SCALE, size=(cfg.num_classes, cfg.feature_dim)
    )
    dense_b = np.zeros(cfg.num_classes)
    return ModelParams(embedding, fwd, bwd, dense_w, dense_b)


def validate_params(params: ModelParams, cfg: ModelConfig) -> None:
    h, e = cfg.hidden_dim, cfg.embed_dim
    expected = {
        "embedding": (cfg.vocab_size, e),
        "fwd.w_x": (4 * h, e),
        "fwd.w_h": (4 * h, h),
        "fwd.bias": (4 * h,),
        "bwd.w_x": (4 * h, e),
        "bwd.w_h": (4 * h, h),
        "bwd.bias": (4 * h,),
        "dense_w": (cfg.num_classes, cfg.feature_dim),
        "dense_b": (cfg.num_classes,),
    }
    if cfg.bidirectional != (params.backward_cell is not None):
        raise ShapeMismatch("bidirectional flag does not match parameters")
    for name, arr in params.named_tensors():
        if arr.shape != expected[name]:
            raise ShapeMismatch(
                f"{name}: shape {arr.shape}, expected {expected[name]}"
            )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    ex = np.exp(shifted)
    return ex / ex.sum()


@dataclass
class DirectionTrace:
    """Per-timestep activations in *consumption* order."""

    inputs: np.ndarray     # [T, E]
    gates: np.ndarray      # [T, 4H] post-activation i,f,g,o
    cells: np.ndarray      # [T, H]
    cell_tanh: np.ndarray  # [T, H]
    hiddens: np.ndarray    # [T, H]


@dataclass
class ForwardCache:
    cfg: ModelConfig
    token_ids: np.ndarray           # [T]
    feature: np.ndarray             # [feature_dim]
    probs: np.ndarray               # [num_classes]
    fwd: DirectionTrace = field(repr=False, default=None)
    bwd: DirectionTrace | None = field(repr=False, default=None)


def _run_direction(cell: CellWeights, x: np.ndarray, hidden_dim: int) -> DirectionTrace:
    t_steps = x.shape[0]
    h = hidden_dim
    gates = np.empty((t_steps, 4 * h))
    cells = np.empty((t_steps, h))
    cell_tanh = np.empty((t_steps, h))
    hiddens = np.empty((t_steps, h))
    # input contributions for all timesteps in one product
    wx = x @ cell.w_x.T + cell.bias  # [T, 4H]
    h_prev = np.zeros(h)
    c_prev = np.zeros(h)
    for t in range(t_steps):
        z = wx[t] + cell.w_h @ h_prev
        i = _sigmoid(z[:h])
        f = _sigmoid(z[h:2 * h])
        g = np.tanh(z[2 * h:3 * h])
        o = _sigmoid(z[3 * h:])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h_t = o * tc
        gates[t, :h], gates[t, h:2 * h] = i, f
        gates[t, 2 * h:3 * h], gates[t, 3 * h:] = g, o
        cells[t] = c
        cell_tanh[t] = tc
        hiddens[t] = h_t
        h_prev, c_prev = h_t, c
    return DirectionTrace(inputs=x, gates=gates, cells=cells,
                          cell_tanh=cell_tanh, hiddens=hiddens)


def forward(
    params: ModelParams, cfg: ModelConfig, token_ids
) -> tuple[np.ndarray, ForwardCache]:
    """Class probabilities for one token-id sequence, plus the BPTT cache."""
    validate_params(params, cfg)
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.shape != (cfg.seq_len,):
        raise ShapeMismatch(f"expected {cfg.seq_len} token ids, got shape {ids.shape}")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise IndexOutOfVocab(f"token ids must be in [0, {cfg.vocab_size})")

    x = params.embedding[ids]  # [T, E]
    fwd = _run_direction(params.forward_cell, x, cfg.hidden_dim)
    bwd = None
    if cfg.bidirectional:
        bwd = _run_direction(params.backward_cell, x[::-1], cfg.hidden_dim)
        feature = np.concatenate([fwd.hiddens[-1], bwd.hiddens[-1]])
    else:
        feature = fwd.hiddens[-1].copy()

    probs = softmax(params.dense_w @ feature + params.dense_b)
    cache = ForwardCache(cfg=cfg, token_ids=ids, feature=feature,
                         probs=probs, fwd=fwd, bwd=bwd)
    return probs, cache


def loss(probs: np.ndarray, label_id: int) -> float:
    """Cross-entropy with a 1e-12 probability floor."""
    if not 0 <= label_id < probs.shape[0]:
        raise LabelOutOfRange(f"label {label_id} out of range")
    return float(-np.log(max(float(probs[label_id]), PROB_FLOOR)))


def _direction_backward(
    cell: CellWeights, trace: DirectionTrace, dh_last: np.ndarray, hidden_dim: int
) -> tuple[CellWeights, np.ndarray]:
    """Backprop one direction; returns cell gradients and d(inputs)."""
    t_steps = trace.inputs.shape[0]
    h = hidden_dim
    dz_all = np.empty((t_steps, 4 * h))
    dh = dh_last.copy()
    dc = np.zeros(h)
    for t in range(t_steps - 1, -1, -1):
        i = trace.gates[t, :h]
        f = trace.gates[t, h:2 * h]
        g = trace.gates[t, 2 * h:3 * h]
        o = trace.gates[t, 3 * h:]
        tc = trace.cell_tanh[t]
        c_prev = trace.cells[t - 1] if t > 0 else np.zeros(h)

        dc_total = dc + dh * o * (1.0 - tc * tc)
        dz = dz_all[t]
        dz[:h] = dc_total * g * i * (1.0 - i)
        dz[h:2 * h] = dc_total * c_prev * f * (1.0 - f)
        dz[2 * h:3 * h] = dc_total * i * (1.0 - g * g)
        dz[3 * h:] = dh * tc * o * (1.0 - o)

        dh = cell.w_h.T @ dz
        dc = dc_total * f

    h_prev = np.vstack([np.zeros((1, h)), trace.hiddens[:-1]])
    grads = CellWeights(
        w_x=dz_all.T @ trace.inputs,
        w_h=dz_all.T @ h_prev,
        bias=dz_all.sum(axis=0),
    )
    dx = dz_all @ cell.w_x
    return grads, dx


def backward(
    params: ModelParams, cfg: ModelConfig, cache: ForwardCache, label_id: int
) -> Gradients:
    """Exact gradients of loss(forward(params)) for every parameter tensor.

    The pad embedding row's gradient is forced to zero so padding stays a
    frozen null input.
    """
    if cache.cfg != cfg:
        raise CacheMismatch("cache was built for a different model config")
    if not 0 <= label_id < cfg.num_classes:
        raise LabelOutOfRange(f"label {label_id} out of range")
    h = cfg.hidden_dim

    dlogits = cache.probs.copy()
    dlogits[label_id] -= 1.0
    d_dense_w = np.outer(dlogits, cache.feature)
    d_dense_b = dlogits.copy()
    dfeature = params.dense_w.T @ dlogits

    fwd_grads, dx = _direction_backward(
        params.forward_cell, cache.fwd, dfeature[:h], h
    )
    bwd_grads = None
    if cfg.bidirectional:
        bwd_grads, dx_rev = _direction_backward(
            params.backward_cell, cache.bwd, dfeature[h:], h
        )
        dx = dx + dx_rev[::-1]

    d_embedding = np.zeros_like(params.embedding)
    np.add.at(d_embedding, cache.token_ids, dx)
    d_embedding[0] = 0.0

    return ModelParams(
        embedding=d_embedding,
        forward_cell=fwd_grads,
        backward_cell=bwd_grads,
        dense_w=d_dense_w,
        dense_b=d_dense_b,
    )


def global_norm(grads: Gradients) -> float:
    total = 0.0
    for _, arr in grads.named_tensors():
        total += float(np.square(arr).sum())
    return float(np.sqrt(total))


def clip_gradients(grads: Gradients, threshold: float) -> Gradients:
    """Global L2-norm clipping: scale everything by threshold/norm if over."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    norm = global_norm(grads)
    if norm <= threshold:
        return tree_map(np.copy, grads)
    scale = threshold / norm
    return tree_map(lambda a: a * scale, grads)


@dataclass
class AdamState:
    m: ModelParams
    v: ModelParams
    t: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def init_adam(params: ModelParams) -> AdamState:
    return AdamState(m=zeros_like_params(params), v=zeros_like_params(params))


def adam_step(
    params: ModelParams, grads: Gradients, state: AdamState, lr: float
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update; pure, returns fresh params and state."""
    for name, arr in grads.named_tensors():
        if not np.isfinite(arr).all():
            raise NonFiniteGradient(f"non-finite gradient in {name}")
    t = state.t + 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    new_m = tree_map(lambda m, g: b1 * m + (1 - b1) * g, state.m, grads)
    new_v = tree_map(lambda v, g: b2 * v + (1 - b2) * g * g, state.v, grads)
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    new_params = tree_map(
        lambda p, m, v: p - lr * (m / bc1) / (np.sqrt(v / bc2) + eps),
        params, new_m, new_v,
    )
    return new_params, AdamState(m=new_m, v=new_v, t=t,
                                 beta1=b1, beta2=b2, eps=eps)
