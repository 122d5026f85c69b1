"""Sentence-level transformer encoder with explicit backpropagation.

The network stacks L identical blocks over an m x d_e matrix of sentence
vectors. Each block is residual multi-head self-attention followed by
LayerNorm, then an expansion/contraction feedforward with ReLU, dropout,
residual and a second LayerNorm. A mean-pool + tanh projection produces the
document vector, and a final linear map produces class logits.

There is no positional signal at the sentence level, so with dropout
disabled the logits are invariant under any permutation of the input rows;
this is a property of the architecture and is covered by tests.

``forward`` records every intermediate needed by ``backward``, which
composes the VJPs from :mod:`hbm.numerics` in reverse to produce exact
gradients for every parameter tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics as nm
from .errors import ConfigError, IntegrityError, ShapeError
from .rng import Rng

INIT_STD = 0.02


@dataclass
class ModelConfig:
    embed_dim: int = 768
    max_sentences: int = 114
    layers: int = 4
    heads: int = 1
    ffn_mult: int = 4
    num_classes: int = 2
    dropout_p: float = 0.01
    layernorm_eps: float = 1e-12
    mask_padding: bool = False
    saliency_layer: int = 0

    def validate(self) -> "ModelConfig":
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be positive, got {self.embed_dim}")
        if self.max_sentences < 1:
            raise ConfigError(f"max_sentences must be >= 1, got {self.max_sentences}")
        if self.layers < 1:
            raise ConfigError(f"layers must be >= 1, got {self.layers}")
        if self.heads < 1:
            raise ConfigError(f"heads must be >= 1, got {self.heads}")
        if self.ffn_mult < 1:
            raise ConfigError(f"ffn_mult must be >= 1, got {self.ffn_mult}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if not 0 <= self.saliency_layer < self.layers:
            raise ConfigError(
                f"saliency_layer {self.saliency_layer} out of range for {self.layers} layers"
            )
        return self

    def with_overrides(self, **kwargs) -> "ModelConfig":
        return replace(self, **kwargs).validate()


@dataclass
class LayerParams:
    """One encoder block: per-head projections, output projection, the two
    LayerNorms, and the feedforward pair."""

    wq: list[np.ndarray]
    wk: list[np.ndarray]
    wv: list[np.ndarray]
    wo: np.ndarray
    attn_gain: np.ndarray
    attn_bias: np.ndarray
    ffn_expand: np.ndarray
    ffn_contract: np.ndarray
    ffn_gain: np.ndarray
    ffn_bias: np.ndarray


@dataclass
class ModelParams:
    layers: list[LayerParams]
    pooler: np.ndarray
    classifier: np.ndarray


# Gradients mirror the parameter structure exactly.
Gradients = ModelParams


def named_arrays(params: ModelParams):
    """Yield (name, array) in a fixed, documented order."""
    for i, lp in enumerate(params.layers):
        for j in range(len(lp.wq)):
            yield f"layer{i}.head{j}.wq", lp.wq[j]
            yield f"layer{i}.head{j}.wk", lp.wk[j]
            yield f"layer{i}.head{j}.wv", lp.wv[j]
        yield f"layer{i}.wo", lp.wo
        yield f"layer{i}.attn_norm.gain", lp.attn_gain
        yield f"layer{i}.attn_norm.bias", lp.attn_bias
        yield f"layer{i}.ffn.expand", lp.ffn_expand
        yield f"layer{i}.ffn.contract", lp.ffn_contract
        yield f"layer{i}.ffn_norm.gain", lp.ffn_gain
        yield f"layer{i}.ffn_norm.bias", lp.ffn_bias
    yield "pooler.wt", params.pooler
    yield "classifier.w", params.classifier


def _map_arrays(params: ModelParams, fn) -> ModelParams:
    layers = [
        LayerParams(
            wq=[fn(w) for w in lp.wq],
            wk=[fn(w) for w in lp.wk],
            wv=[fn(w) for w in lp.wv],
            wo=fn(lp.wo),
            attn_gain=fn(lp.attn_gain),
            attn_bias=fn(lp.attn_bias),
            ffn_expand=fn(lp.ffn_expand),
            ffn_contract=fn(lp.ffn_contract),
            ffn_gain=fn(lp.ffn_gain),
            ffn_bias=fn(lp.ffn_bias),
        )
        for lp in params.layers
    ]
    return ModelParams(layers=layers, pooler=fn(params.pooler), classifier=fn(params.classifier))


def clone_params(params: ModelParams) -> ModelParams:
    return _map_arrays(params, np.copy)


def zeros_like_params(params: ModelParams) -> Gradients:
    return _map_arrays(params, np.zeros_like)


def cast_params(params: ModelParams, dtype) -> ModelParams:
    return _map_arrays(params, lambda a: a.astype(dtype))


def accumulate_params(dst: ModelParams, src: ModelParams) -> ModelParams:
    """dst += src tensor-wise, in place."""
    for (name, d), (_, s) in zip(named_arrays(dst), named_arrays(src)):
        if d.shape != s.shape:
            raise ShapeError(f"accumulate mismatch for {name}: {d.shape} vs {s.shape}")
        d += s
    return dst


def init_params(config: ModelConfig, rng: Rng) -> ModelParams:
    """Weight matrices ~ Normal(0, 0.02^2) resampled beyond 2 sigma;
    LayerNorm gains 1, biases 0. Deterministic given the Rng seed."""
    config.validate()
    d, h, n = config.embed_dim, config.heads, config.ffn_mult

    def w(shape):
        return rng.truncated_normal(shape, INIT_STD).astype(nm.DTYPE)

    layers = []
    for _ in range(config.layers):
        layers.append(
            LayerParams(
                wq=[w((d, d)) for _ in range(h)],
                wk=[w((d, d)) for _ in range(h)],
                wv=[w((d, d)) for _ in range(h)],
                wo=w((h * d, d)),
                attn_gain=np.ones(d, dtype=nm.DTYPE),
                attn_bias=np.zeros(d, dtype=nm.DTYPE),
                ffn_expand=w((d, n * d)),
                ffn_contract=w((n * d, d)),
                ffn_gain=np.ones(d, dtype=nm.DTYPE),
                ffn_bias=np.zeros(d, dtype=nm.DTYPE),
            )
        )
    return ModelParams(layers=layers, pooler=w((d, d)), classifier=w((d, config.num_classes)))


@dataclass
class AttentionRecord:
    """Per layer, per head: the m x m row-stochastic attention matrix."""

    layers: list[list[np.ndarray]]

    def matrix(self, layer: int, head: int) -> np.ndarray:
        return self.layers[layer][head]


@dataclass
class _LayerTrace:
    d_in: np.ndarray
    q: list[np.ndarray]
    k: list[np.ndarray]
    v: list[np.ndarray]
    attn: list[np.ndarray]
    heads_cat: np.ndarray
    attn_ln_xhat: np.ndarray
    attn_ln_inv_std: np.ndarray
    b_out: np.ndarray
    pre_act: np.ndarray
    hidden: np.ndarray
    drop_mask: np.ndarray | None
    ffn_ln_xhat: np.ndarray
    ffn_ln_inv_std: np.ndarray


@dataclass
class ForwardTrace:
    config: ModelConfig
    params: ModelParams
    layer_traces: list[_LayerTrace] = field(repr=False, default_factory=list)
    z: np.ndarray | None = None
    pooled_mean: np.ndarray | None = None
    doc_vector: np.ndarray | None = None
    logits: np.ndarray | None = None
    attention: AttentionRecord | None = None
    real_count: int = 0
    training: bool = False


def _check_input(d_mat: np.ndarray, config: ModelConfig) -> None:
    if d_mat.ndim != 2 or d_mat.shape != (config.max_sentences, config.embed_dim):
        raise ShapeError(
            f"input must be {config.max_sentences}x{config.embed_dim}, got {d_mat.shape}"
        )


def _attend_one_head(d_mat, wq, wk, wv, config: ModelConfig, real: int):
    q = nm.matmul(d_mat, wq)
    k = nm.matmul(d_mat, wk)
    v = nm.matmul(d_mat, wv)
    scale = 1.0 / math.sqrt(config.embed_dim)
    scores = (nm.matmul(q, np.ascontiguousarray(k.T)) * scale).astype(d_mat.dtype)
    m = config.max_sentences
    if config.mask_padding and real < m:
        # padded sentences are excluded as keys: distribute over real columns only
        attn = np.zeros((m, m), dtype=d_mat.dtype)
        attn[:, :real] = nm.softmax_rows(scores[:, :real])
    else:
        attn = nm.softmax_rows(scores)
    head = nm.matmul(attn, v)
    return q, k, v, attn, head


def multi_head(
    d_mat: np.ndarray, lp: LayerParams, config: ModelConfig, real_count: int | None = None
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Concatenated per-head attention outputs projected by wo.

    The score divisor is sqrt(embed_dim) for any head count.
    """
    _check_input(d_mat, config)
    real = config.max_sentences if real_count is None else real_count
    heads, attns = [], []
    for j in range(config.heads):
        _, _, _, attn, head = _attend_one_head(d_mat, lp.wq[j], lp.wk[j], lp.wv[j], config, real)
        heads.append(head)
        attns.append(attn)
    out = nm.matmul(nm.concat_cols(heads), lp.wo)
    return out, attns


def bert_att(
    d_mat: np.ndarray, lp: LayerParams, config: ModelConfig, real_count: int | None = None
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Residual attention sub-block: LayerNorm(d + multi_head(d))."""
    mixed, attns = multi_head(d_mat, lp, config, real_count)
    out = nm.layer_norm(d_mat + mixed, lp.attn_gain, lp.attn_bias, config.layernorm_eps)
    return out, attns


def ffn_block(
    b_mat: np.ndarray,
    lp: LayerParams,
    config: ModelConfig,
    rng: Rng | None = None,
    training: bool = False,
) -> np.ndarray:
    """LayerNorm(b + dropout(relu(b @ expand) @ contract))."""
    hidden = nm.relu(nm.matmul(b_mat, lp.ffn_expand))
    proj = nm.matmul(hidden, lp.ffn_contract)
    dropped, _ = nm.dropout(proj, config.dropout_p, rng, training)
    return nm.layer_norm(b_mat + dropped, lp.ffn_gain, lp.ffn_bias, config.layernorm_eps)


def _encode_layer(d_mat, lp, config, rng, training, real) -> tuple[np.ndarray, _LayerTrace]:
    qs, ks, vs, attns, heads = [], [], [], [], []
    for j in range(config.heads):
        q, k, v, attn, head = _attend_one_head(d_mat, lp.wq[j], lp.wk[j], lp.wv[j], config, real)
        qs.append(q)
        ks.append(k)
        vs.append(v)
        attns.append(attn)
        heads.append(head)
    heads_cat = nm.concat_cols(heads)
    mixed = nm.matmul(heads_cat, lp.wo)
    b_out, a_xhat, a_inv = nm.layer_norm_ctx(
        d_mat + mixed, lp.attn_gain, lp.attn_bias, config.layernorm_eps
    )
    pre_act = nm.matmul(b_out, lp.ffn_expand)
    hidden = nm.relu(pre_act)
    proj = nm.matmul(hidden, lp.ffn_contract)
    dropped, mask = nm.dropout(proj, config.dropout_p, rng, training)
    d_next, f_xhat, f_inv = nm.layer_norm_ctx(
        b_out + dropped, lp.ffn_gain, lp.ffn_bias, config.layernorm_eps
    )
    trace = _LayerTrace(
        d_in=d_mat,
        q=qs,
        k=ks,
        v=vs,
        attn=attns,
        heads_cat=heads_cat,
        attn_ln_xhat=a_xhat,
        attn_ln_inv_std=a_inv,
        b_out=b_out,
        pre_act=pre_act,
        hidden=hidden,
        drop_mask=mask,
        ffn_ln_xhat=f_xhat,
        ffn_ln_inv_std=f_inv,
    )
    return d_next, trace


def encode(
    d_mat: np.ndarray,
    params: ModelParams,
    config: ModelConfig,
    rng: Rng | None = None,
    training: bool = False,
    real_count: int | None = None,
) -> tuple[np.ndarray, AttentionRecord]:
    """Apply all encoder blocks; returns the encoded matrix and every
    layer's attention matrices."""
    _check_input(d_mat, config)
    real = config.max_sentences if real_count is None else real_count
    x = d_mat
    record = []
    for lp in params.layers:
        x, trace = _encode_layer(x, lp, config, rng, training, real)
        record.append(trace.attn)
    return x, AttentionRecord(layers=record)


def pool(z_mat: np.ndarray, params: ModelParams) -> np.ndarray:
    """Document vector: tanh(mean over all rows @ pooler)."""
    return nm.tanh(nm.matmul(nm.mean_rows(z_mat), params.pooler))


def logits(doc_vector: np.ndarray, params: ModelParams) -> np.ndarray:
    """Unnormalized class scores as a 1-D vector."""
    return nm.matmul(doc_vector, params.classifier)[0]


def _masked_mean(z_mat: np.ndarray, real: int) -> np.ndarray:
    return nm.mean_rows(z_mat[:real])


def forward(
    d_mat: np.ndarray,
    params: ModelParams,
    config: ModelConfig,
    rng: Rng | None = None,
    training: bool = False,
    real_count: int | None = None,
) -> ForwardTrace:
    """Full pass from padded sentence matrix to logits, recording every
    intermediate needed by :func:`backward`."""
    _check_input(d_mat, config)
    real = config.max_sentences if real_count is None else real_count
    if not 1 <= real <= config.max_sentences:
        raise ShapeError(f"real_count {real} out of range 1..{config.max_sentences}")

    trace = ForwardTrace(config=config, params=params, real_count=real, training=training)
    x = np.ascontiguousarray(d_mat)
    record = []
    for lp in params.layers:
        x, lt = _encode_layer(x, lp, config, rng, training, real)
        trace.layer_traces.append(lt)
        record.append(lt.attn)
    trace.z = x
    trace.attention = AttentionRecord(layers=record)

    if config.mask_padding:
        trace.pooled_mean = _masked_mean(x, real)
    else:
        trace.pooled_mean = nm.mean_rows(x)
    trace.doc_vector = nm.tanh(nm.matmul(trace.pooled_mean, params.pooler))
    trace.logits = nm.matmul(trace.doc_vector, params.classifier)[0]
    return trace


def _backward_layer(g: np.ndarray, lt: _LayerTrace, lp: LayerParams, grad: LayerParams, config, real):
    dx_ffn, dgain_f, dbias_f = nm.layer_norm_vjp(g, lt.ffn_ln_xhat, lt.ffn_ln_inv_std, lp.ffn_gain)
    grad.ffn_gain += dgain_f
    grad.ffn_bias += dbias_f

    db = dx_ffn.copy()
    dproj = nm.dropout_vjp(dx_ffn, lt.drop_mask)
    dhidden, dcontract = nm.matmul_vjp(dproj, lt.hidden, lp.ffn_contract)
    grad.ffn_contract += dcontract
    dpre = nm.relu_vjp(dhidden, lt.pre_act)
    db2, dexpand = nm.matmul_vjp(dpre, lt.b_out, lp.ffn_expand)
    grad.ffn_expand += dexpand
    db += db2

    dx_attn, dgain_a, dbias_a = nm.layer_norm_vjp(db, lt.attn_ln_xhat, lt.attn_ln_inv_std, lp.attn_gain)
    grad.attn_gain += dgain_a
    grad.attn_bias += dbias_a

    dd = dx_attn.copy()
    dcat, dwo = nm.matmul_vjp(dx_attn, lt.heads_cat, lp.wo)
    grad.wo += dwo
    dheads = nm.concat_cols_vjp(dcat, [config.embed_dim] * config.heads)

    scale = 1.0 / math.sqrt(config.embed_dim)
    m = config.max_sentences
    for j in range(config.heads):
        attn, v, q, k = lt.attn[j], lt.v[j], lt.q[j], lt.k[j]
        dattn, dv = nm.matmul_vjp(dheads[j], attn, v)
        if config.mask_padding and real < m:
            dscores = np.zeros_like(dattn)
            dscores[:, :real] = nm.softmax_rows_vjp(dattn[:, :real], attn[:, :real])
        else:
            dscores = nm.softmax_rows_vjp(dattn, attn)
        dscaled = (dscores * scale).astype(dscores.dtype)
        dq, dkt = nm.matmul_vjp(dscaled, q, np.ascontiguousarray(k.T))
        dk = np.ascontiguousarray(dkt.T)
        for dout, w, gslot in ((dq, lp.wq[j], grad.wq), (dk, lp.wk[j], grad.wk), (dv, lp.wv[j], grad.wv)):
            dd_part, dw = nm.matmul_vjp(dout, lt.d_in, w)
            gslot[j] += dw
            dd += dd_part
    return dd


def backward(trace: ForwardTrace, dlogits: np.ndarray) -> Gradients:
    """Exact parameter gradients by reverse composition of the layer VJPs.

    ``dlogits`` is the loss gradient at the logits (length num_classes).
    """
    config, params = trace.config, trace.params
    if trace.logits is None or trace.z is None:
        raise IntegrityError("trace is incomplete; run forward() first")
    dlogits = np.asarray(dlogits, dtype=trace.z.dtype)
    if dlogits.shape != (config.num_classes,):
        raise IntegrityError(
            f"dlogits must have shape ({config.num_classes},), got {dlogits.shape}"
        )
    if params.classifier.shape != (config.embed_dim, config.num_classes):
        raise IntegrityError("trace parameters do not match their config")

    grads = zeros_like_params(params)
    g_row = dlogits.reshape(1, -1)
    ds, dcls = nm.matmul_vjp(g_row, trace.doc_vector, params.classifier)
    grads.classifier += dcls

    dpre_tanh = nm.tanh_vjp(ds, trace.doc_vector)
    dmean, dpooler = nm.matmul_vjp(dpre_tanh, trace.pooled_mean, params.pooler)
    grads.pooler += dpooler

    m, real = config.max_sentences, trace.real_count
    if config.mask_padding:
        dz = np.zeros_like(trace.z)
        dz[:real] = nm.mean_rows_vjp(dmean, real)
    else:
        dz = nm.mean_rows_vjp(dmean, m)

    g = dz
    for lt, lp, gl in zip(
        reversed(trace.layer_traces), reversed(params.layers), reversed(grads.layers)
    ):
        g = _backward_layer(g, lt, lp, gl, config, real)
    return grads
