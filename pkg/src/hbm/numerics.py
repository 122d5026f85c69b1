"""Dense 2-D tensor ops with exact vector-Jacobian products.

A ``Mat`` is a 2-D, C-contiguous numpy array. Model state is stored as
float32; every op accumulates reductions in float64 and returns the input
dtype, which keeps results deterministic and leaves headroom for gradient
checks (run the same ops on float64 inputs and the whole pipeline is
float64). Each forward op has a ``*_vjp`` companion that maps the upstream
gradient to gradients of the inputs.

All functions are pure; the only stateful object is Rng, advanced
explicitly by its single owner.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, NonFiniteError, ShapeError
from .rng import Rng

DTYPE = np.float32


def as_mat(x, dtype=DTYPE) -> np.ndarray:
    """Coerce to a 2-D contiguous array of the storage dtype."""
    a = np.ascontiguousarray(x, dtype=dtype)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def ensure_finite(x: np.ndarray, op: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{op} produced non-finite values")
    return x


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes incompatible: {a.shape} x {b.shape}")
    out = (a.astype(np.float64) @ b.astype(np.float64)).astype(a.dtype)
    return ensure_finite(out, "matmul")


def matmul_vjp(g: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """d(a@b) pulled back: da = g @ b.T, db = a.T @ g."""
    da = (g.astype(np.float64) @ b.astype(np.float64).T).astype(a.dtype)
    db = (a.astype(np.float64).T @ g.astype(np.float64)).astype(b.dtype)
    return da, db


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row max."""
    xf = x.astype(np.float64)
    ensure_finite(xf, "softmax_rows input")
    shifted = xf - xf.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = (e / e.sum(axis=1, keepdims=True)).astype(x.dtype)
    return ensure_finite(out, "softmax_rows")


def softmax_rows_vjp(g: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Per row: ds = s * (g - <g, s>). Takes the forward output s."""
    gf = g.astype(np.float64)
    sf = s.astype(np.float64)
    dot = (gf * sf).sum(axis=1, keepdims=True)
    return (sf * (gf - dot)).astype(s.dtype)


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    y, _, _ = layer_norm_ctx(x, gain, bias, eps)
    return y


def layer_norm_ctx(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = 1e-12
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row standardization then affine. Returns (y, xhat, inv_std) for the VJP."""
    if gain.shape != (x.shape[1],) or bias.shape != (x.shape[1],):
        raise ShapeError(
            f"layer_norm gain/bias must have length {x.shape[1]}, got {gain.shape}/{bias.shape}"
        )
    xf = x.astype(np.float64)
    mu = xf.mean(axis=1, keepdims=True)
    var = ((xf - mu) ** 2).mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xf - mu) * inv_std
    y = (xhat * gain.astype(np.float64) + bias.astype(np.float64)).astype(x.dtype)
    return ensure_finite(y, "layer_norm"), xhat.astype(x.dtype), inv_std.astype(x.dtype)


def layer_norm_vjp(
    g: np.ndarray, xhat: np.ndarray, inv_std: np.ndarray, gain: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients for (x, gain, bias) from the stored (xhat, inv_std)."""
    gf = g.astype(np.float64)
    xh = xhat.astype(np.float64)
    dgain = (gf * xh).sum(axis=0).astype(gain.dtype)
    dbias = gf.sum(axis=0).astype(gain.dtype)
    dxhat = gf * gain.astype(np.float64)
    mean_dxhat = dxhat.mean(axis=1, keepdims=True)
    mean_dxhat_xhat = (dxhat * xh).mean(axis=1, keepdims=True)
    dx = inv_std.astype(np.float64) * (dxhat - mean_dxhat - xh * mean_dxhat_xhat)
    return dx.astype(g.dtype), dgain, dbias


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_vjp(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    return (g * (x > 0)).astype(g.dtype)


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x.astype(np.float64)).astype(x.dtype)


def tanh_vjp(g: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Takes the forward output y = tanh(x); gradient is g * (1 - y**2)."""
    yf = y.astype(np.float64)
    return (g.astype(np.float64) * (1.0 - yf * yf)).astype(g.dtype)


def mean_rows(x: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or x.shape[0] < 1:
        raise ShapeError(f"mean_rows needs at least one row, got shape {x.shape}")
    return x.astype(np.float64).mean(axis=0, keepdims=True).astype(x.dtype)


def mean_rows_vjp(g: np.ndarray, rows: int) -> np.ndarray:
    return np.repeat(g.astype(np.float64) / rows, rows, axis=0).astype(g.dtype)


def dropout(
    x: np.ndarray, p: float, rng: Rng | None, training: bool
) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout: survivors scaled by 1/(1-p) at train time, identity at
    inference. Returns (out, mask); mask already carries the scaling so the VJP
    is a plain elementwise product."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x, None
    if rng is None:
        raise ConfigError("dropout in training mode requires an Rng")
    keep = rng.keep_mask(x.shape, p)
    mask = (keep.astype(np.float64) / (1.0 - p)).astype(x.dtype)
    return (x * mask).astype(x.dtype), mask


def dropout_vjp(g: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    if mask is None:
        return g
    return (g * mask).astype(g.dtype)


def concat_cols(parts: list[np.ndarray]) -> np.ndarray:
    if not parts:
        raise ShapeError("concat_cols needs at least one part")
    rows = parts[0].shape[0]
    for p in parts:
        if p.ndim != 2 or p.shape[0] != rows:
            raise ShapeError(f"concat_cols row mismatch: {[q.shape for q in parts]}")
    return np.concatenate(parts, axis=1)


def concat_cols_vjp(g: np.ndarray, widths: list[int]) -> list[np.ndarray]:
    if sum(widths) != g.shape[1]:
        raise ShapeError(f"concat_cols_vjp widths {widths} do not cover {g.shape[1]} columns")
    out = []
    start = 0
    for w in widths:
        out.append(np.ascontiguousarray(g[:, start : start + w]))
        start += w
    return out
