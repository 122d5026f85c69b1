"""Adam updates over the structured parameter set.

Moments are kept in float64 and the update arithmetic runs in float64; the
parameters themselves stay in their storage dtype. No weight decay,
gradient clipping, or schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TrainingError
from .model import Gradients, ModelParams, cast_params, named_arrays, zeros_like_params


@dataclass
class AdamState:
    step: int
    lr: float
    beta1: float
    beta2: float
    eps: float
    m: ModelParams
    v: ModelParams


def adam_init(
    params: ModelParams,
    lr: float = 2e-5,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    if lr < 0:
        raise ConfigError(f"learning rate must be non-negative, got {lr}")
    if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
        raise ConfigError(f"betas must be in (0, 1), got {beta1}, {beta2}")
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    return AdamState(
        step=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps,
        m=cast_params(zeros_like_params(params), np.float64),
        v=cast_params(zeros_like_params(params), np.float64),
    )


def adam_step(
    params: ModelParams, grads: Gradients, state: AdamState
) -> tuple[ModelParams, AdamState]:
    """One Adam update, in place. Returns (params, state) for chaining."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for (name, p), (_, g), (_, m), (_, v) in zip(
        named_arrays(params), named_arrays(grads), named_arrays(state.m), named_arrays(state.v)
    ):
        if p.shape != g.shape:
            raise TrainingError(f"gradient shape mismatch for {name}: {p.shape} vs {g.shape}")
        g64 = g.astype(np.float64)
        if not np.all(np.isfinite(g64)):
            raise TrainingError(f"non-finite gradient in {name}; aborting step")
        m *= state.beta1
        m += (1.0 - state.beta1) * g64
        v *= state.beta2
        v += (1.0 - state.beta2) * (g64 * g64)
        update = state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p[...] = (p.astype(np.float64) - update).astype(p.dtype)
    return params, state
