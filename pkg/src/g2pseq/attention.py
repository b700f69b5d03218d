"""Additive attention: alignment scores through a tanh layer, masked softmax
weights, and the weighted-sum context vector over encoder states."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import Array


@dataclass
class AttentionParams:
    """Projections for score(enc_state, dec_state) = v . tanh(W_e h + W_d s + b)."""

    w_enc: Array
    w_dec: Array
    bias: Array
    v: Array

    def __post_init__(self):
        attn_dim = self.w_enc.shape[0]
        if self.w_dec.shape[0] != attn_dim:
            raise ValueError("encoder and decoder projections disagree on output dim")
        if self.bias.shape != (attn_dim,) or self.v.shape != (attn_dim,):
            raise ValueError("bias/v shape does not match projection output dim")

    @property
    def attn_dim(self) -> int:
        return self.w_enc.shape[0]


@dataclass
class AttentionTrace:
    """Per-step attention internals: raw scores, normalized weights, context."""

    scores: Array
    weights: Array
    context: Array


def alignment_scores(states: Array, s_prev: Array, p: AttentionParams) -> Array:
    """Score of each encoder position against the previous decoder state."""
    if states.ndim != 2 or states.shape[0] == 0:
        raise ValueError("encoder states must be a non-empty (positions, dim) matrix")
    hidden = states @ p.w_enc.T + (s_prev @ p.w_dec.T + p.bias)
    return np.tanh(hidden) @ p.v


def attention_weights(scores: Array, mask: Array | None = None) -> Array:
    """Softmax over unmasked positions; masked positions are exactly zero."""
    scores = np.asarray(scores)
    if mask is None:
        mask = np.ones(scores.shape, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != scores.shape:
            raise ValueError(f"mask shape {mask.shape} != scores shape {scores.shape}")
    if not mask.any():
        raise ValueError("all attention positions are masked")
    shifted = scores - scores[mask].max()
    w = np.where(mask, np.exp(np.where(mask, shifted, 0.0)), 0.0)
    return w / w.sum()


def context_vector(weights: Array, states: Array) -> Array:
    """Attention-weighted combination of encoder states."""
    if weights.shape[0] != states.shape[0]:
        raise ValueError(
            f"{weights.shape[0]} weights for {states.shape[0]} encoder positions"
        )
    return weights @ states
