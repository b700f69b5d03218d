"""Attentional encoder-decoder over grapheme/phoneme id sequences.

The encoder runs a gated recurrent cell over embedded graphemes. Each decoder
step attends over the encoder states with the previous decoder state, feeds
the previous phoneme embedding concatenated with the context vector through
the decoder cell, and projects the new state to a distribution over phonemes.
The decoder starts from the encoder's final state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import (
    AttentionParams,
    AttentionTrace,
    alignment_scores,
    attention_weights,
    context_vector,
)
from .lexicon import EOS_ID, SOS_ID, Vocabulary
from .nn import (
    Array,
    GruCellParams,
    affine,
    glorot_uniform,
    gru_cell,
    init_gru_cell,
    log_softmax,
)

DEFAULT_EMBED_DIM = 64
DEFAULT_HIDDEN_DIM = 128


@dataclass
class ModelParams:
    """Every trainable array, plus dimension metadata derived from shapes."""

    grapheme_embedding: Array  # (grapheme vocab, embed)
    phoneme_embedding: Array   # (phoneme vocab, embed)
    encoder: GruCellParams     # embed -> hidden
    decoder: GruCellParams     # embed + hidden -> hidden
    attention: AttentionParams
    output_weight: Array       # (phoneme vocab, hidden)
    output_bias: Array         # (phoneme vocab,)

    @property
    def embed_dim(self) -> int:
        return self.grapheme_embedding.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.encoder.hidden_dim

    @property
    def grapheme_vocab_size(self) -> int:
        return self.grapheme_embedding.shape[0]

    @property
    def phoneme_vocab_size(self) -> int:
        return self.phoneme_embedding.shape[0]

    @property
    def dtype(self):
        return self.grapheme_embedding.dtype

    def blocks(self) -> dict[str, Array]:
        """Named parameter arrays in the fixed serialization order."""
        out: dict[str, Array] = {
            "grapheme_embedding": self.grapheme_embedding,
            "phoneme_embedding": self.phoneme_embedding,
        }
        for prefix, cell in (("encoder", self.encoder), ("decoder", self.decoder)):
            for name in GruCellParams.FIELDS:
                out[f"{prefix}.{name}"] = getattr(cell, name)
        out["attention.w_enc"] = self.attention.w_enc
        out["attention.w_dec"] = self.attention.w_dec
        out["attention.bias"] = self.attention.bias
        out["attention.v"] = self.attention.v
        out["output.weight"] = self.output_weight
        out["output.bias"] = self.output_bias
        return out

    def copy(self) -> "ModelParams":
        enc = GruCellParams(**{f: getattr(self.encoder, f).copy() for f in GruCellParams.FIELDS})
        dec = GruCellParams(**{f: getattr(self.decoder, f).copy() for f in GruCellParams.FIELDS})
        att = AttentionParams(
            self.attention.w_enc.copy(),
            self.attention.w_dec.copy(),
            self.attention.bias.copy(),
            self.attention.v.copy(),
        )
        return ModelParams(
            self.grapheme_embedding.copy(),
            self.phoneme_embedding.copy(),
            enc,
            dec,
            att,
            self.output_weight.copy(),
            self.output_bias.copy(),
        )


def init_params(
    grapheme_vocab_size: int,
    phoneme_vocab_size: int,
    embed_dim: int = DEFAULT_EMBED_DIM,
    hidden_dim: int = DEFAULT_HIDDEN_DIM,
    seed: int = 0,
    dtype=np.float32,
) -> ModelParams:
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    dims = (grapheme_vocab_size, phoneme_vocab_size, embed_dim, hidden_dim)
    if any(d < 1 for d in dims):
        raise ValueError(f"all dimensions must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    grapheme_embedding = glorot_uniform((grapheme_vocab_size, embed_dim), rng, dtype)
    phoneme_embedding = glorot_uniform((phoneme_vocab_size, embed_dim), rng, dtype)
    encoder = init_gru_cell(embed_dim, hidden_dim, rng, dtype)
    decoder = init_gru_cell(embed_dim + hidden_dim, hidden_dim, rng, dtype)
    attention = AttentionParams(
        w_enc=glorot_uniform((hidden_dim, hidden_dim), rng, dtype),
        w_dec=glorot_uniform((hidden_dim, hidden_dim), rng, dtype),
        bias=np.zeros(hidden_dim, dtype=dtype),
        v=glorot_uniform((hidden_dim,), rng, dtype),
    )
    output_weight = glorot_uniform((phoneme_vocab_size, hidden_dim), rng, dtype)
    output_bias = np.zeros(phoneme_vocab_size, dtype=dtype)
    return ModelParams(
        grapheme_embedding, phoneme_embedding, encoder, decoder, attention,
        output_weight, output_bias,
    )


def zero_gradients(params: ModelParams) -> dict[str, Array]:
    return {name: np.zeros_like(arr) for name, arr in params.blocks().items()}


@dataclass
class EncoderStates:
    """Per-position hidden states, the final state, and the validity mask."""

    states: Array  # (positions, hidden)
    final: Array   # (hidden,)
    mask: Array    # (positions,) bool, True = real input


@dataclass
class StepOutput:
    """One decoder step: new state, phoneme distribution, attention trace."""

    state: Array
    dist: Array
    log_dist: Array
    trace: AttentionTrace


def encode(ids, params: ModelParams) -> EncoderStates:
    """Run the encoder cell over embedded input ids starting from zeros."""
    if len(ids) == 0:
        raise ValueError("cannot encode an empty id sequence")
    vocab = params.grapheme_vocab_size
    if any(i < 0 or i >= vocab for i in ids):
        raise ValueError(f"grapheme id out of range 0..{vocab - 1}")
    h = np.zeros(params.hidden_dim, dtype=params.dtype)
    rows = []
    for i in ids:
        h = gru_cell(params.grapheme_embedding[i], h, params.encoder)
        rows.append(h)
    states = np.stack(rows)
    return EncoderStates(states, rows[-1], np.ones(len(rows), dtype=bool))


def decode_step(
    prev_id: int, s_prev: Array, enc: EncoderStates, params: ModelParams
) -> StepOutput:
    """One attentive decoder step conditioned on the previous output token."""
    if prev_id < 0 or prev_id >= params.phoneme_vocab_size:
        raise ValueError(f"phoneme id {prev_id} out of range")
    scores = alignment_scores(enc.states, s_prev, params.attention)
    weights = attention_weights(scores, enc.mask)
    context = context_vector(weights, enc.states)
    x = np.concatenate([params.phoneme_embedding[prev_id], context])
    state = gru_cell(x, s_prev, params.decoder)
    logits = affine(state, params.output_weight, params.output_bias)
    log_dist = log_softmax(logits)
    return StepOutput(state, np.exp(log_dist), log_dist,
                      AttentionTrace(scores, weights, context))


def _check_target_framing(y_ids) -> None:
    if len(y_ids) < 2 or y_ids[0] != SOS_ID or y_ids[-1] != EOS_ID:
        raise ValueError("target sequence must be framed as SOS ... EOS")


def forward_teacher_forced(x_ids, y_ids, params: ModelParams) -> list[StepOutput]:
    """Decode with gold previous tokens; step t is aligned to target y_ids[t+1]."""
    _check_target_framing(y_ids)
    enc = encode(x_ids, params)
    s = enc.final
    steps = []
    for t in range(1, len(y_ids)):
        out = decode_step(y_ids[t - 1], s, enc, params)
        steps.append(out)
        s = out.state
    return steps


def sequence_log_prob(x_ids, y_ids, params: ModelParams) -> float:
    """log P(y | x): sum of per-step log-probabilities of the gold tokens."""
    steps = forward_teacher_forced(x_ids, y_ids, params)
    return float(sum(step.log_dist[y_ids[t + 1]] for t, step in enumerate(steps)))


@dataclass
class G2PModel:
    """Trained parameters together with the vocabularies they index."""

    params: ModelParams
    graphemes: Vocabulary
    phonemes: Vocabulary
