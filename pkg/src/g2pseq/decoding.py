"""Phoneme generation: greedy argmax decoding and beam search over sequence
log-probability, both returning per-step log-probabilities and the attention
matrix. Ties break toward the lowest token id so runs are reproducible."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lexicon import EOS_ID, SOS_ID, encode_word
from .model import Array, G2PModel, decode_step, encode

MAX_OUTPUT_CAP = 50


@dataclass
class DecodeResult:
    phonemes: tuple[str, ...]
    log_prob: float
    step_log_probs: tuple[float, ...]
    attention: Array  # (steps, input positions); rows sum to 1
    terminated: bool


def default_max_len(word_length: int) -> int:
    return min(2 * word_length + 5, MAX_OUTPUT_CAP)


def _prepare(word: str, model: G2PModel):
    normalized = word.strip().upper()
    if not normalized:
        raise ValueError("cannot decode an empty word")
    ids = encode_word(normalized, model.graphemes)
    return normalized, encode(ids, model.params)


def greedy_decode(word: str, model: G2PModel, max_len: int | None = None) -> DecodeResult:
    """Repeatedly emit the argmax phoneme until EOS or max_len."""
    normalized, enc = _prepare(word, model)
    if max_len is None:
        max_len = default_max_len(len(normalized))
    if max_len < 1:
        raise ValueError("max_len must be at least 1")

    s = enc.final
    prev = SOS_ID
    tokens: list[int] = []
    step_logps: list[float] = []
    rows: list[Array] = []
    terminated = False
    for _ in range(max_len):
        out = decode_step(prev, s, enc, model.params)
        tok = int(np.argmax(out.log_dist))
        step_logps.append(float(out.log_dist[tok]))
        rows.append(out.trace.weights)
        if tok == EOS_ID:
            terminated = True
            break
        tokens.append(tok)
        prev = tok
        s = out.state
    return DecodeResult(
        phonemes=tuple(model.phonemes.token_of(t) for t in tokens),
        log_prob=float(sum(step_logps)),
        step_log_probs=tuple(step_logps),
        attention=np.stack(rows),
        terminated=terminated,
    )


@dataclass
class _Hypothesis:
    log_prob: float
    tokens: tuple[int, ...]
    state: Array
    step_logps: tuple[float, ...]
    rows: tuple[Array, ...]

    @property
    def prev(self) -> int:
        return self.tokens[-1] if self.tokens else SOS_ID


def _finish(hyp: _Hypothesis, model: G2PModel, terminated: bool) -> DecodeResult:
    tokens = hyp.tokens[:-1] if terminated else hyp.tokens  # drop the EOS
    return DecodeResult(
        phonemes=tuple(model.phonemes.token_of(t) for t in tokens),
        log_prob=hyp.log_prob,
        step_log_probs=hyp.step_logps,
        attention=np.stack(hyp.rows),
        terminated=terminated,
    )


def beam_decode(
    word: str,
    model: G2PModel,
    width: int,
    max_len: int | None = None,
    length_normalize: bool = False,
) -> list[DecodeResult]:
    """Keep the `width` best partial hypotheses per step; finished and
    truncated hypotheses compete by total log-probability (optionally
    normalized per emitted step). Returns at most `width` results, best first.
    """
    if width < 1:
        raise ValueError("beam width must be at least 1")
    normalized, enc = _prepare(word, model)
    if max_len is None:
        max_len = default_max_len(len(normalized))
    if max_len < 1:
        raise ValueError("max_len must be at least 1")

    vocab = model.params.phoneme_vocab_size
    live = [_Hypothesis(0.0, (), enc.final, (), ())]
    finished: list[_Hypothesis] = []
    for _ in range(max_len):
        candidates: list[tuple[float, tuple[int, ...], float, _Hypothesis, Array, Array]] = []
        for hyp in live:
            out = decode_step(hyp.prev, hyp.state, enc, model.params)
            for tok in range(vocab):
                step_lp = float(out.log_dist[tok])
                candidates.append((
                    hyp.log_prob + step_lp,
                    hyp.tokens + (tok,),
                    step_lp,
                    hyp,
                    out.state,
                    out.trace.weights,
                ))
        candidates.sort(key=lambda c: (-c[0], c[1]))
        live = []
        for log_prob, tokens, step_lp, parent, state, weights in candidates[:width]:
            new = _Hypothesis(
                log_prob, tokens, state,
                parent.step_logps + (step_lp,), parent.rows + (weights,),
            )
            if tokens[-1] == EOS_ID:
                finished.append(new)
            else:
                live.append(new)
        if not live:
            break

    pool = [(h, True) for h in finished] + [(h, False) for h in live]

    def rank_key(item: tuple[_Hypothesis, bool]):
        hyp, _ = item
        score = hyp.log_prob
        if length_normalize:
            score /= max(len(hyp.step_logps), 1)
        return (-score, hyp.tokens)

    pool.sort(key=rank_key)
    return [_finish(h, model, terminated) for h, terminated in pool[:width]]
