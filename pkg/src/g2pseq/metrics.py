"""Evaluation metrics: Levenshtein alignment with substitution/insertion/
deletion counts, phoneme error rate, and exact-match word accuracy with an
out-of-vocabulary breakdown."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .decoding import beam_decode, greedy_decode
from .model import G2PModel


def edit_distance(hyp: Sequence, ref: Sequence) -> tuple[int, int, int, int]:
    """(distance, substitutions, insertions, deletions) under unit costs.

    Insertions are hypothesis tokens with no reference counterpart; deletions
    are reference tokens missing from the hypothesis. Ties in the backtrace
    prefer substitution, then deletion, then insertion.
    """
    nh, nr = len(hyp), len(ref)
    d = [[0] * (nr + 1) for _ in range(nh + 1)]
    for i in range(1, nh + 1):
        d[i][0] = i
    for j in range(1, nr + 1):
        d[0][j] = j
    for i in range(1, nh + 1):
        row = d[i]
        prev = d[i - 1]
        hi = hyp[i - 1]
        for j in range(1, nr + 1):
            row[j] = min(
                prev[j - 1] + (hi != ref[j - 1]),
                row[j - 1] + 1,
                prev[j] + 1,
            )

    subs = ins = dels = 0
    i, j = nh, nr
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]):
            subs += hyp[i - 1] != ref[j - 1]
            i -= 1
            j -= 1
        elif j > 0 and d[i][j] == d[i][j - 1] + 1:
            dels += 1
            j -= 1
        else:
            ins += 1
            i -= 1
    return d[nh][nr], subs, ins, dels


def phoneme_error_rate(pairs) -> float:
    """Total edit distance divided by total reference length."""
    total_ref = sum(len(ref) for _, ref in pairs)
    if total_ref == 0:
        raise ValueError("phoneme error rate undefined: all references are empty")
    total_dist = sum(edit_distance(hyp, ref)[0] for hyp, ref in pairs)
    return total_dist / total_ref


@dataclass
class ScoreCounts:
    words: int = 0
    word_matches: int = 0
    ref_phonemes: int = 0
    distance: int = 0
    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0

    def add(self, hyp: Sequence[str], ref: Sequence[str]) -> None:
        dist, subs, ins, dels = edit_distance(hyp, ref)
        self.words += 1
        self.word_matches += tuple(hyp) == tuple(ref)
        self.ref_phonemes += len(ref)
        self.distance += dist
        self.substitutions += subs
        self.insertions += ins
        self.deletions += dels

    @property
    def word_accuracy(self) -> float:
        return self.word_matches / self.words

    @property
    def per(self) -> float:
        return self.distance / self.ref_phonemes


@dataclass
class EvalReport:
    overall: ScoreCounts
    oov: ScoreCounts | None  # None when no entry is out of vocabulary


def evaluate(
    model: G2PModel,
    entries,
    oov_reference,
    beam_width: int | None = None,
    max_len: int | None = None,
) -> EvalReport:
    """Decode every entry (greedy unless beam_width is given) and score exact
    word matches and phoneme error rate, overall and on the subset of words
    absent from `oov_reference` (normally the training word set)."""
    entries = list(entries)
    if not entries:
        raise ValueError("cannot evaluate an empty entry list")
    known = {w.upper() for w in oov_reference}
    overall = ScoreCounts()
    oov = ScoreCounts()
    for entry in entries:
        if beam_width is None:
            result = greedy_decode(entry.word, model, max_len)
        else:
            result = beam_decode(entry.word, model, beam_width, max_len)[0]
        overall.add(result.phonemes, entry.phonemes)
        if entry.word not in known:
            oov.add(result.phonemes, entry.phonemes)
    return EvalReport(overall=overall, oov=oov if oov.words else None)
