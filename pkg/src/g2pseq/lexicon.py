"""Pronunciation lexicons: parsing, token vocabularies, and dataset splits."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterator

PAD_ID = 0
SOS_ID = 1
EOS_ID = 2
UNK_ID = 3
RESERVED_TOKENS = ("<pad>", "<sos>", "<eos>", "<unk>")


class LexiconParseError(ValueError):
    """Raised for a malformed lexicon line; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    phonemes: tuple[str, ...]

    def __post_init__(self):
        if not self.word:
            raise ValueError("entry word is empty")
        if not self.phonemes:
            raise ValueError(f"entry {self.word!r} has no phonemes")


@dataclass
class Lexicon:
    """Primary (word, pronunciation) entries in file order.

    Repeated words keep their first pronunciation; later ones are kept in
    `alternates` and excluded from training.
    """

    entries: list[LexiconEntry]
    alternates: dict[str, list[tuple[str, ...]]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[LexiconEntry]:
        return iter(self.entries)

    def words(self) -> set[str]:
        return {e.word for e in self.entries}


def parse_lexicon(source: str | bytes | IO) -> Lexicon:
    """Parse dictionary text with one `WORD PH PH ...` entry per line.

    Accepts a string, UTF-8 bytes, or an open (text or binary) stream.
    Blank lines and lines starting with "#" or ";;;" are ignored. Words are
    uppercased. A word with no phonemes raises LexiconParseError; invalid
    UTF-8 raises UnicodeDecodeError.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")

    entries: list[LexiconEntry] = []
    seen: dict[str, int] = {}
    alternates: dict[str, list[tuple[str, ...]]] = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";;;"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise LexiconParseError(f"word {parts[0]!r} has no phonemes", lineno)
        word = parts[0].upper()
        phonemes = tuple(parts[1:])
        if word in seen:
            alternates.setdefault(word, []).append(phonemes)
        else:
            seen[word] = lineno
            entries.append(LexiconEntry(word, phonemes))
    return Lexicon(entries, alternates)


def load_lexicon(path) -> Lexicon:
    with open(path, "rb") as f:
        return parse_lexicon(f)


@dataclass
class Vocabulary:
    """Bijection between tokens and contiguous ids; ids 0-3 are reserved."""

    tokens: tuple[str, ...]
    _ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if tuple(self.tokens[:4]) != RESERVED_TOKENS:
            raise ValueError(f"vocabulary must start with {RESERVED_TOKENS}")
        self._ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._ids) != len(self.tokens):
            raise ValueError("vocabulary tokens are not distinct")

    @classmethod
    def build(cls, tokens) -> "Vocabulary":
        """Reserved tokens followed by `tokens` in first-appearance order."""
        ordered = list(RESERVED_TOKENS)
        known = set(ordered)
        for tok in tokens:
            if tok not in known:
                known.add(tok)
                ordered.append(tok)
        return cls(tuple(ordered))

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id_of(self, token: str, strict: bool = False) -> int:
        idx = self._ids.get(token)
        if idx is None:
            if strict:
                raise ValueError(f"token {token!r} not in vocabulary")
            return UNK_ID
        return idx

    def token_of(self, idx: int) -> str:
        return self.tokens[idx]


def build_vocabs(lexicon: Lexicon) -> tuple[Vocabulary, Vocabulary]:
    """Grapheme and phoneme vocabularies in first-appearance order."""
    if not lexicon.entries:
        raise ValueError("cannot build vocabularies from an empty lexicon")
    graphemes = Vocabulary.build(ch for e in lexicon for ch in e.word)
    phonemes = Vocabulary.build(p for e in lexicon for p in e.phonemes)
    return graphemes, phonemes


def encode_word(word: str, graphemes: Vocabulary, strict: bool = False) -> list[int]:
    """Character ids plus a trailing EOS; unknown characters map to UNK."""
    return [graphemes.id_of(ch, strict) for ch in word] + [EOS_ID]


def encode_entry(
    entry: LexiconEntry,
    graphemes: Vocabulary,
    phonemes: Vocabulary,
    strict: bool = False,
) -> tuple[list[int], list[int]]:
    """(input ids with EOS, target ids framed as SOS ... EOS)."""
    x = encode_word(entry.word, graphemes, strict)
    y = [SOS_ID] + [phonemes.id_of(p, strict) for p in entry.phonemes] + [EOS_ID]
    return x, y


@dataclass
class DatasetSplit:
    train: list[LexiconEntry]
    validation: list[LexiconEntry]
    test: list[LexiconEntry]
    seed: int


def split_sizes(n: int) -> tuple[int, int, int]:
    """70/20/10 sizes; each of the first two rounds half up, test takes the rest."""
    n_train = int(n * 0.7 + 0.5)
    n_val = int(n * 0.2 + 0.5)
    return n_train, n_val, n - n_train - n_val


_LCG_MULT = 6364136223846793005
_LCG_INC = 1442695040888963407
_MASK64 = (1 << 64) - 1


def _permutation(n: int, seed: int) -> list[int]:
    """Fisher-Yates shuffle driven by the 64-bit LCG
    state' = state * 6364136223846793005 + 1442695040888963407 (mod 2^64),
    seeded with `seed`; the swap index for position i is (state >> 33) % (i + 1).
    Fully specified so splits are reproducible across implementations.
    """
    order = list(range(n))
    state = seed & _MASK64
    for i in range(n - 1, 0, -1):
        state = (state * _LCG_MULT + _LCG_INC) & _MASK64
        j = (state >> 33) % (i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def split_dataset(lexicon: Lexicon, seed: int) -> DatasetSplit:
    """Deterministic seeded shuffle, then a contiguous 70/20/10 partition."""
    n = len(lexicon)
    if n < 10:
        raise ValueError(f"need at least 10 entries to split, got {n}")
    order = _permutation(n, seed)
    shuffled = [lexicon.entries[i] for i in order]
    n_train, n_val, _ = split_sizes(n)
    return DatasetSplit(
        train=shuffled[:n_train],
        validation=shuffled[n_train:n_train + n_val],
        test=shuffled[n_train + n_val:],
        seed=seed,
    )
