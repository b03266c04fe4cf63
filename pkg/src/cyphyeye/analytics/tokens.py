"""Token vocabulary for key=value log lines.

Words are whole space-separated `key=value` tokens. Words below the count
threshold (or never seen) fall back to per-character ids bracketed by the
out-of-vocabulary marker, so high-churn values like counters stay scorable
without growing the vocabulary.

Id layout, dense from 0: 0 line-start, 1 line-end, 2 OOV marker, then one id
per corpus character (sorted), then one id per retained word (sorted).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

START = 0
END = 1
OOV = 2
_N_RESERVED = 3


@dataclass(frozen=True)
class TokenVocab:
    word_ids: Mapping[str, int]
    char_ids: Mapping[str, int]

    @property
    def size(self) -> int:
        return _N_RESERVED + len(self.char_ids) + len(self.word_ids)

    def to_dict(self) -> dict:
        return {"words": dict(self.word_ids), "chars": dict(self.char_ids)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TokenVocab":
        return cls(word_ids=dict(d["words"]), char_ids=dict(d["chars"]))


def build_vocab(corpus: Sequence[str], min_count: int = 2) -> TokenVocab:
    """Build the vocabulary from training lines.

    Characters of every seen word get fallback ids regardless of word
    frequency, so any retained-alphabet string decomposes deterministically.
    """
    counts = Counter()
    chars = set()
    for line in corpus:
        for word in line.split():
            counts[word] += 1
            chars.update(word)
    char_ids = {c: _N_RESERVED + i for i, c in enumerate(sorted(chars))}
    base = _N_RESERVED + len(char_ids)
    kept = sorted(w for w, n in counts.items() if n >= min_count)
    word_ids = {w: base + i for i, w in enumerate(kept)}
    return TokenVocab(word_ids=word_ids, char_ids=char_ids)


def tokenize(vocab: TokenVocab, line: str) -> list[int]:
    """Line to ids: [start, ...words..., end]; OOV words expand to their
    character ids bracketed by the OOV marker; unknown characters collapse to
    the bare marker."""
    ids = [START]
    for word in line.split():
        wid = vocab.word_ids.get(word)
        if wid is not None:
            ids.append(wid)
        else:
            ids.append(OOV)
            ids.extend(vocab.char_ids.get(c, OOV) for c in word)
            ids.append(OOV)
    ids.append(END)
    return ids
