"""Levenshtein-based linguistic distance: edit distance, LDN, and LDND.

LDN divides the edit distance by the longer word's length; LDND additionally
divides the mean same-concept LDN of two word lists by their mean
cross-concept LDN, which discounts accidental similarity between the
languages' sound inventories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import ValidationError


def levenshtein(a: str, b: str) -> int:
    """Minimal number of insertions, deletions, and substitutions turning
    ``a`` into ``b``. Strings are compared by Unicode scalar values."""
    n, m = len(a), len(b)
    if n > m:
        a, b, n, m = b, a, m, n
    current = list(range(n + 1))
    for i in range(1, m + 1):
        previous, current = current, [i] + [0] * n
        for j in range(1, n + 1):
            add, delete = previous[j] + 1, current[j - 1] + 1
            change = previous[j - 1]
            if a[j - 1] != b[i - 1]:
                change += 1
            current[j] = min(add, delete, change)
    return current[n]


def ldn(a: str, b: str) -> float:
    """Length-normalized Levenshtein distance in [0, 1]."""
    longest = max(len(a), len(b))
    if longest == 0:
        raise ValidationError("ldn undefined for two empty strings")
    return levenshtein(a, b) / longest


@dataclass
class WordList:
    """Concept-to-word mapping for one language."""

    language_id: str
    entries: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for concept, word in self.entries.items():
            word = word.strip()
            if not word:
                raise ValidationError(
                    f"word list {self.language_id!r}: empty word for concept {concept!r}"
                )
            cleaned[concept] = word
        self.entries = cleaned

    def folded(self) -> "WordList":
        """Copy with simple Unicode lowercasing applied to every word."""
        return WordList(self.language_id, {c: w.lower() for c, w in self.entries.items()})


def ldnd(list_a: WordList, list_b: WordList) -> float:
    """Doubly normalized Levenshtein distance between two word lists.

    Mean LDN over same-concept pairs divided by mean LDN over all ordered
    cross-concept pairs (i != j) of the shared concepts.
    """
    shared = sorted(set(list_a.entries) & set(list_b.entries))
    if len(shared) < 2:
        raise ValidationError(
            f"ldnd needs >=2 shared concepts, got {len(shared)}"
        )
    same = [ldn(list_a.entries[c], list_b.entries[c]) for c in shared]
    cross = [
        ldn(list_a.entries[ci], list_b.entries[cj])
        for ci in shared
        for cj in shared
        if ci != cj
    ]
    normalizer = sum(cross) / len(cross)
    if normalizer == 0:
        raise ValidationError("ldnd normalizer is zero (all cross-concept pairs identical)")
    return (sum(same) / len(same)) / normalizer


def read_wordlist_tsv(path, language_id: str | None = None) -> WordList:
    """Read a word list from a UTF-8 TSV with ``concept_id<TAB>word`` lines."""
    path = Path(path)
    entries: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 'concept<TAB>word'")
        concept, word = parts[0].strip(), parts[1]
        if concept in entries:
            raise ValidationError(f"{path}:{lineno}: duplicate concept id {concept!r}")
        entries[concept] = word
    return WordList(language_id or path.stem, entries)
