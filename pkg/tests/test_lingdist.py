"""Edit-distance and word-list distance tests against a full-DP oracle."""

import numpy as np
import pytest

from psr_kit.exceptions import ValidationError
from psr_kit.lingdist import WordList, ldn, ldnd, levenshtein, read_wordlist_tsv


def dp_levenshtein(a: str, b: str) -> int:
    """Independent oracle: full (len(a)+1) x (len(b)+1) dynamic-programming table."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        table[i][0] = i
    for j in range(len(b) + 1):
        table[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + cost,
            )
    return table[len(a)][len(b)]


def random_word(rng, max_len=20, alphabet="abcdefg"):
    length = int(rng.integers(0, max_len + 1))
    return "".join(rng.choice(list(alphabet)) for _ in range(length))


class TestLevenshtein:
    def test_kitten_sitting(self):
        assert levenshtein("kitten", "sitting") == 3
        assert levenshtein("kitten", "sitting") == dp_levenshtein("kitten", "sitting")

    def test_identity(self):
        for word in ["", "a", "abc", "über", "你好"]:
            assert levenshtein(word, word) == 0

    def test_empty_vs_abc(self):
        assert levenshtein("", "abc") == 3
        assert levenshtein("abc", "") == 3

    def test_matches_dp_oracle_on_random_pairs(self, rng):
        for _ in range(300):
            a, b = random_word(rng), random_word(rng)
            assert levenshtein(a, b) == dp_levenshtein(a, b)

    def test_symmetry_and_bounds(self, rng):
        for _ in range(200):
            a, b = random_word(rng, 12), random_word(rng, 12)
            d = levenshtein(a, b)
            assert d == levenshtein(b, a)
            assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))
            assert (d == 0) == (a == b)

    def test_unicode_scalar_units(self):
        # combining accent counts as its own symbol
        assert levenshtein("é", "e") == 1


class TestLdn:
    def test_kitten_sitting(self):
        assert ldn("kitten", "sitting") == pytest.approx(3 / 7)

    def test_identity_zero(self):
        assert ldn("abc", "abc") == 0.0

    def test_full_substitution(self):
        assert ldn("a", "b") == 1.0

    def test_both_empty_rejected(self):
        with pytest.raises(ValidationError):
            ldn("", "")

    def test_range_and_symmetry(self, rng):
        for _ in range(200):
            a, b = random_word(rng, 10), random_word(rng, 10)
            if not a and not b:
                continue
            v = ldn(a, b)
            assert 0.0 <= v <= 1.0
            assert v == ldn(b, a)


class TestLdnd:
    def test_identical_lists_zero(self):
        wl = WordList("x", {"1": "aa", "2": "bb"})
        assert ldnd(wl, WordList("y", {"1": "aa", "2": "bb"})) == 0.0

    def test_worked_example(self):
        """Two concepts: same-concept mean (0 + 1/2)/2, cross-concept mean 1."""
        list_a = WordList("a", {"1": "ab", "2": "cd"})
        list_b = WordList("b", {"1": "ab", "2": "ce"})
        # oracle: enumerate every pair by brute force
        same = [ldn("ab", "ab"), ldn("cd", "ce")]
        cross = [ldn("ab", "ce"), ldn("cd", "ab")]
        expected = (sum(same) / 2) / (sum(cross) / 2)
        assert expected == 0.25
        assert ldnd(list_a, list_b) == pytest.approx(0.25)

    def test_concept_relabeling_invariance(self):
        list_a = WordList("a", {"1": "abc", "2": "de", "3": "fgh"})
        list_b = WordList("b", {"1": "abd", "2": "xe", "3": "fgg"})
        relabel = {"1": "z9", "2": "q4", "3": "m2"}
        ra = WordList("a", {relabel[c]: w for c, w in list_a.entries.items()})
        rb = WordList("b", {relabel[c]: w for c, w in list_b.entries.items()})
        assert ldnd(list_a, list_b) == pytest.approx(ldnd(ra, rb))

    def test_insufficient_shared_concepts(self):
        with pytest.raises(ValidationError):
            ldnd(WordList("a", {"1": "x"}), WordList("b", {"1": "y"}))
        with pytest.raises(ValidationError):
            ldnd(WordList("a", {"1": "x", "2": "y"}), WordList("b", {"3": "z", "4": "w"}))

    def test_zero_normalizer_rejected(self):
        # every cross-concept pair identical -> normalizer 0
        list_a = WordList("a", {"1": "aa", "2": "aa"})
        list_b = WordList("b", {"1": "aa", "2": "aa"})
        with pytest.raises(ValidationError):
            ldnd(list_a, list_b)


class TestWordList:
    def test_empty_word_rejected(self):
        with pytest.raises(ValidationError):
            WordList("x", {"1": "   "})

    def test_tsv_round_trip(self, tmp_path):
        path = tmp_path / "de.tsv"
        path.write_text("1\thand\n2\tfuß\n", encoding="utf-8")
        wl = read_wordlist_tsv(path)
        assert wl.language_id == "de"
        assert wl.entries == {"1": "hand", "2": "fuß"}

    def test_tsv_duplicate_concept_rejected(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("1\ta\n1\tb\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            read_wordlist_tsv(path)

    def test_fold_case(self):
        wl = WordList("x", {"1": "AbC"})
        assert wl.folded().entries["1"] == "abc"
