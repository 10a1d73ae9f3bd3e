import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tweetcheck.factver import (
    FactVerScore,
    TrustedDoc,
    TrustedIndex,
    factver_score,
    levenshtein,
    load_index,
    normalized_distance,
    retrieve_titles,
)
from tweetcheck.exceptions import DatasetError


def oracle_levenshtein(a: str, b: str) -> int:
    """Independent full-matrix DP oracle."""
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        table[i][0] = i
    for j in range(m + 1):
        table[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + cost,
            )
    return table[n][m]


MIXED_ALPHABET = "abcxyz कोरोना ভাইরাস αβ😀!?"


class TestLevenshtein:
    def test_all_insertions(self):
        assert levenshtein("", "abcd") == 4

    def test_identity(self):
        assert levenshtein("abc", "abc") == 0

    def test_kitten_sitting(self):
        assert oracle_levenshtein("kitten", "sitting") == 3
        assert levenshtein("kitten", "sitting") == 3

    def test_against_oracle_random(self):
        rng = random.Random(5)
        for _ in range(300):
            a = "".join(rng.choice(MIXED_ALPHABET) for _ in range(rng.randint(0, 12)))
            b = "".join(rng.choice(MIXED_ALPHABET) for _ in range(rng.randint(0, 12)))
            assert levenshtein(a, b) == oracle_levenshtein(a, b)

    @settings(max_examples=150)
    @given(st.text(max_size=12), st.text(max_size=12), st.text(max_size=12))
    def test_metric_properties(self, a, b, c):
        d_ab = levenshtein(a, b)
        assert d_ab == levenshtein(b, a)
        assert (d_ab == 0) == (a == b)
        assert d_ab <= levenshtein(a, c) + levenshtein(c, b)


class TestNormalizedDistance:
    def test_identical(self):
        assert normalized_distance("abc", "abc") == 0.0

    def test_empty_vs_nonempty(self):
        assert normalized_distance("", "abcd") == 1.0

    def test_both_empty(self):
        assert normalized_distance("", "") == 0.0

    def test_kitten_sitting_fraction(self):
        expected = oracle_levenshtein("kitten", "sitting") / 7
        assert normalized_distance("kitten", "sitting") == pytest.approx(expected)
        assert normalized_distance("kitten", "sitting") == pytest.approx(3 / 7)

    @settings(max_examples=100)
    @given(st.text(max_size=15), st.text(max_size=15))
    def test_bounded(self, a, b):
        assert 0.0 <= normalized_distance(a, b) <= 1.0


def make_index(titles, domain="trusted.example"):
    docs = [TrustedDoc(title=t, url=f"https://{domain}/item{i}") for i, t in enumerate(titles)]
    return TrustedIndex.build(docs, [domain])


class TestRetrieval:
    def test_exact_title_ranks_first(self):
        idx = make_index(["covid vaccine trial", "something else entirely"])
        assert retrieve_titles("covid vaccine trial", idx, k=2)[0] == "covid vaccine trial"

    def test_empty_index(self):
        idx = TrustedIndex.build([], ["trusted.example"])
        assert retrieve_titles("anything", idx, k=5) == []

    def test_overlap_ranking_hand_evaluated(self):
        # shares 2, 1, 0 tokens with the query -> jaccard 0.5, 0.2, 0
        idx = make_index(
            ["covid vaccine works", "covid cases rise", "weather sunny today"]
        )
        got = retrieve_titles("covid vaccine trial", idx, k=2)
        assert got == ["covid vaccine works", "covid cases rise"]

    def test_zero_overlap_never_retrieved(self):
        idx = make_index(["weather sunny today"])
        assert retrieve_titles("covid vaccine trial", idx, k=3) == []

    def test_tie_breaks_by_index_order(self):
        idx = make_index(["covid alpha", "covid beta"])
        assert retrieve_titles("covid", idx, k=2) == ["covid alpha", "covid beta"]

    def test_allowlist_filters_documents(self):
        docs = [
            TrustedDoc("covid story", "https://trusted.example/a"),
            TrustedDoc("covid story offsite", "https://shady.example/a"),
        ]
        idx = TrustedIndex.build(docs, ["trusted.example"])
        assert len(idx) == 1
        assert idx.dropped == 1
        assert retrieve_titles("covid", idx, k=5) == ["covid story"]

    def test_subdomain_allowed(self):
        docs = [TrustedDoc("covid story", "https://news.trusted.example/x")]
        idx = TrustedIndex.build(docs, ["trusted.example"])
        assert len(idx) == 1

    def test_empty_title_rejected(self):
        with pytest.raises(DatasetError):
            TrustedIndex.build([TrustedDoc("  ", "https://trusted.example/x")], ["trusted.example"])


class TestFactVerScore:
    def test_identical_title(self):
        idx = make_index(["covid vaccine trial"])
        result = factver_score("covid vaccine trial", idx, k=10)
        assert result.score == 0.0
        assert result.k_used == 1

    def test_empty_index_max_distance(self):
        idx = TrustedIndex.build([], ["trusted.example"])
        result = factver_score("anything here", idx, k=10)
        assert result == FactVerScore(score=1.0, k_used=0, matched_titles=())

    def test_mean_of_two_constructed_distances(self):
        text = "ab cdefghi"
        t1 = "ab cdefgxx"  # 2 edits / 10 chars = 0.2
        t2 = "ab cyzuvwx"  # 6 edits / 10 chars = 0.6
        assert oracle_levenshtein(text, t1) == 2
        assert oracle_levenshtein(text, t2) == 6
        idx = make_index([t1, t2])
        result = factver_score(text, idx, k=2)
        assert result.k_used == 2
        assert result.score == pytest.approx(0.4)

    def test_k_validation(self):
        idx = make_index(["a b"])
        with pytest.raises(Exception):
            factver_score("a b", idx, k=0)

    def test_score_bounded(self):
        idx = make_index(["covid x", "covid aaaaaaaaaaaaaaaaaaaaaa bbbb"])
        for text in ("covid", "covid y z", "covid covid covid"):
            assert 0.0 <= factver_score(text, idx, k=5).score <= 1.0

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_adding_identical_title_never_increases_score(self, k):
        base_titles = ["covid numbers rising fast", "covid response slow"]
        text = "covid numbers dropping"
        before = factver_score(text, make_index(base_titles), k=k).score
        after = factver_score(text, make_index(base_titles + [text]), k=k).score
        assert after <= before

    def test_load_index_files(self, tmp_path):
        index_file = tmp_path / "index.jsonl"
        index_file.write_text(
            '{"title": "covid update", "url": "https://trusted.example/1"}\n'
            '{"title": "offsite", "url": "https://other.example/1"}\n',
            encoding="utf-8",
        )
        allow_file = tmp_path / "allow.txt"
        allow_file.write_text("# trusted sources\ntrusted.example\n", encoding="utf-8")
        idx = load_index(index_file, allow_file)
        assert len(idx) == 1
        assert idx.dropped == 1
