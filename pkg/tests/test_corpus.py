import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tweetcheck.corpus import (
    SCHEMA_VERSION,
    Dataset,
    TweetRecord,
    UserProfile,
    load_dataset,
    preprocess_text,
    save_dataset,
    split_dataset,
)
from tweetcheck.exceptions import DatasetError, SchemaVersionError, SplitError

from conftest import make_record, simple_row, write_lines


class TestPreprocess:
    def test_hashtags_tags_urls_removed(self):
        assert preprocess_text("Check #covid @WHO https://t.co/x NOW") == "check now"

    def test_non_latin_untouched(self):
        assert preprocess_text("корона") == "корона"

    def test_all_tokens_removed(self):
        assert preprocess_text("#a #b @c") == ""

    def test_www_prefix_removed(self):
        assert preprocess_text("see www.example.com now") == "see now"

    def test_mid_token_scheme_removed(self):
        assert preprocess_text("foohttp://x.y rest") == "foo rest"

    def test_hashtagged_url_removed_entirely(self):
        assert preprocess_text("#http://x.com text") == "text"

    def test_devanagari_bengali_identity(self):
        assert preprocess_text("कोरोना वायरस") == "कोरोना वायरस"
        assert preprocess_text("করোনা ভাইরাস") == "করোনা ভাইরাস"

    def test_whitespace_collapsed(self):
        assert preprocess_text("  a \t b\n\nc ") == "a b c"

    @settings(max_examples=200)
    @given(st.text(max_size=60))
    def test_idempotent(self, text):
        once = preprocess_text(text)
        assert preprocess_text(once) == once


class TestRecordValidation:
    def test_label_domain(self):
        with pytest.raises(ValueError):
            make_record(1, label=2)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            make_record(1, retweet_count=-1)

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            make_record(1, text="  ​ ".replace("​", " "))

    def test_user_timestamps_ordered(self):
        with pytest.raises(ValueError):
            UserProfile(
                handle="h",
                created_at=datetime(2021, 1, 1, tzinfo=timezone.utc),
                latest_tweet_at=datetime(2020, 1, 1, tzinfo=timezone.utc),
            )

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DatasetError, match="duplicate"):
            Dataset((make_record(1), make_record(1)))


class TestLoad:
    def test_table_scale_hindi_tallies(self, tmp_path):
        # 454 Hindi rows: 192 fake, 262 non-fake
        rows = [simple_row(i, lang="hi", label=1) for i in range(192)]
        rows += [simple_row(i + 192, lang="hi", label=0) for i in range(262)]
        path = write_lines(tmp_path / "hi.jsonl", rows)
        ds = load_dataset(path)
        assert len(ds) == 454
        assert ds.counts() == {"hi": {"fake": 192, "non_fake": 262}}

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        ds = load_dataset(path)
        assert len(ds) == 0
        assert ds.counts() == {}

    def test_missing_label_names_line_and_field(self, tmp_path):
        row = simple_row(1)
        del row["label"]
        path = write_lines(tmp_path / "bad.jsonl", [row])
        with pytest.raises(DatasetError) as err:
            load_dataset(path)
        assert "line 1" in str(err.value)
        assert "label" in str(err.value)

    def test_schema_mismatch(self, tmp_path):
        path = write_lines(tmp_path / "old.jsonl", [{"schema": "tweets-v0", **simple_row(1)}], stamp_schema=False)
        with pytest.raises(SchemaVersionError):
            load_dataset(path)

    def test_unknown_label_value(self, tmp_path):
        path = write_lines(tmp_path / "bad.jsonl", [simple_row(1, label=3)])
        with pytest.raises(DatasetError, match="label"):
            load_dataset(path)

    def test_unknown_lang(self, tmp_path):
        path = write_lines(tmp_path / "bad.jsonl", [simple_row(1, lang="xx")])
        with pytest.raises(DatasetError, match="lang"):
            load_dataset(path)

    def test_duplicate_id(self, tmp_path):
        path = write_lines(tmp_path / "dup.jsonl", [simple_row(1), simple_row(1)])
        with pytest.raises(DatasetError, match="duplicate"):
            load_dataset(path)

    def test_all_problems_reported_with_line_numbers(self, tmp_path):
        bad1 = simple_row(1, label=5)
        bad2 = simple_row(2)
        del bad2["text"]
        path = write_lines(tmp_path / "multi.jsonl", [simple_row(0), bad1, bad2])
        with pytest.raises(DatasetError) as err:
            load_dataset(path)
        message = str(err.value)
        assert "line 2" in message and "line 3" in message

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "nope.jsonl")

    def test_user_profile_parsed(self, tmp_path):
        row = simple_row(1)
        row["user"] = {
            "handle": "amarazad",
            "real_name": "Amar Azad",
            "followers_count": 10,
            "created_at": "2019-01-01T00:00:00+00:00",
        }
        path = write_lines(tmp_path / "user.jsonl", [row])
        ds = load_dataset(path)
        assert ds.records[0].user.handle == "amarazad"
        assert ds.records[0].user.followers_count == 10

    def test_round_trip(self, tmp_path):
        rows = [
            simple_row(1, retweet_count=3, favourite_count=9, source="translated", origin_id="en-0001"),
            simple_row(2, lang="bn", label=1),
        ]
        rows[1]["user"] = {"handle": "h", "created_at": "2020-01-01T00:00:00+00:00"}
        first = write_lines(tmp_path / "a.jsonl", rows)
        ds1 = load_dataset(first)
        save_dataset(ds1, tmp_path / "b.jsonl")
        ds2 = load_dataset(tmp_path / "b.jsonl")
        assert ds1.records == ds2.records
        # canonical form is a fixed point byte-for-byte
        save_dataset(ds2, tmp_path / "c.jsonl")
        assert (tmp_path / "b.jsonl").read_bytes() == (tmp_path / "c.jsonl").read_bytes()


class TestSplit:
    def test_balanced_100(self):
        ds = Dataset(tuple(make_record(i, label=i % 2) for i in range(100)))
        train, test = split_dataset(ds, 0.8, seed=42)
        assert len(train) == 80 and len(test) == 20
        assert sum(r.label for r in train) == 40
        assert sum(r.label for r in test) == 10

    def test_deterministic(self):
        ds = Dataset(tuple(make_record(i, label=i % 2) for i in range(50)))
        a = split_dataset(ds, 0.8, seed=9)
        b = split_dataset(ds, 0.8, seed=9)
        assert [r.id for r in a.train] == [r.id for r in b.train]
        assert [r.id for r in a.test] == [r.id for r in b.test]

    def test_english_504_rounding(self):
        # 199 fake + 305 non-fake; per-stratum floor for test, remainder to train
        ds = Dataset(
            tuple(make_record(i, label=1) for i in range(199))
            + tuple(make_record(i + 199, label=0) for i in range(305))
        )
        train, test = split_dataset(ds, 0.8, seed=0)
        assert len(train) == 404
        assert len(test) == 100

    def test_small_stratum_errors_with_name(self):
        ds = Dataset((make_record(0, label=0), make_record(1, label=0), make_record(2, label=1)))
        with pytest.raises(SplitError, match="label=1"):
            split_dataset(ds, 0.8, seed=1)

    @pytest.mark.parametrize("seed", [0, 1, 7, 13, 99])
    def test_partition_properties(self, seed):
        ds = Dataset(
            tuple(make_record(i, lang=lang, label=i % 2) for lang in ("en", "hi") for i in range(37))
        )
        train, test = split_dataset(ds, 0.8, seed=seed)
        train_ids = {r.id for r in train}
        test_ids = {r.id for r in test}
        assert train_ids.isdisjoint(test_ids)
        assert train_ids | test_ids == {r.id for r in ds}

    @pytest.mark.parametrize("fraction", [0.5, 0.7, 0.8, 0.9])
    def test_per_stratum_proportion_within_one_record(self, fraction):
        ds = Dataset(
            tuple(make_record(i, lang=lang, label=i % 2) for lang in ("en", "hi") for i in range(41))
        )
        train, _ = split_dataset(ds, fraction, seed=3)
        for lang in ("en", "hi"):
            for label in (0, 1):
                total = sum(1 for r in ds if r.lang == lang and r.label == label)
                got = sum(1 for r in train if r.lang == lang and r.label == label)
                assert abs(got - fraction * total) <= 1.0

    def test_invalid_fraction(self):
        ds = Dataset((make_record(0), make_record(1)))
        with pytest.raises(SplitError):
            split_dataset(ds, 1.0, seed=0)

    def test_empty_dataset(self):
        with pytest.raises(SplitError):
            split_dataset(Dataset(()), 0.8, seed=0)

    def test_origin_groups_stay_together(self):
        records = []
        for i in range(40):
            records.append(make_record(i, lang="en", label=i % 2))
        # translated duplicates tied to the first ten English rows
        for i in range(10):
            records.append(
                make_record(
                    i,
                    lang="bn",
                    label=i % 2,
                    id=f"bn-{i:04d}",
                    source="translated",
                    origin_id=f"en-{i:04d}",
                )
            )
        for i in range(10, 40):
            records.append(make_record(i, lang="bn", label=i % 2, id=f"bn-{i:04d}"))
        ds = Dataset(tuple(records))
        for seed in range(10):
            result = split_dataset(ds, 0.8, seed=seed)
            partition = {r.id: "train" for r in result.train}
            partition.update({r.id: "test" for r in result.test})
            for i in range(10):
                assert partition[f"en-{i:04d}"] == partition[f"bn-{i:04d}"]
            for key in result.forced_groups:
                group = [r.id for r in ds if r.origin_key == key]
                assert all(partition[g] == "train" for g in group)
