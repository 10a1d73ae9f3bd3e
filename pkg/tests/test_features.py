import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tweetcheck.corpus import UserProfile
from tweetcheck.exceptions import FeatureError, MissingFamilyError
from tweetcheck.features import (
    FAMILY_ORDER,
    TEXT_FEATURE_NAMES,
    USER_FEATURE_NAMES,
    FeatureVector,
    apply_scaler,
    assemble_feature_vector,
    extract_text_features,
    extract_user_features,
    feature_label_correlation,
    fit_scaler,
    layout_hash,
    scale_matrix,
)

from conftest import make_record

UTC = timezone.utc


class TestTextFeatures:
    def test_counts(self):
        rec = make_record(1, text="Is this REAL?? Yes!!", retweet_count=5, favourite_count=9)
        tf = extract_text_features(rec)
        assert tf.n_upper == 6
        assert tf.n_question == 2
        assert tf.n_exclaim == 2
        assert tf.retweet_count == 5
        assert tf.favourite_count == 9

    def test_single_char_text_zeroes(self):
        rec = make_record(1, text="x")
        tf = extract_text_features(rec)
        assert tf.values() == (0.0, 0.0, 0.0, 0.0, 0.0)

    def test_bengali_has_no_uppercase(self):
        rec = make_record(1, text="করোনা ভাইরাস সতর্কতা")
        assert extract_text_features(rec).n_upper == 0

    def test_values_order_matches_names(self):
        rec = make_record(1, text="A?b!", retweet_count=7, favourite_count=3)
        tf = extract_text_features(rec)
        assert dict(zip(TEXT_FEATURE_NAMES, tf.values())) == {
            "retweet_count": 7.0,
            "favourite_count": 3.0,
            "n_upper": 1.0,
            "n_question": 1.0,
            "n_exclaim": 1.0,
        }


def profile(**kwargs) -> UserProfile:
    defaults = dict(
        handle="amarazad",
        real_name="Amar Azad",
        description="",
        created_at=datetime(2019, 1, 1, tzinfo=UTC),
    )
    defaults.update(kwargs)
    return UserProfile(**defaults)


class TestUserFeatures:
    AS_OF = datetime(2020, 1, 1, tzinfo=UTC)

    def test_nineteen_features_in_order(self):
        uf = extract_user_features(profile(), self.AS_OF)
        assert len(USER_FEATURE_NAMES) == 19
        assert len(uf.values()) == 19

    def test_num_matches_multiset_intersection(self):
        uf = extract_user_features(profile(), self.AS_OF)
        assert uf.num_matches == 8

    def test_acc_life_and_posting_frequency(self):
        uf = extract_user_features(profile(statuses_count=730), self.AS_OF)
        assert uf.acc_life == 365
        assert uf.posting_frequency == 2.0

    def test_follower_friends_ratio_zero_guard(self):
        uf = extract_user_features(profile(followers_count=1000, friends_count=0), self.AS_OF)
        assert uf.follower_friends_ratio == 1000.0

    def test_avg_likes_zero_guard(self):
        uf = extract_user_features(profile(favourites_count=50, statuses_count=0), self.AS_OF)
        assert uf.avg_likes_per_tweet == 50.0

    def test_activity_from_latest_tweet(self):
        p = profile(latest_tweet_at=datetime(2019, 12, 22, tzinfo=UTC))
        uf = extract_user_features(p, self.AS_OF)
        assert uf.activity == 10

    def test_activity_defaults_to_acc_life(self):
        uf = extract_user_features(profile(), self.AS_OF)
        assert uf.activity == uf.acc_life == 365

    def test_url_counting_and_official_url(self):
        p = profile(
            description="news at https://example.org and www.example.com daily",
            official_url="https://example.org",
        )
        uf = extract_user_features(p, self.AS_OF)
        assert uf.total_urls_in_desc == 2
        assert uf.official_url_exists == 1

    def test_as_of_before_creation_errors(self):
        with pytest.raises(FeatureError):
            extract_user_features(profile(), datetime(2018, 1, 1, tzinfo=UTC))

    def test_all_finite_on_extreme_inputs(self):
        p = profile(
            followers_count=10**9,
            friends_count=0,
            statuses_count=0,
            favourites_count=10**9,
        )
        uf = extract_user_features(p, self.AS_OF)
        assert all(math.isfinite(v) for v in uf.values())


class TestScaler:
    def test_two_point_column(self):
        s = fit_scaler(np.array([[0.0], [2.0]]))
        assert s.mean == (1.0,)
        assert s.std == (1.0,)
        out = scale_matrix(s, np.array([[0.0], [2.0]]))
        assert out.tolist() == [[-1.0], [1.0]]

    def test_constant_column_flagged_and_unchanged(self):
        s = fit_scaler(np.array([[5.0], [5.0], [5.0]]))
        assert s.constant == (True,)
        out = scale_matrix(s, np.array([[5.0], [5.0]]))
        assert out.tolist() == [[5.0], [5.0]]

    def test_dimension_mismatch(self):
        s = fit_scaler(np.array([[0.0, 1.0], [1.0, 2.0]]))
        fv = FeatureVector(("FactVer.score",), (0.5,))
        with pytest.raises(FeatureError):
            apply_scaler(s, fv)

    def test_train_matrix_standardized(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(40, 6)) * [1, 5, 0.1, 9, 2, 3] + [0, -4, 2, 1, 0, 8]
        s = fit_scaler(X)
        out = scale_matrix(s, X)
        assert np.allclose(out.mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(out.std(axis=0), 1.0, atol=1e-9)

    def test_round_trip_dict(self):
        from tweetcheck.features import Scaler

        s = fit_scaler(np.array([[1.0, 5.0], [3.0, 5.0]]))
        assert Scaler.from_dict(s.to_dict()) == s


class TestAssemble:
    def test_embedding_plus_user(self):
        fv = assemble_feature_vector(
            {"TextEmbd": [0.0] * 768, "tweetuser": list(range(19))},
            families=("TextEmbd", "tweetuser"),
        )
        assert len(fv) == 787

    def test_embedding_only_width(self):
        fv = assemble_feature_vector({"TextEmbd": [0.1] * 768})
        assert len(fv) == 768

    def test_missing_family(self):
        with pytest.raises(MissingFamilyError, match="Bias"):
            assemble_feature_vector({"TextEmbd": [0.0] * 4}, families=("TextEmbd", "Bias"))

    def test_nan_rejected(self):
        with pytest.raises(FeatureError):
            assemble_feature_vector({"FactVer": [float("nan")]})

    def test_canonical_order_independent_of_dict_order(self):
        parts = {"Bias": [0.5], "TextEmbd": [1.0, 2.0], "FactVer": [0.25]}
        fv = assemble_feature_vector(parts)
        assert fv.layout == ("TextEmbd[0]", "TextEmbd[1]", "FactVer.score", "Bias.score")
        assert fv.values == (1.0, 2.0, 0.25, 0.5)

    def test_layout_hash_stable(self):
        a = layout_hash(("TextEmbd[0]", "Bias.score"))
        b = layout_hash(("TextEmbd[0]", "Bias.score"))
        assert a == b and len(a) == 16
        assert layout_hash(("Bias.score",)) != a

    def test_wrong_family_width(self):
        with pytest.raises(FeatureError):
            assemble_feature_vector({"tweettext": [1.0, 2.0]})


class TestCorrelation:
    def test_feature_equal_to_label(self):
        y = [0, 1, 0, 1, 1, 0]
        X = np.array(y, dtype=float).reshape(-1, 1)
        report = feature_label_correlation(X, y)
        assert report.entries[0].coefficient == pytest.approx(1.0)

    def test_feature_inverse_of_label(self):
        y = [0, 1, 0, 1, 1, 0]
        X = 1.0 - np.array(y, dtype=float).reshape(-1, 1)
        report = feature_label_correlation(X, y)
        assert report.entries[0].coefficient == pytest.approx(-1.0)

    def test_constant_feature_flagged_zero(self):
        y = [0, 1, 0, 1]
        X = np.full((4, 1), 3.5)
        report = feature_label_correlation(X, y)
        assert report.entries[0].coefficient == 0.0
        assert report.entries[0].constant

    def test_all_same_labels_error(self):
        with pytest.raises(FeatureError):
            feature_label_correlation(np.zeros((3, 1)), [1, 1, 1])

    @settings(max_examples=60)
    @given(
        data=st.lists(
            st.tuples(st.floats(-100, 100), st.integers(0, 1)), min_size=4, max_size=40
        ),
        scale=st.floats(0.01, 50),
        shift=st.floats(-100, 100),
    )
    def test_bounds_and_positive_affine_invariance(self, data, scale, shift):
        y = [label for _, label in data]
        if len(set(y)) < 2:
            return
        col = np.array([v for v, _ in data])
        X = col.reshape(-1, 1)
        r1 = feature_label_correlation(X, y).entries[0]
        r2 = feature_label_correlation(X * scale + shift, y).entries[0]
        assert -1.0 <= r1.coefficient <= 1.0
        if not r1.constant:
            assert r2.coefficient == pytest.approx(r1.coefficient, abs=1e-6)

    def test_render_table(self):
        y = [0, 1, 0, 1]
        X = np.array([[0.0, 7.0], [1.0, 7.0], [0.0, 7.0], [1.0, 7.0]])
        table = feature_label_correlation(X, y, names=("hit", "flat")).render_table()
        assert "hit" in table and "(constant)" in table
