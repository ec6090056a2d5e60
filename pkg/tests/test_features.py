import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from viewrank.dataset import PostRecord, UserAggregate
from viewrank.errors import NegativeInput, TooFewRows
from viewrank.features import (
    FeatureTable,
    apply_standardizer,
    extract_features,
    fit_standardizer,
    inverse_log_scale,
    log_scale,
    read_feature_csv,
    write_feature_csv,
)


def make_user(likes, comments, followers, total=None):
    posts = tuple(PostRecord("u", f"p{i}", l, c, 100) for i, (l, c) in enumerate(zip(likes, comments)))
    return UserAggregate("u", followers, posts, total or len(posts))


class TestLogScale:
    def test_clamp_at_one(self):
        assert log_scale(1) == 1.0

    def test_boundary_e(self):
        assert log_scale(math.e) == pytest.approx(2.718281828, abs=1e-9)

    def test_hundred(self):
        # 100 / ln(100), evaluated independently
        assert log_scale(100) == pytest.approx(21.71472409516259, rel=1e-12)

    def test_zero_and_negative(self):
        assert log_scale(0) == 0.0
        with pytest.raises(NegativeInput):
            log_scale(-1)

    @given(st.floats(0, 1e12), st.floats(0, 1e12))
    def test_monotone(self, x, y):
        x, y = sorted((x, y))
        assert log_scale(x) <= log_scale(y)
        if x > math.e and y > x * (1 + 1e-9):
            assert log_scale(x) < log_scale(y)

    @given(st.floats(0, 1e9))
    def test_inverse(self, x):
        assert inverse_log_scale(log_scale(x)) == pytest.approx(x, rel=1e-9, abs=1e-9)


class TestExtract:
    def test_worked_example(self):
        # engagements per post 30, 70, 60, 60; mean likes 50, mean comments 5
        user = make_user([27, 63, 55, 55], [3, 7, 5, 5], 450, total=10)
        fv = extract_features(user)
        assert fv.likes_avg == 50
        assert fv.comments_avg == 5
        assert fv.geo_mean_likes_followers == 150.0
        assert fv.followers_per_post == 45.0
        assert fv.comments_per_likes == pytest.approx(0.1)
        assert fv.focus_diff == 40
        assert fv.focus_ratio == pytest.approx(70 / 30)

    def test_constant_engagement(self):
        fv = extract_features(make_user([5, 5, 5], [1, 1, 1], 10))
        assert fv.focus_diff == 0
        assert fv.focus_ratio == 1

    def test_zero_likes(self):
        fv = extract_features(make_user([0, 0], [0, 0], 10))
        assert fv.comments_per_likes == 0
        assert fv.geo_mean_likes_followers == 0
        # zero least-engaged post -> max + 1
        assert fv.focus_ratio == 1.0

    def test_zero_min_engagement_ratio(self):
        fv = extract_features(make_user([0, 9], [0, 1], 10))
        assert fv.focus_ratio == 11.0

    @given(
        st.lists(st.tuples(st.integers(0, 5000), st.integers(0, 500)), min_size=1, max_size=30),
        st.integers(0, 10**7),
        st.randoms(),
    )
    def test_properties(self, rows, followers, rnd):
        likes, comments = map(list, zip(*rows))
        user = make_user(likes, comments, followers)
        raw = extract_features(user)
        assert raw.geo_mean_likes_followers**2 == pytest.approx(raw.likes_avg * raw.followers, rel=1e-9)
        assert raw.focus_diff >= 0 and raw.focus_ratio >= 1
        # permutation invariance
        rnd.shuffle(rows)
        likes2, comments2 = map(list, zip(*rows))
        assert extract_features(make_user(likes2, comments2, followers)) == pytest.approx(raw)
        # transform commutes with extraction
        scaled = extract_features(user, transform_scales=True)
        assert scaled.likes_avg == log_scale(raw.likes_avg)
        assert scaled.followers == log_scale(raw.followers)
        assert scaled.geo_mean_likes_followers == raw.geo_mean_likes_followers


class TestStandardizer:
    def test_two_rows(self):
        params = fit_standardizer([[1.0], [3.0]])
        assert params.mean[0] == 2.0
        assert params.std[0] == pytest.approx(math.sqrt(2))
        np.testing.assert_allclose(apply_standardizer(params, [[1.0], [3.0]]).ravel(),
                                   [-1 / math.sqrt(2), 1 / math.sqrt(2)])

    def test_constant_column(self):
        params = fit_standardizer([[5.0], [5.0], [5.0]])
        np.testing.assert_array_equal(apply_standardizer(params, [[5.0], [5.0], [5.0]]), 0.0)

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            fit_standardizer([[1.0, 2.0]])

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        M = rng.lognormal(size=(50, 6)) * rng.uniform(1, 1e4, 6)
        Z = apply_standardizer(fit_standardizer(M), M)
        np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(Z.std(axis=0, ddof=1), 1, atol=1e-9)


def test_feature_csv_round_trip():
    rng = np.random.default_rng(3)
    table = FeatureTable([f"u{i}" for i in range(5)], rng.normal(size=(5, 8)), rng.normal(size=5))
    buf = io.StringIO()
    write_feature_csv(table, buf)
    assert buf.getvalue().splitlines()[0] == (
        "user_id,likes_avg,comments_avg,followers,geo_mean,followers_per_post,"
        "comments_per_likes,focus_diff,focus_ratio,influence"
    )
    back = read_feature_csv(io.StringIO(buf.getvalue()))
    assert back.user_ids == table.user_ids
    np.testing.assert_array_equal(back.X, table.X)
    np.testing.assert_array_equal(back.influence, table.influence)
