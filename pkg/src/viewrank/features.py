"""Per-user predictors, the x / ln x scale transform and column standardization."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from typing import IO

import numpy as np
from scipy.special import lambertw

from .errors import DataError, EmptyPosts, NegativeInput, TooFewRows

FEATURE_NAMES = (
    "likes_avg",
    "comments_avg",
    "followers",
    "geo_mean_likes_followers",
    "followers_per_post",
    "comments_per_likes",
    "focus_diff",
    "focus_ratio",
)
# column names used in the feature-matrix CSV
CSV_FEATURE_COLUMNS = (
    "likes_avg",
    "comments_avg",
    "followers",
    "geo_mean",
    "followers_per_post",
    "comments_per_likes",
    "focus_diff",
    "focus_ratio",
)
SCALED_FEATURES = ("likes_avg", "followers")
LIKES = FEATURE_NAMES.index("likes_avg")
FOLLOWERS = FEATURE_NAMES.index("followers")


@dataclass(frozen=True)
class FeatureVector:
    likes_avg: float
    comments_avg: float
    followers: float
    geo_mean_likes_followers: float
    followers_per_post: float
    comments_per_likes: float
    focus_diff: float
    focus_ratio: float

    def to_array(self):
        return np.array(astuple(self), dtype=np.float64)


def log_scale(x):
    """``x / max(1, ln x)``.

    Tames exponentially growing statistics while staying continuous and
    monotone; equals ``x`` on ``[0, e]``.  Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise NegativeInput("log_scale is defined for non-negative inputs only")
    with np.errstate(divide="ignore"):
        denom = np.maximum(1.0, np.log(arr))
    out = arr / denom
    return float(out) if out.ndim == 0 else out


def inverse_log_scale(y):
    """Inverse of :func:`log_scale` (uses the lower Lambert-W branch above e)."""
    arr = np.asarray(y, dtype=np.float64)
    if np.any(arr < 0):
        raise NegativeInput("inverse_log_scale is defined for non-negative inputs only")
    out = arr.copy()
    big = arr > math.e
    if np.any(big):
        out[big] = np.exp(-lambertw(-1.0 / arr[big], k=-1).real)
    return float(out) if out.ndim == 0 else out


def extract_features(user, transform_scales: bool = False) -> FeatureVector:
    """Compute the eight per-user predictors from a user's retained posts.

    Ratios and the geometric mean always use raw values; with
    ``transform_scales`` the likes and followers entries are passed through
    :func:`log_scale` afterwards.
    """
    posts = user.posts
    n = len(posts)
    if n == 0:
        raise EmptyPosts(f"user {user.user_id!r} has no posts")
    likes_avg = sum(p.likes for p in posts) / n
    comments_avg = sum(p.comments for p in posts) / n
    followers = float(user.followers)
    engagement = [p.likes + p.comments for p in posts]
    hi, lo = max(engagement), min(engagement)

    geo_mean = math.sqrt(likes_avg * followers)
    followers_per_post = followers / user.post_count_total
    comments_per_likes = comments_avg / likes_avg if likes_avg > 0 else 0.0
    focus_ratio = hi / lo if lo > 0 else hi + 1.0
    if transform_scales:
        likes_avg = log_scale(likes_avg)
        followers = log_scale(followers)
    return FeatureVector(
        likes_avg=likes_avg,
        comments_avg=comments_avg,
        followers=followers,
        geo_mean_likes_followers=geo_mean,
        followers_per_post=followers_per_post,
        comments_per_likes=comments_per_likes,
        focus_diff=float(hi - lo),
        focus_ratio=float(focus_ratio),
    )


def feature_matrix(users, transform_scales=False):
    """Stack :func:`extract_features` rows into an ``(n, 8)`` array."""
    if len(users) == 0:
        return np.empty((0, len(FEATURE_NAMES)))
    return np.vstack([extract_features(u, transform_scales).to_array() for u in users])


def scale_columns(X):
    """Apply :func:`log_scale` to the likes and followers columns of a raw matrix."""
    X = np.array(X, dtype=np.float64, copy=True)
    X[:, LIKES] = log_scale(X[:, LIKES])
    X[:, FOLLOWERS] = log_scale(X[:, FOLLOWERS])
    return X


# ---------------------------------------------------------------------------
# standardization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StandardizationParams:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self):
        return {"mean": [float(v) for v in self.mean], "std": [float(v) for v in self.std]}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"], dtype=np.float64), np.array(d["std"], dtype=np.float64))


def fit_standardizer(matrix) -> StandardizationParams:
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows("standardizer needs a 2-D matrix with at least 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    std = np.where(std < 1e-12, 1.0, std)
    return StandardizationParams(mean=mean, std=std)


def apply_standardizer(params: StandardizationParams, matrix):
    X = np.asarray(matrix, dtype=np.float64)
    if X.shape[-1] != params.mean.shape[0]:
        raise DataError(f"matrix has {X.shape[-1]} columns, standardizer expects {params.mean.shape[0]}")
    return (X - params.mean) / params.std


# ---------------------------------------------------------------------------
# feature table I/O
# ---------------------------------------------------------------------------


@dataclass
class FeatureTable:
    """Raw feature matrix for a set of users, aligned with their targets.

    ``X`` always holds untransformed values; models apply the scale
    transform themselves so one table serves both baselines and models.
    """

    user_ids: list
    X: np.ndarray
    influence: np.ndarray

    def __len__(self):
        return len(self.user_ids)

    @property
    def followers(self):
        return self.X[:, FOLLOWERS]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureTable(
            [self.user_ids[i] for i in idx], self.X[idx].copy(), self.influence[idx].copy()
        )

    @classmethod
    def from_dataset(cls, dataset):
        users = dataset.users
        return cls(
            [u.user_id for u in users],
            feature_matrix(users, transform_scales=False),
            np.array([u.influence for u in users], dtype=np.float64),
        )


def write_feature_csv(table: FeatureTable, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["user_id", *CSV_FEATURE_COLUMNS, "influence"])
    for uid, row, inf in zip(table.user_ids, table.X, table.influence):
        writer.writerow([uid, *(repr(float(v)) for v in row), repr(float(inf))])


def read_feature_csv(stream: IO[str]) -> FeatureTable:
    reader = csv.DictReader(stream)
    expected = ["user_id", *CSV_FEATURE_COLUMNS]
    if reader.fieldnames is None or not set(expected) <= set(reader.fieldnames):
        raise DataError("feature CSV header must contain " + ",".join(expected))
    ids, rows, infl = [], [], []
    for row in reader:
        try:
            rows.append([float(row[c]) for c in CSV_FEATURE_COLUMNS])
            infl.append(float(row["influence"]) if row.get("influence") not in (None, "") else np.nan)
        except ValueError as exc:
            raise DataError(f"line {reader.line_num}: {exc}") from None
        ids.append(row["user_id"])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(CSV_FEATURE_COLUMNS))
    return FeatureTable(ids, X, np.array(infl, dtype=np.float64))


def feature_index(name: str) -> int:
    """Resolve a feature name (either naming scheme) to its column index."""
    if name in FEATURE_NAMES:
        return FEATURE_NAMES.index(name)
    if name in CSV_FEATURE_COLUMNS:
        return CSV_FEATURE_COLUMNS.index(name)
    raise DataError(f"unknown feature {name!r}")


assert tuple(f.name for f in fields(FeatureVector)) == FEATURE_NAMES
