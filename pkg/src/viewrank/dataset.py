"""Post ingestion, per-user grouping, outlier removal and ground-truth influence.

A user's influence is the mean number of views over the posts they published.
Raw post records are grouped by user, users with too few posts (or no known
follower count) are dropped, and the extreme posts of each user are tested
with a per-metric z-score rule before the mean is taken.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from typing import IO, Iterable, Mapping, Optional

import numpy as np

from .errors import (
    DataError,
    DegenerateUser,
    DuplicatePost,
    EmptyPosts,
    MalformedLine,
)

POST_FIELDS = ("user_id", "post_id", "likes", "comments", "views")
COUNT_FIELDS = ("likes", "comments", "views")
OUTLIER_METRICS = ("views", "likes", "comments")


@dataclass(frozen=True)
class PostRecord:
    user_id: str
    post_id: str
    likes: int
    comments: int
    views: int
    published_at: Optional[int] = None

    @property
    def engagement(self) -> int:
        return self.likes + self.comments


@dataclass(frozen=True)
class UserAggregate:
    user_id: str
    followers: int
    posts: tuple
    post_count_total: int
    influence: Optional[float] = None


@dataclass
class Dataset:
    users: list
    provenance: str = "ingested"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.provenance not in ("ingested", "synthetic"):
            raise DataError(f"unknown provenance {self.provenance!r}")
        seen = set()
        for u in self.users:
            if u.user_id in seen:
                raise DataError(f"duplicate user_id {u.user_id!r}")
            seen.add(u.user_id)

    def __len__(self):
        return len(self.users)

    @property
    def user_ids(self):
        return [u.user_id for u in self.users]

    @property
    def influence(self):
        return np.array([u.influence for u in self.users], dtype=np.float64)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _as_count(value, name, line_no):
    if isinstance(value, bool):
        raise MalformedLine(line_no, f"{name} must be an integer, got {value!r}")
    if isinstance(value, str):
        text = value.strip()
        try:
            value = int(text)
        except ValueError:
            raise MalformedLine(line_no, f"{name} must be an integer, got {text!r}") from None
    elif not isinstance(value, int):
        raise MalformedLine(line_no, f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise MalformedLine(line_no, f"{name} must be non-negative, got {value}")
    return value


def _record_from_mapping(obj, line_no):
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "expected a JSON object")
    missing = [k for k in POST_FIELDS if k not in obj or obj[k] in (None, "")]
    if missing:
        raise MalformedLine(line_no, f"missing field(s): {', '.join(missing)}")
    for key in ("user_id", "post_id"):
        if not isinstance(obj[key], str):
            raise MalformedLine(line_no, f"{key} must be a string")
    counts = {k: _as_count(obj[k], k, line_no) for k in COUNT_FIELDS}
    published = obj.get("published_at")
    if published in (None, ""):
        published = None
    else:
        published = _as_count(published, "published_at", line_no)
    return PostRecord(obj["user_id"], obj["post_id"], published_at=published, **counts)


def _iter_jsonl(stream):
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from None
        yield line_no, obj


def _iter_csv(stream):
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        return
    missing = [k for k in POST_FIELDS if k not in reader.fieldnames]
    if missing:
        raise MalformedLine(1, f"header lacks column(s): {', '.join(missing)}")
    for row in reader:
        # DictReader.line_num is the physical line of the row just read
        yield reader.line_num, row


def parse_posts(stream: IO[str], format: str = "jsonl") -> list:
    """Parse post records from a text stream.

    Parameters
    ----------
    stream : text stream
        JSONL (one object per line) or CSV with a header row.
    format : {"jsonl", "csv"}

    Returns
    -------
    list of PostRecord, in input order.

    Raises
    ------
    MalformedLine
        Missing field, non-integer or negative count.
    DuplicatePost
        The same (user_id, post_id) pair appears twice.
    """
    if format == "jsonl":
        rows = _iter_jsonl(stream)
    elif format == "csv":
        rows = _iter_csv(stream)
    else:
        raise DataError(f"unknown post format {format!r}")

    posts = []
    first_seen = {}
    for line_no, obj in rows:
        rec = _record_from_mapping(obj, line_no)
        key = (rec.user_id, rec.post_id)
        if key in first_seen:
            raise DuplicatePost(rec.user_id, rec.post_id, first_seen[key], line_no)
        first_seen[key] = line_no
        posts.append(rec)
    return posts


def parse_followers(stream: IO[str]) -> dict:
    """Read a ``user_id,followers`` CSV into a dict."""
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or not {"user_id", "followers"} <= set(reader.fieldnames):
        raise MalformedLine(1, "header must contain user_id,followers")
    out = {}
    for row in reader:
        uid = row["user_id"]
        if not uid:
            raise MalformedLine(reader.line_num, "missing user_id")
        if uid in out:
            raise MalformedLine(reader.line_num, f"duplicate user_id {uid!r}")
        out[uid] = _as_count(row["followers"], "followers", reader.line_num)
    return out


def write_posts_jsonl(posts: Iterable[PostRecord], stream: IO[str]) -> None:
    for p in posts:
        obj = {
            "user_id": p.user_id,
            "post_id": p.post_id,
            "likes": p.likes,
            "comments": p.comments,
            "views": p.views,
        }
        if p.published_at is not None:
            obj["published_at"] = p.published_at
        stream.write(json.dumps(obj, separators=(",", ":")) + "\n")


def write_followers_csv(followers: Mapping[str, int], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["user_id", "followers"])
    for uid, f in followers.items():
        writer.writerow([uid, f])


# ---------------------------------------------------------------------------
# grouping, outliers, influence
# ---------------------------------------------------------------------------


def group_and_filter(posts, followers_by_user: Mapping[str, int], min_posts: int = 10) -> list:
    """Group posts per user and keep users with enough posts and a follower count.

    Users are returned in order of first appearance in ``posts``; influence
    is left unset.
    """
    if min_posts < 1:
        raise DataError("min_posts must be >= 1")
    grouped = {}
    for p in posts:
        grouped.setdefault(p.user_id, []).append(p)
    users = []
    for uid, user_posts in grouped.items():
        if len(user_posts) < min_posts or uid not in followers_by_user:
            continue
        users.append(
            UserAggregate(
                user_id=uid,
                followers=int(followers_by_user[uid]),
                posts=tuple(user_posts),
                post_count_total=len(user_posts),
            )
        )
    return users


def compute_influence(posts) -> float:
    """Mean views per post."""
    if len(posts) == 0:
        raise EmptyPosts("cannot compute influence of a user with no posts")
    # integer sum is exact; int / int is correctly rounded
    return sum(p.views for p in posts) / len(posts)


def _extreme_flags(values, z_threshold):
    n = len(values)
    mean = math.fsum(values) / n
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
    flagged = set()
    if std == 0.0:
        return flagged
    hi = max(range(n), key=lambda i: (values[i], -i))
    lo = min(range(n), key=lambda i: (values[i], i))
    if (values[hi] - mean) / std > z_threshold:
        flagged.add(hi)
    if (values[lo] - mean) / std < -z_threshold:
        flagged.add(lo)
    return flagged


def remove_outlier_posts(user: UserAggregate, z_threshold: float = 2.0) -> UserAggregate:
    """Drop a user's extreme posts and recompute influence.

    For each of views, likes and comments the single highest and single
    lowest post are tested against ``z_threshold`` using the mean and sample
    standard deviation of the user's full post list.  A post flagged by
    several metrics is removed once, so at most six posts disappear.
    """
    posts = list(user.posts)
    flagged = set()
    for metric in OUTLIER_METRICS:
        flagged |= _extreme_flags([getattr(p, metric) for p in posts], z_threshold)
    kept = tuple(p for i, p in enumerate(posts) if i not in flagged)
    if len(kept) < 2:
        raise DegenerateUser(f"user {user.user_id!r} has {len(kept)} posts after outlier removal")
    return replace(user, posts=kept, influence=compute_influence(kept))


def build_dataset(
    posts,
    followers_by_user,
    min_posts: int = 10,
    z_threshold: float = 2.0,
    provenance: str = "ingested",
    seed=None,
) -> Dataset:
    """Run grouping, stability filtering and outlier removal end to end."""
    users = group_and_filter(posts, followers_by_user, min_posts=min_posts)
    users = [remove_outlier_posts(u, z_threshold) for u in users]
    return Dataset(users=users, provenance=provenance, seed=seed)


def load_dataset(posts_path, users_path, min_posts=10, z_threshold=2.0, provenance="ingested", seed=None):
    posts_path = str(posts_path)
    fmt = "csv" if posts_path.endswith(".csv") else "jsonl"
    with open(posts_path, encoding="utf-8", newline="") as fh:
        posts = parse_posts(fh, fmt)
    with open(users_path, encoding="utf-8", newline="") as fh:
        followers = parse_followers(fh)
    return build_dataset(posts, followers, min_posts, z_threshold, provenance, seed)
