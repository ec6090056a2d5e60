"""Seeded synthetic engagement data with known ground-truth influence.

Every user gets a latent view scale drawn from a log-normal distribution.
Followers, likes and comments are tied to that scale through per-user
multipliers, and posts add multiplicative noise, so the statistics are
correlated without being collinear.  A small share of posts is rewritten
into the two anomalous regimes seen on real accounts: sponsored posts
viewed by more people than follow the account, and posts carrying more
engagements than views.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import PostRecord, build_dataset, compute_influence, write_followers_csv, write_posts_jsonl
from .errors import InvalidConfig
from .evaluation import EngagementEdge, write_edges_csv

TARGET_MEAN_VIEWS = 748.0
DEFAULT_SIGMA = 1.2


def _mu_for_mean(mean, sigma):
    # mean of a log-normal is exp(mu + sigma^2 / 2)
    return math.log(mean) - sigma**2 / 2


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 5000
    posts_per_user: tuple = (10, 40)
    log_views_mu: float = _mu_for_mean(TARGET_MEAN_VIEWS, DEFAULT_SIGMA)
    log_views_sigma: float = DEFAULT_SIGMA
    follower_multiplier_range: tuple = (1.5, 60.0)
    engagement_rate_range: tuple = (0.02, 0.15)
    comment_to_like_ratio_range: tuple = (0.01, 0.08)
    anomaly_sponsored_frac: float = 0.002
    anomaly_bought_frac: float = 0.01
    noise_sigma: float = 0.35
    max_comment_edges: int = 25
    seed: int = 42

    def validate(self):
        if self.n_users < 10:
            raise InvalidConfig("n_users must be >= 10")
        lo, hi = self.posts_per_user
        if not 1 <= lo <= hi:
            raise InvalidConfig("posts_per_user must be a non-empty range of positive integers")
        for name in ("follower_multiplier_range", "engagement_rate_range", "comment_to_like_ratio_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise InvalidConfig(f"{name} must be a non-empty positive range")
        if self.follower_multiplier_range[0] <= 1:
            raise InvalidConfig("follower multipliers must exceed 1")
        if self.engagement_rate_range[1] * (1 + self.comment_to_like_ratio_range[1]) >= 0.5:
            raise InvalidConfig("engagement rates must leave engagements well below views")
        for name in ("anomaly_sponsored_frac", "anomaly_bought_frac"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1]")
        if self.anomaly_sponsored_frac + self.anomaly_bought_frac > 1.0:
            raise InvalidConfig("anomaly fractions must sum to at most 1")
        if self.log_views_sigma < 0 or self.noise_sigma < 0:
            raise InvalidConfig("sigmas must be non-negative")
        if self.max_comment_edges < 1:
            raise InvalidConfig("max_comment_edges must be >= 1")


@dataclass
class SynthData:
    config: SynthConfig
    posts: list
    followers: dict
    ground_truth: dict
    edges: list
    anomalies: dict = field(default_factory=dict)

    def dataset(self, min_posts=10, z_threshold=2.0):
        return build_dataset(self.posts, self.followers, min_posts, z_threshold,
                             provenance="synthetic", seed=self.config.seed)

    def write(self, directory, names=None):
        """Write posts JSONL, users CSV, edges CSV and ground-truth CSV."""
        names = {**DEFAULT_FILES, **(names or {})}
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / names["posts"], "w", encoding="utf-8", newline="") as fh:
            write_posts_jsonl(self.posts, fh)
        with open(d / names["users"], "w", encoding="utf-8", newline="") as fh:
            write_followers_csv(self.followers, fh)
        with open(d / names["edges"], "w", encoding="utf-8", newline="") as fh:
            write_edges_csv(self.edges, fh)
        with open(d / names["ground_truth"], "w", encoding="utf-8", newline="") as fh:
            write_influence_csv(self.ground_truth, fh)
        return {k: d / v for k, v in names.items()}


DEFAULT_FILES = {
    "posts": "posts.jsonl",
    "users": "users.csv",
    "edges": "edges.csv",
    "ground_truth": "ground_truth.csv",
}


def write_influence_csv(influence, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["user_id", "influence"])
    for uid, v in influence.items():
        writer.writerow([uid, repr(float(v))])


def read_influence_csv(stream):
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or not {"user_id", "influence"} <= set(reader.fieldnames):
        raise InvalidConfig("influence CSV header must contain user_id,influence")
    return {row["user_id"]: float(row["influence"]) for row in reader}


def _log_uniform(rng, lo, hi, size=None):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def _user_posts(rng, cfg, uid):
    scale = float(np.exp(rng.normal(cfg.log_views_mu, cfg.log_views_sigma)))
    followers = max(2, int(round(scale * _log_uniform(rng, *cfg.follower_multiplier_range))))
    rate = _log_uniform(rng, *cfg.engagement_rate_range)
    cratio = _log_uniform(rng, *cfg.comment_to_like_ratio_range)
    n_posts = int(rng.integers(cfg.posts_per_user[0], cfg.posts_per_user[1] + 1))

    s = cfg.noise_sigma
    view_noise = np.exp(rng.normal(-s * s / 2, s, n_posts))
    like_noise = np.exp(rng.normal(0.0, s / 2, n_posts))
    comment_noise = np.exp(rng.normal(0.0, s / 2, n_posts))
    views = np.clip(np.rint(scale * view_noise), 1, followers - 1).astype(np.int64)
    likes = np.floor(views * rate * like_noise).astype(np.int64)
    comments = np.floor(likes * cratio * comment_noise).astype(np.int64)
    # keep engagements strictly below views for regular posts
    likes = np.minimum(likes, views - 1)
    comments = np.minimum(comments, views - 1 - likes)
    rows = [
        [f"{uid}_p{j:03d}", int(likes[j]), int(comments[j]), int(views[j])] for j in range(n_posts)
    ]
    return followers, rows


def generate(config: Optional[SynthConfig] = None) -> SynthData:
    """Generate a synthetic dataset; output depends only on ``config``.

    User ``i`` draws from ``default_rng([seed, 0, i])``, anomaly placement
    from ``[seed, 1]`` and the commenter graph from ``[seed, 2]``.
    """
    cfg = config or SynthConfig()
    cfg.validate()
    seed = int(cfg.seed)

    uids = [f"u{i:05d}" for i in range(cfg.n_users)]
    followers = {}
    rows = []  # [uid, post_id, likes, comments, views]
    for i, uid in enumerate(uids):
        f, user_rows = _user_posts(np.random.default_rng([seed, 0, i]), cfg, uid)
        followers[uid] = f
        rows.extend([uid, *r] for r in user_rows)

    total = len(rows)
    arng = np.random.default_rng([seed, 1])
    n_sponsored = math.ceil(cfg.anomaly_sponsored_frac * total)
    n_bought = math.ceil(cfg.anomaly_bought_frac * total)
    chosen = arng.permutation(total)[: n_sponsored + n_bought]
    sponsored = np.sort(chosen[:n_sponsored])
    bought = np.sort(chosen[n_sponsored:])
    for j in sponsored:
        r = rows[j]
        r[4] = int(math.ceil(followers[r[0]] * arng.uniform(1.05, 1.5)))
    for j in bought:
        r = rows[j]
        r[2] = int(math.ceil(r[4] * arng.uniform(1.2, 3.0))) + 1

    posts = [PostRecord(uid, pid, likes, comments, views) for uid, pid, likes, comments, views in rows]
    by_user = {}
    for p in posts:
        by_user.setdefault(p.user_id, []).append(p)
    truth = {uid: compute_influence(by_user[uid]) for uid in uids}

    edges = _commenter_edges(np.random.default_rng([seed, 2]), cfg, uids, followers, by_user)
    return SynthData(
        cfg, posts, followers, truth, edges,
        anomalies={"sponsored": sponsored.tolist(), "bought": bought.tolist()},
    )


def _commenter_edges(rng, cfg, uids, followers, by_user):
    """Each user leaves ``ceil(mean comments)`` comments (capped) on authors
    chosen with probability proportional to their followers."""
    n = len(uids)
    f = np.array([followers[u] for u in uids], dtype=np.float64)
    p = f / f.sum()
    counts = np.array(
        [min(cfg.max_comment_edges, math.ceil(sum(x.comments for x in by_user[u]) / len(by_user[u])))
         for u in uids],
        dtype=np.int64,
    )
    src = np.repeat(np.arange(n), counts)
    dst = rng.choice(n, size=src.size, p=p)
    keep = src != dst
    pairs, weight = np.unique(np.stack([src[keep], dst[keep]], axis=1), axis=0, return_counts=True)
    return [EngagementEdge(uids[s], uids[t], int(w)) for (s, t), w in zip(pairs, weight)]
