"""Reward-side math: pairwise ranking loss over ranked comment lists, a
linear scorer trained on it, and correlation-weighted reward composition."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

AUX_NAMES = ("I", "R", "C")


class UndefinedCorrelation(ValueError):
    """Pearson correlation with a zero-variance argument."""


@dataclass(frozen=True)
class RankedSequence:
    """Comments of one video ordered best first, with a feature row each."""

    comments: tuple[str, ...]
    features: Mapping[str, Sequence[float]]
    video_id: str = ""

    def __post_init__(self):
        if len(self.comments) < 2:
            raise ValueError("a ranked sequence needs at least two comments")
        if len(set(self.comments)) != len(self.comments):
            raise ValueError("ranked sequence repeats a comment id")
        missing = [c for c in self.comments if c not in self.features]
        if missing:
            raise ValueError(f"no features for {missing}")

    def pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """All C(k, 2) (winner, loser) feature pairs."""
        rows = [np.asarray(self.features[c], dtype=np.float64) for c in self.comments]
        return [(rows[i], rows[j]) for i, j in combinations(range(len(rows)), 2)]

    @classmethod
    def from_dict(cls, d: Mapping) -> "RankedSequence":
        return cls(tuple(d["ranking"]), {k: list(v) for k, v in d["features"].items()}, d.get("video_id", ""))

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "ranking": list(self.comments),
            "features": {c: [float(x) for x in self.features[c]] for c in self.comments},
        }


@dataclass
class LinearScorer:
    weights: np.ndarray
    bias: float = 0.0

    def score(self, features) -> float:
        return float(np.dot(self.weights, np.asarray(features, dtype=np.float64)) + self.bias)

    def __call__(self, features) -> float:
        return self.score(features)

    def to_dict(self) -> dict:
        return {"weights": [float(w) for w in self.weights], "bias": float(self.bias)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "LinearScorer":
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d.get("bias", 0.0)))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def neg_log_sigmoid(x):
    """-log(sigmoid(x)), stable for large |x|."""
    return np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


def pairwise_ranking_loss(scorer, pairs: Sequence[tuple]) -> float:
    """Mean of -log sigmoid(r(winner) - r(loser)) over the given pairs."""
    if not pairs:
        raise ValueError("pairwise ranking loss needs at least one pair")
    margins = np.array([scorer(w) - scorer(l) for w, l in pairs], dtype=np.float64)
    return float(np.mean(neg_log_sigmoid(margins)))


# ---------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class RewardTrainConfig:
    learning_rate: float = 0.5
    max_iters: int = 10_000
    tol: float = 1e-9
    seed: int = 42
    init_scale: float = 0.01


@dataclass
class _PairData:
    diffs: np.ndarray    # (P, d) winner minus loser
    weights: np.ndarray  # (P,) per-pair averaging weight, sums to 1


def _pair_data(sequences: Sequence[RankedSequence]) -> _PairData:
    diffs, ws = [], []
    for seq in sequences:
        pairs = seq.pairs()
        for w, l in pairs:
            diffs.append(w - l)
            ws.append(1.0 / (len(pairs) * len(sequences)))
    return _PairData(np.vstack(diffs), np.asarray(ws))


def sequence_loss(theta: np.ndarray, data: _PairData) -> float:
    """Per-sequence mean pair loss, averaged over sequences."""
    return float(np.dot(data.weights, neg_log_sigmoid(data.diffs @ theta)))


def sequence_loss_grad(theta: np.ndarray, data: _PairData) -> np.ndarray:
    m = data.diffs @ theta
    # d/dm [-log sigmoid(m)] = -sigmoid(-m)
    s = np.exp(-np.logaddexp(0.0, m))
    return -(data.diffs.T @ (data.weights * s))


@dataclass
class RewardTrainResult:
    scorer: LinearScorer
    losses: list[float] = field(default_factory=list)
    iterations: int = 0
    degenerate: bool = False


def train_reward_scorer(sequences: Sequence[RankedSequence],
                        config: RewardTrainConfig | None = None) -> RewardTrainResult:
    """Gradient descent on the pairwise ranking loss for a linear scorer.

    The bias never affects score differences and stays at zero.
    """
    cfg = config or RewardTrainConfig()
    if not sequences:
        raise ValueError("need at least one ranked sequence")
    data = _pair_data(sequences)
    dim = data.diffs.shape[1]
    if not np.any(data.diffs):
        warnings.warn("all pair features are identical; returning a zero scorer", RuntimeWarning, stacklevel=2)
        return RewardTrainResult(LinearScorer(np.zeros(dim)), [math.log(2.0)], 0, degenerate=True)

    rng = np.random.default_rng(cfg.seed)
    theta = rng.normal(0.0, cfg.init_scale, dim)
    lr = cfg.learning_rate
    loss = sequence_loss(theta, data)
    losses = [loss]
    it = 0
    for it in range(1, cfg.max_iters + 1):
        g = sequence_loss_grad(theta, data)
        while True:
            cand = theta - lr * g
            cand_loss = sequence_loss(cand, data)
            if cand_loss <= loss or lr < 1e-12:
                break
            lr *= 0.5
        if cand_loss > loss:
            break
        theta = cand
        done = loss - cand_loss < cfg.tol
        loss = cand_loss
        losses.append(loss)
        if done:
            break
    return RewardTrainResult(LinearScorer(theta), losses, it)


def pairwise_accuracy(scorer, sequences: Sequence[RankedSequence]) -> float:
    """Share of (winner, loser) pairs the scorer orders strictly correctly."""
    total = correct = 0
    for seq in sequences:
        for w, l in seq.pairs():
            total += 1
            correct += scorer(w) > scorer(l)
    return correct / total if total else float("nan")


# ---------------------------------------------------------------------------
# correlation weights and reward composition


def pearson_corr(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson_corr needs two equal-length 1-D sequences")
    if len(x) < 2:
        raise ValueError("pearson_corr needs at least two points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def _corr_or_zero(xs, ys) -> float:
    try:
        return pearson_corr(xs, ys)
    except UndefinedCorrelation:
        return 0.0


def video_correlations(rows: Sequence[Sequence[float]]) -> tuple[float, float, float]:
    """corr(I, U), corr(R, U), corr(C, U) for one video's (I, R, C, U) rows."""
    if len(rows) < 2:
        raise ValueError("each video needs at least two comments")
    arr = np.asarray(rows, dtype=np.float64)
    u = arr[:, 3]
    return tuple(_corr_or_zero(arr[:, i], u) for i in range(3))


def normalize_correlations(corrs: Sequence[float]) -> tuple[float, ...]:
    """Floor negatives to zero and divide by the sum; uniform if nothing is left."""
    floored = [max(0.0, c) for c in corrs]
    total = sum(floored)
    if total <= 0.0:
        return tuple(1.0 / len(floored) for _ in floored)
    return tuple(c / total for c in floored)


def auxiliary_weights(per_video: Mapping[str, Sequence[Sequence[float]]]) -> tuple[float, float, float]:
    """Weights for the I, R, C auxiliary rewards.

    Each video yields the correlation of every auxiliary score with U
    (undefined correlations count as 0). Correlations are averaged over
    videos, floored at 0 and normalized to sum to 1.
    """
    if not per_video:
        return normalize_correlations([0.0, 0.0, 0.0])
    corrs = np.array([video_correlations(rows) for rows in per_video.values()])
    return normalize_correlations(corrs.mean(axis=0).tolist())


def auxiliary_weights_per_video(per_video: Mapping[str, Sequence[Sequence[float]]]) -> dict[str, tuple]:
    return {vid: normalize_correlations(video_correlations(rows)) for vid, rows in per_video.items()}


def compose_reward(basic: float, auxiliary: Sequence[float], weights: Sequence[float]) -> float:
    if len(auxiliary) != len(weights):
        raise ValueError("one weight per auxiliary reward")
    return basic + sum(w * a for w, a in zip(weights, auxiliary))


def basic_reward(U: float, human_rating: Sequence[int] | None = None, source: str = "engagement") -> float:
    """Basic reward from the engagement score, or from mean 1-5 human ratings
    mapped onto [0, 1]."""
    if source == "engagement":
        return U
    if source == "human":
        if not human_rating:
            raise ValueError("human basic reward needs ratings")
        return (sum(human_rating) / len(human_rating) - 1.0) / 4.0
    raise ValueError(f"unknown basic reward source {source!r}")


def sequences_from_scores(groups: Mapping[str, Sequence[tuple[str, float, Sequence[float]]]]) -> list[RankedSequence]:
    """Rank each video's comments by a score (descending, id as tie-break)."""
    out = []
    for vid, items in groups.items():
        if len(items) < 2:
            continue
        ranked = sorted(items, key=lambda t: (-t[1], t[0]))
        out.append(RankedSequence(tuple(cid for cid, _, _ in ranked), {cid: list(f) for cid, _, f in ranked}, vid))
    return out
