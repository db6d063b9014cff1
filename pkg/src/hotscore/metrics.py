"""Per-comment hotness components and the comprehensive score.

Four component scores feed a weighted sum ``F``:

* informativeness ``I`` from a length penalty and character-bigram diversity,
* relevance ``R`` from caption-keyword hits and embedding cosine,
* creativity ``C`` from sigmoid-squashed rhetoric and trending-term counts,
* engagement ``U`` from a sigmoid of weighted likes and replies.

Note on the sigmoid offsets: with the default slope 1 and offset -1, a zero
count maps to ``sigmoid(1) ~= 0.731``, not to a value near 0.1. The defaults
are kept as published; pass different ``b_r``/``b_t`` to shift the curve.
"""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .corpus import CommentRecord, VideoRecord
    from .providers import KeywordSet, Providers
    from .weights import WeightSet


@dataclass(frozen=True)
class MetricParams:
    L_min: int = 1
    L_max: int = 50
    alpha_len: float = 0.05
    k_r: float = 1.0
    k_t: float = 1.0
    k_u: float = 1.0
    b_r: float = -1.0
    b_t: float = -1.0
    b_u: float = -1.0
    invert_diversity: bool = False

    def __post_init__(self):
        if self.L_min <= 0 or self.L_max <= 0:
            raise ValueError("length bounds must be positive")
        if self.L_min > self.L_max:
            raise ValueError("L_min must not exceed L_max")
        if not 0 < self.alpha_len < 1:
            raise ValueError("alpha_len must lie in (0, 1)")

    @classmethod
    def from_dict(cls, d: dict) -> "MetricParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown metric parameter(s): {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path=None) -> "MetricParams":
        if path is None:
            return cls()
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


BREAKDOWN_FIELDS = ("L_p", "V_d", "I", "D_k", "D_c", "R", "S_r", "S_t", "C", "U_raw", "U", "F")


@dataclass(frozen=True)
class ScoreBreakdown:
    L_p: float
    V_d: float
    I: float
    D_k: float
    D_c: float
    R: float
    S_r: float
    S_t: float
    C: float
    U_raw: float
    U: float
    F: float

    def to_dict(self, digits: int = 9) -> dict:
        """Fields in fixed order, rounded to ``digits`` significant digits."""
        return {k: float(f"{getattr(self, k):.{digits}g}") for k in BREAKDOWN_FIELDS}

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in BREAKDOWN_FIELDS)


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


# -- informativeness -------------------------------------------------------


def length_penalty(L: int, params: MetricParams | None = None) -> float:
    """Piecewise length score, clamped to [0, 1].

    Below ``L_min`` the score is ``L / L_min``; inside the bounds it is
    ``L / L_max``; past ``L_max`` it falls by ``alpha_len`` per extra char.
    The branches are not continuous at ``L_min``; that is intentional.
    """
    p = params or MetricParams()
    if L < 0:
        raise ValueError("length must be non-negative")
    if L < p.L_min:
        val = L / p.L_min
    elif L <= p.L_max:
        val = L / p.L_max
    else:
        val = 1.0 - p.alpha_len * (L - p.L_max)
    return min(1.0, max(0.0, val))


def char_bigrams(text: str) -> list[str]:
    return [text[i:i + 2] for i in range(len(text) - 1)]


def vocab_diversity(comment: str, invert: bool = False) -> float:
    """Total character bigrams over unique ones (0 when there are none)."""
    grams = char_bigrams(comment.strip())
    if not grams:
        return 0.0
    total, unique = len(grams), len(set(grams))
    return unique / total if invert else total / unique


def informativeness(L_p: float, V_d: float, weights: "WeightSet") -> float:
    return weights.w1_I * L_p + weights.w2_I * V_d


# -- relevance -------------------------------------------------------------


def keyword_match(comment: str, keywords: "KeywordSet | Sequence[str]") -> float:
    """Share of distinct keywords found as substrings of the comment."""
    kws = getattr(keywords, "keywords", keywords)
    kws = list(dict.fromkeys(k for k in kws if k))
    if not kws:
        return 0.0
    text = unicodedata.normalize("NFC", comment)
    folded = "".join(ch.lower() if ch.isascii() else ch for ch in text)
    hits = sum(1 for k in kws if unicodedata.normalize("NFC", k) in folded)
    return hits / len(kws)


def context_match(comment_vec, video_vec) -> float:
    a = np.asarray(comment_vec, dtype=np.float64)
    b = np.asarray(video_vec, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    cos = float(np.dot(a, b) / (na * nb))
    return min(1.0, max(-1.0, cos))


def relevance(D_k: float, D_c: float, weights: "WeightSet") -> float:
    return weights.w1_R * D_k + weights.w2_R * D_c


# -- creativity / engagement ----------------------------------------------


def creativity(x_r: float, x_t: float, params: MetricParams, weights: "WeightSet") -> tuple[float, float, float]:
    S_r = sigmoid(params.k_r * (x_r - params.b_r))
    S_t = sigmoid(params.k_t * (x_t - params.b_t))
    return S_r, S_t, weights.w1_C * S_r + weights.w2_C * S_t


def engagement(N_l: float, N_r: float, params: MetricParams, weights: "WeightSet") -> tuple[float, float]:
    U_raw = weights.w1_U * N_l + weights.w2_U * N_r
    return U_raw, sigmoid(params.k_u * (U_raw - params.b_u))


def comprehensive_score(I: float, R: float, C: float, U: float, weights: "WeightSet") -> float:
    return weights.w_I * I + weights.w_R * R + weights.w_C * C + weights.w_U * U


# -- orchestration ---------------------------------------------------------


def video_context_text(video: "VideoRecord") -> str:
    """Text standing in for the video side of relevance: caption, else description, else title."""
    for text in (video.caption_text, video.description, video.title):
        if text and text.strip():
            return text
    return ""


class VideoContext:
    """Per-video values shared by all its comments (keywords, embedding)."""

    def __init__(self, video: "VideoRecord", providers: "Providers"):
        text = video_context_text(video)
        self.keywords = providers.keywords(video.caption_text or text)
        self.vector = providers.embed(text) if text.strip() else None


def score_comment(
    comment: "CommentRecord",
    video: "VideoRecord",
    providers: "Providers",
    params: MetricParams | None = None,
    weights: "WeightSet | None" = None,
    context: VideoContext | None = None,
) -> ScoreBreakdown:
    from .weights import WeightSet

    params = params or MetricParams()
    weights = weights or WeightSet()
    context = context or VideoContext(video, providers)
    text = comment.text

    L_p = length_penalty(len(text.strip()), params)
    V_d = vocab_diversity(text, params.invert_diversity)
    I = informativeness(L_p, V_d, weights)

    D_k = keyword_match(text, context.keywords)
    if context.vector is None or not text.strip():
        D_c = 0.0
    else:
        D_c = context_match(providers.embed(text), context.vector)
    R = relevance(D_k, D_c, weights)

    S_r, S_t, C = creativity(providers.count_rhetoric(text), providers.count_trending(text), params, weights)
    U_raw, U = engagement(comment.likes, comment.replies, params, weights)
    F = comprehensive_score(I, R, C, U, weights)
    return ScoreBreakdown(L_p, V_d, I, D_k, D_c, R, S_r, S_t, C, U_raw, U, F)


def features_of(b: ScoreBreakdown, names: Sequence[str] = ("I", "R", "C", "U")) -> list[float]:
    return [getattr(b, n) for n in names]


def breakdown_from_dict(d: dict) -> ScoreBreakdown:
    return ScoreBreakdown(**{k: float(d[k]) for k in BREAKDOWN_FIELDS})
