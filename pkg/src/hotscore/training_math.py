"""Loss and fusion algebra of the generation pipeline, on plain arrays.

No model is involved: these functions compose already-computed quantities
(encoder outputs, cross-entropy values, log-probabilities, rewards).

Sign convention for :func:`rl_loss`: the reward term enters with a positive
sign and the log-ratio term is negated, so *raising* ``rl_loss`` raises the
reward and lowers divergence from the SFT policy. Optimise it by ascent.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np


@dataclass(frozen=True)
class FusionParams:
    alpha: float = 0.5
    beta: float = 0.5
    w1_S: float = 0.8
    w2_S: float = 0.2
    w1_RL: float = 0.3
    w2_RL: float = 0.7

    def __post_init__(self):
        for f in fields(self):
            if not np.isfinite(getattr(self, f.name)):
                raise ValueError(f"{f.name} must be finite")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path=None) -> "FusionParams":
        if path is None:
            return cls()
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


def positional_embeddings(n: int, dim: int, base: float = 10000.0) -> np.ndarray:
    """Sinusoidal table: sin on even columns, cos on odd columns."""
    pos = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(dim)[None, :]
    angle = pos / np.power(base, (2 * (i // 2)) / dim)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def serialize_keyframes(frames, mode: str = "add") -> np.ndarray:
    """Attach a position to each keyframe feature vector.

    ``mode="add"`` sums frame and positional vectors; ``"concat"`` appends the
    positional vector instead. Output keeps one row per frame, in order.
    """
    rows = [np.asarray(f, dtype=np.float64) for f in frames]
    if not rows:
        raise ValueError("need at least one keyframe")
    dim = rows[0].shape
    if any(r.ndim != 1 or r.shape != dim for r in rows):
        raise ValueError("keyframe vectors must share one 1-D dimension")
    F = np.vstack(rows)
    P = positional_embeddings(len(rows), F.shape[1])
    if mode == "add":
        return F + P
    if mode == "concat":
        return np.hstack([F, P])
    raise ValueError(f"unknown mode {mode!r}")


def fuse_features(text_vec, visual_vec, params: FusionParams | None = None, projection=None) -> np.ndarray:
    """``alpha * text + beta * visual``, projecting ``visual`` first if a matrix is given."""
    p = params or FusionParams()
    t = np.asarray(text_vec, dtype=np.float64)
    s = np.asarray(visual_vec, dtype=np.float64)
    if projection is not None:
        s = np.asarray(projection, dtype=np.float64) @ s
    if s.shape != t.shape:
        raise ValueError(f"visual features {s.shape} do not match text features {t.shape}")
    return p.alpha * t + p.beta * s


def score_mse(pred, target) -> float:
    """Mean squared difference between predicted and reference comprehensive scores."""
    a = np.asarray(pred, dtype=np.float64)
    b = np.asarray(target, dtype=np.float64)
    return float(np.mean((a - b) ** 2))


def sft_loss(ce: float, score_loss: float, params: FusionParams | None = None) -> float:
    p = params or FusionParams()
    return p.w1_S * ce + p.w2_S * score_loss


def log_ratio_term(logp_rl: float, logp_sft: float) -> float:
    """-log(pi_rl(y|x) / pi_sft(y|x)) for one sample."""
    return -(logp_rl - logp_sft)


def rl_loss(reward: float, logp_rl: float, logp_sft: float, params: FusionParams | None = None) -> float:
    p = params or FusionParams()
    return p.w1_RL * reward + p.w2_RL * log_ratio_term(logp_rl, logp_sft)


def explain_losses(ce: float, pred_score: float, true_score: float, reward: float,
                   logp_rl: float, logp_sft: float, params: FusionParams | None = None) -> dict:
    """Step-by-step trace of both composite losses."""
    p = params or FusionParams()
    lf = score_mse(pred_score, true_score)
    ratio = log_ratio_term(logp_rl, logp_sft)
    return {
        "params": p.to_dict(),
        "sft": {
            "L_CE": ce,
            "L_F": lf,
            "w1_S*L_CE": p.w1_S * ce,
            "w2_S*L_F": p.w2_S * lf,
            "L_SFT": sft_loss(ce, lf, p),
        },
        "rl": {
            "reward": reward,
            "log_ratio_term": ratio,
            "w1_RL*reward": p.w1_RL * reward,
            "w2_RL*log_ratio_term": p.w2_RL * ratio,
            "L_RL": rl_loss(reward, logp_rl, logp_sft, p),
            "sign_convention": "maximize L_RL",
        },
    }
