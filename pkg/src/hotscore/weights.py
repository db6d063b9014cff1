"""Metric weights: defaults, logistic fitting against binary labels, and the
agreement statistics used to validate them (AUC, Krippendorff's alpha)."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

WEIGHT_NAMES = (
    "w1_I", "w2_I", "w1_R", "w2_R", "w1_C", "w2_C", "w1_U", "w2_U",
    "w_I", "w_R", "w_C", "w_U",
)

# component -> (weight names, breakdown/record features, human label key)
COMPONENT_PAIRS = {
    "I": (("w1_I", "w2_I"), ("L_p", "V_d"), "informativeness"),
    "R": (("w1_R", "w2_R"), ("D_k", "D_c"), "relevance"),
    "C": (("w1_C", "w2_C"), ("S_r", "S_t"), "creativity"),
    "U": (("w1_U", "w2_U"), ("N_l", "N_r"), "engagement"),
}
TOP_LEVEL = (("w_I", "w_R", "w_C", "w_U"), ("I", "R", "C", "U"), "hot")


@dataclass
class WeightSet:
    w1_I: float = 0.6
    w2_I: float = 0.6
    w1_R: float = 0.6
    w2_R: float = 0.6
    w1_C: float = 0.6
    w2_C: float = 0.6
    w1_U: float = 0.5
    w2_U: float = 0.5
    w_I: float = 0.2
    w_R: float = 0.2
    w_C: float = 0.2
    w_U: float = 0.4
    fitted: bool = False
    fit_log: dict | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in WEIGHT_NAMES}
        d["fitted"] = self.fitted
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "WeightSet":
        unknown = set(d) - set(WEIGHT_NAMES) - {"fitted"}
        if unknown:
            raise ValueError(f"unknown weight name(s): {sorted(unknown)}")
        kwargs = {k: float(d[k]) for k in WEIGHT_NAMES if k in d}
        for k, v in kwargs.items():
            if not math.isfinite(v):
                raise ValueError(f"weight {k} is not finite")
        return cls(**kwargs, fitted=bool(d.get("fitted", False)))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def load_weights(path=None) -> WeightSet:
    """Weights from a flat JSON file; the published defaults when ``path`` is None."""
    if path is None:
        return WeightSet()
    with open(path, encoding="utf-8") as fh:
        return WeightSet.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# logistic fitting


@dataclass(frozen=True)
class FitConfig:
    learning_rate: float = 0.1
    max_iters: int = 5000
    grad_tol: float = 1e-8
    seed: int = 42
    init_scale: float = 0.01


@dataclass
class FitResult:
    weights: np.ndarray
    bias: float
    losses: list[float]
    iterations: int
    converged: bool
    degenerate: bool = False

    def predict_proba(self, X) -> np.ndarray:
        z = np.asarray(X, dtype=np.float64) @ self.weights + self.bias
        return _sigmoid(z)


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def logistic_loss(theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy; ``theta`` is ``[w..., bias]``."""
    z = X @ theta[:-1] + theta[-1]
    # log(1 + e^z) - y z, computed without overflow
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def logistic_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    z = X @ theta[:-1] + theta[-1]
    r = _sigmoid(z) - y
    n = len(y)
    return np.concatenate([X.T @ r / n, [r.sum() / n]])


def fit_logistic(X, y, config: FitConfig | None = None) -> FitResult:
    """Full-batch gradient descent on logistic loss.

    The step halves whenever a step would raise the loss, so the recorded
    loss sequence never increases.
    """
    cfg = config or FitConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, d) with one label per row")
    if len(y) < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(cfg.seed)
    theta = np.concatenate([rng.normal(0.0, cfg.init_scale, X.shape[1]), [0.0]])
    lr = cfg.learning_rate
    loss = logistic_loss(theta, X, y)
    losses = [loss]
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        g = logistic_grad(theta, X, y)
        if np.linalg.norm(g) < cfg.grad_tol:
            converged = True
            break
        while True:
            cand = theta - lr * g
            cand_loss = logistic_loss(cand, X, y)
            if cand_loss <= loss or lr < 1e-12:
                break
            lr *= 0.5
        if cand_loss > loss:
            converged = True
            break
        theta, loss = cand, cand_loss
        losses.append(loss)
    return FitResult(theta[:-1].copy(), float(theta[-1]), losses, it, converged)


def fit_weights(samples: Sequence[tuple[Sequence[float], int]], default: Sequence[float],
                config: FitConfig | None = None) -> FitResult:
    """Fit one weight group from ``(features, label)`` samples.

    With only one label class present the fit is degenerate: ``default`` is
    returned with a warning.
    """
    labels = [int(lbl) for _, lbl in samples]
    if len(set(labels)) < 2:
        warnings.warn("all samples share one label; keeping default weights", RuntimeWarning, stacklevel=2)
        return FitResult(np.asarray(default, dtype=np.float64), 0.0, [], 0, False, degenerate=True)
    X = [list(map(float, feats)) for feats, _ in samples]
    return fit_logistic(X, labels, config)


def fit_weight_set(rows: Iterable[tuple[Mapping[str, float], Mapping[str, int]]],
                   config: FitConfig | None = None, fit_top_level: bool = False,
                   base: WeightSet | None = None) -> WeightSet:
    """Fit every component weight pair from feature rows and human labels.

    ``rows`` yields ``(features, labels)`` where features carry the names in
    ``COMPONENT_PAIRS`` (``L_p``, ``V_d``, ..., ``N_l``, ``N_r``) and labels
    map label keys (``informativeness``, ...) to 0/1. Top-level weights stay
    at their defaults unless ``fit_top_level``; fitted top-level weights are
    rescaled so their absolute values sum to one.
    """
    base = base or WeightSet()
    rows = list(rows)
    out = WeightSet(**{k: getattr(base, k) for k in WEIGHT_NAMES})
    log: dict = {}
    groups = dict(COMPONENT_PAIRS)
    if fit_top_level:
        groups["F"] = TOP_LEVEL
    for name, (wnames, feats, label_key) in groups.items():
        samples = [
            ([f[k] for k in feats], lab[label_key])
            for f, lab in rows
            if label_key in lab
        ]
        if not samples:
            log[name] = {"skipped": "no labelled samples"}
            continue
        default = [getattr(base, w) for w in wnames]
        res = fit_weights(samples, default, config)
        w = res.weights
        if name == "F" and not res.degenerate:
            s = float(np.abs(w).sum())
            w = w / s if s > 0 else np.asarray(default)
        for wn, val in zip(wnames, w):
            setattr(out, wn, float(val))
        scores = [float(np.dot(w, x)) for x, _ in samples]
        ys = [y for _, y in samples]
        log[name] = {
            "n": len(samples),
            "degenerate": res.degenerate,
            "iterations": res.iterations,
            "final_loss": res.losses[-1] if res.losses else None,
            "auc": auc(scores, ys) if len(set(ys)) == 2 else None,
        }
    out.fitted = True
    out.fit_log = log
    return out


# ---------------------------------------------------------------------------
# AUC


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability that a random positive outscores a random negative.

    Exact pair enumeration; ties count one half.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    pos, neg = s[y == 1], s[y == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("AUC needs both classes present")
    diff = pos[:, None] - neg[None, :]
    wins = np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)
    return float(wins / (len(pos) * len(neg)))


def binarize(scores: Sequence[float], threshold: float = 0.5) -> list[int]:
    return [int(s >= threshold) for s in scores]


# ---------------------------------------------------------------------------
# Krippendorff's alpha


def _delta(metric: str):
    if metric == "interval":
        return lambda a, b: (a - b) ** 2
    if metric == "nominal":
        return lambda a, b: 0.0 if a == b else 1.0
    raise ValueError(f"unknown metric {metric!r}; use 'interval' or 'nominal'")


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def coincidence_matrix(ratings: Sequence[Sequence]) -> tuple[list, np.ndarray]:
    """Values and the coincidence matrix from an annotator x item table."""
    n_items = max((len(r) for r in ratings), default=0)
    units = []
    for j in range(n_items):
        vals = [row[j] for row in ratings if j < len(row) and not _is_missing(row[j])]
        if len(vals) >= 2:
            units.append(vals)
    values = sorted({v for u in units for v in u})
    index = {v: i for i, v in enumerate(values)}
    o = np.zeros((len(values), len(values)))
    for u in units:
        m = len(u)
        for a in range(m):
            for b in range(m):
                if a != b:
                    o[index[u[a]], index[u[b]]] += 1.0 / (m - 1)
    return values, o


def krippendorff_alpha(ratings: Sequence[Sequence], metric: str = "interval") -> float:
    """Chance-corrected agreement over an annotator x item table.

    Missing ratings are ``None`` or NaN. Needs at least two items rated by
    two or more annotators.
    """
    delta = _delta(metric)
    n_items = max((len(r) for r in ratings), default=0)
    pairable = sum(
        1 for j in range(n_items)
        if sum(1 for row in ratings if j < len(row) and not _is_missing(row[j])) >= 2
    )
    if pairable < 2:
        raise ValueError("need at least two items with two or more ratings each")
    values, o = coincidence_matrix(ratings)
    n_c = o.sum(axis=1)
    n = n_c.sum()
    d = np.array([[delta(a, b) for b in values] for a in values], dtype=np.float64)
    d_obs = float((o * d).sum() / n)
    d_exp = float((np.outer(n_c, n_c) * d).sum() / (n * (n - 1)))
    if d_exp == 0.0:
        return 1.0
    return 1.0 - d_obs / d_exp


def filter_low_agreement(items: Mapping[str, Sequence[Sequence]], threshold: float = 0.7,
                         metric: str = "interval") -> tuple[dict, dict]:
    """Keep items whose alpha is at least ``threshold``.

    ``items`` maps an id to its own annotator x unit table. Items whose alpha
    cannot be computed are dropped. Returns ``(kept, alphas)``.
    """
    kept, alphas = {}, {}
    for key, table in items.items():
        try:
            a = krippendorff_alpha(table, metric)
        except ValueError:
            alphas[key] = None
            continue
        alphas[key] = a
        if a >= threshold:
            kept[key] = table
    return kept, alphas


def rating_tables(comments) -> dict[str, list[list]]:
    """Group per-comment annotator ratings into one table per video.

    Rows are annotators, columns are that video's rated comments.
    """
    by_video: dict[str, list] = {}
    for c in comments:
        if c.human_rating:
            by_video.setdefault(c.video_id, []).append(c.human_rating)
    tables = {}
    for vid, cols in by_video.items():
        n_ann = max(len(r) for r in cols)
        tables[vid] = [[col[a] if a < len(col) else None for col in cols] for a in range(n_ann)]
    return tables


__all__ = [
    "WEIGHT_NAMES", "WeightSet", "load_weights", "FitConfig", "FitResult", "fit_logistic",
    "fit_weights", "fit_weight_set", "logistic_loss", "logistic_grad", "auc", "binarize",
    "krippendorff_alpha", "coincidence_matrix", "filter_low_agreement", "rating_tables",
]
