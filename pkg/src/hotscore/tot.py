"""Five-node Tree-of-Thought content for a video and a comment, knowledge
enhancement against a local KB, per-node weight optimisation and the final
comment regeneration step.

The tree is a fixed star: Des (description), Eve (key events), Kno
(background knowledge), Cre (creative associations), Aud (target audience).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .providers import KnowledgeBase, TextGenerator, embed

DIMENSIONS = ("Des", "Eve", "Kno", "Cre", "Aud")
MERGED_FROM_VIDEO = ("Kno", "Cre", "Aud")
CONNECTIVE = "——"

VIDEO_TEMPLATES = {
    "Des": "Video description: {des}",
    "Eve": "Key events: {events}",
    "Kno": "Background knowledge: {title}",
    "Cre": "Creative associations: {title}",
    "Aud": "Target audience: people who enjoy {audience}",
}
COMMENT_TEMPLATES = {
    "Des": "Comment description: {comment}",
    "Eve": "Key events: {comment}",
    "Kno": "Background knowledge: {comment}",
    "Cre": "Creative associations: {comment}",
    "Aud": "Target audience: people who would write {comment}",
}
ENRICH_TEMPLATE = "{kno} {facts}"

_SENTENCE_RE = re.compile(r"[^。！？!?.;；]+[。！？!?.;；]*")
_NEG_EN = re.compile(r"\b(?:not|never|no|isn't|aren't|wasn't|weren't)\s+(?:(?:a|an|the)\s+)?([A-Za-z]+)", re.I)
_NEG_ZH = re.compile(r"(?:不是|并非|并不是|不属于|没有)(.{1,6})")


class ToTError(Exception):
    pass


@dataclass(frozen=True)
class ToTNode:
    text: str
    weight: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"node weight {self.weight} outside [0, 1]")


@dataclass(frozen=True)
class ToTTree:
    nodes: Mapping[str, ToTNode]
    origin: str = "video"
    flags: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if set(self.nodes) != set(DIMENSIONS):
            raise ValueError(f"tree needs exactly the nodes {DIMENSIONS}")
        if self.origin not in ("video", "comment", "merged"):
            raise ValueError(f"unknown origin {self.origin!r}")

    def text(self, dim: str) -> str:
        return self.nodes[dim].text

    def weights(self) -> np.ndarray:
        return np.array([self.nodes[d].weight for d in DIMENSIONS])

    def with_weights(self, weights) -> "ToTTree":
        nodes = {d: replace(self.nodes[d], weight=float(w)) for d, w in zip(DIMENSIONS, weights)}
        return replace(self, nodes=nodes)

    def with_text(self, dim: str, text: str, **flags) -> "ToTTree":
        nodes = dict(self.nodes)
        nodes[dim] = replace(nodes[dim], text=text)
        return replace(self, nodes=nodes, flags={**self.flags, **flags})

    def to_dict(self) -> dict:
        return {d: {"text": self.nodes[d].text, "weight": self.nodes[d].weight} for d in DIMENSIONS}


def _uniform(texts: Mapping[str, str], origin: str) -> ToTTree:
    w = 1.0 / len(DIMENSIONS)
    return ToTTree({d: ToTNode(texts[d], w) for d in DIMENSIONS}, origin)


def _key_events(caption: str, limit: int = 3) -> str:
    parts = [s.strip(" 。！？!?.;；") for s in _SENTENCE_RE.findall(caption or "")]
    return ", ".join([p for p in parts if p][:limit])


def build_video_tot(video, generator: TextGenerator | None = None) -> ToTTree:
    """Five nodes generated from the video's title, caption and description.

    An empty description falls back to the caption for Des.
    """
    generator = generator or TextGenerator()
    des = video.description.strip() or video.caption_text.strip()
    if not des:
        raise ToTError(f"video {video.video_id} has neither caption nor description")
    title = video.title.strip() or des
    audience = video.theme if video.theme and video.theme != "unknown" else title
    fields_ = {
        "des": des,
        "events": _key_events(video.caption_text) or des,
        "title": title,
        "audience": audience,
    }
    return _uniform({d: generator.generate(VIDEO_TEMPLATES[d], **fields_) for d in DIMENSIONS}, "video")


def build_comment_tot(comment: str, generator: TextGenerator | None = None) -> ToTTree:
    generator = generator or TextGenerator()
    if not comment.strip():
        raise ToTError("comment is empty")
    return _uniform({d: generator.generate(COMMENT_TEMPLATES[d], comment=comment.strip()) for d in DIMENSIONS}, "comment")


# ---------------------------------------------------------------------------
# knowledge enhancement


def _description_words(description: str) -> set[str]:
    return {w.lower() for w in re.findall(r"[A-Za-z]{3,}", description)}


def contradicts(sentence: str, description: str) -> bool:
    """True when ``sentence`` negates a word or CJK bigram of ``description``."""
    words = _description_words(description)
    for m in _NEG_EN.finditer(sentence):
        if m.group(1).lower() in words:
            return True
    for m in _NEG_ZH.finditer(sentence):
        tail = m.group(1)
        if any(tail[i:i + 2] in description for i in range(len(tail) - 1)):
            return True
    return False


def enhance_knowledge(tree: ToTTree, kb: KnowledgeBase | None,
                      generator: TextGenerator | None = None) -> ToTTree:
    """Link entities in the Kno node, drop sentences the KB contradicts and
    extend the node with the linked entities' descriptions.

    The other four nodes are left untouched.
    """
    generator = generator or TextGenerator()
    if kb is None:
        return replace(tree, flags={**tree.flags, "kb_unavailable": True})
    kno = tree.text("Kno")
    links = kb.link(kno)
    if not links:
        return replace(tree, flags={**tree.flags, "enhanced": False, "links": []})

    errors = []
    kept = []
    for sent in _SENTENCE_RE.findall(kno):
        bad = next((l for l in links if l.surface in sent and contradicts(sent, l.description)), None)
        if bad is None:
            kept.append(sent)
        else:
            errors.append({"sentence": sent.strip(), "entity_id": bad.entity_id})
    seen = set()
    facts = []
    for l in links:
        if l.entity_id in seen:
            continue
        seen.add(l.entity_id)
        facts.append(f"{l.surface}: {l.description}")
    enriched = generator.generate(ENRICH_TEMPLATE, kno="".join(kept).strip(), facts=" ".join(facts))
    return tree.with_text(
        "Kno", enriched,
        enhanced=True,
        links=[{"surface": l.surface, "entity_id": l.entity_id} for l in links],
        errors=errors,
    )


# ---------------------------------------------------------------------------
# utility and weight optimisation


UtilityFns = Mapping[str, Callable[[str], float]]


def dimension_utilities(comment: str, tree: ToTTree, f: UtilityFns | None = None,
                        embed_fn: Callable[[str], np.ndarray] = embed) -> dict[str, float]:
    """Per-node utility of ``comment``; cosine to the node text by default."""
    if f is not None:
        return {d: float(f[d](comment)) for d in DIMENSIONS}
    cvec = embed_fn(comment)
    out = {}
    for d in DIMENSIONS:
        text = tree.text(d)
        out[d] = float(np.dot(cvec, embed_fn(text))) if text.strip() else 0.0
    return out


def tot_utility(comment: str, tree: ToTTree, f: UtilityFns | Mapping[str, float] | None = None,
                embed_fn: Callable[[str], np.ndarray] = embed) -> float:
    """Weighted sum of node utilities. ``f`` may be callables or precomputed values."""
    if f is not None and all(isinstance(v, (int, float)) for v in f.values()):
        vals = {d: float(f[d]) for d in DIMENSIONS}
    else:
        vals = dimension_utilities(comment, tree, f, embed_fn)
    return float(sum(tree.nodes[d].weight * vals[d] for d in DIMENSIONS))


def weights_from_utilities(utilities: Mapping[str, float]) -> list[float]:
    """Initial weights proportional to (non-negative) utilities, summing to one."""
    vals = [max(0.0, utilities[d]) for d in DIMENSIONS]
    total = sum(vals)
    if total == 0:
        return [1.0 / len(DIMENSIONS)] * len(DIMENSIONS)
    return [v / total for v in vals]


@dataclass(frozen=True)
class TotOptimizerConfig:
    learning_rate: float = 0.1
    max_iters: int = 100
    direction: str = "descent"  # literal update w - lr * f; "ascent" flips the sign
    step_tol: float = 1e-9

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.direction not in ("descent", "ascent"):
            raise ValueError("direction must be 'descent' or 'ascent'")


@dataclass
class TotOptimizationResult:
    tree: ToTTree
    iterations: int
    reason: str
    history: list[list[float]]


def tot_weight_step(weights, utilities, learning_rate: float, direction: str = "descent") -> np.ndarray:
    """One update ``w - lr * dU/dw`` (``dU/dw_i`` is the node utility), clamped to [0, 1]."""
    w = np.asarray(weights, dtype=np.float64)
    g = np.asarray(utilities, dtype=np.float64)
    sign = -1.0 if direction == "descent" else 1.0
    return np.clip(w + sign * learning_rate * g, 0.0, 1.0)


def optimize_tot_weights(tree: ToTTree, utilities: Mapping[str, float],
                         config: TotOptimizerConfig | None = None) -> TotOptimizationResult:
    """Iterate the weight update until every weight sits on a bound, the
    applied step is negligible, or ``max_iters`` is reached."""
    cfg = config or TotOptimizerConfig()
    g = np.array([utilities[d] for d in DIMENSIONS], dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise ValueError("utilities must be finite")
    w = tree.weights()
    history = [w.tolist()]
    reason = "max_iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        new = tot_weight_step(w, g, cfg.learning_rate, cfg.direction)
        step = float(np.max(np.abs(new - w)))
        w = new
        history.append(w.tolist())
        if step < cfg.step_tol:
            reason = "step"
            break
        if np.all((w == 0.0) | (w == 1.0)):
            reason = "clamped"
            break
    return TotOptimizationResult(tree.with_weights(w), it, reason, history)


# ---------------------------------------------------------------------------
# merge and regenerate


def merge_comment_tot(comment_tree: ToTTree, video_tree: ToTTree) -> ToTTree:
    """Comment tree with Kno, Cre and Aud taken from the enhanced video tree."""
    nodes = dict(comment_tree.nodes)
    for d in MERGED_FROM_VIDEO:
        nodes[d] = video_tree.nodes[d]
    return ToTTree(nodes, "merged", {"replaced": list(MERGED_FROM_VIDEO)})


def refine_prompt(best_comment: str, tree: ToTTree) -> str:
    """Best comment joined to the content of the highest-weight node.

    Ties go to the earlier dimension; an empty node leaves the comment alone.
    """
    weights = tree.weights()
    top = DIMENSIONS[int(np.argmax(weights))]
    extra = tree.text(top).strip()
    if not extra:
        return best_comment.strip()
    return f"{best_comment.strip()}{CONNECTIVE}{extra}"


def refine_comment(best_comment: str, tree: ToTTree, generator: TextGenerator | None = None) -> str:
    generator = generator or TextGenerator()
    return generator.generate(refine_prompt(best_comment, tree))


def run_tot(video, best_comment: str, kb: KnowledgeBase | None, generator: TextGenerator | None = None,
            config: TotOptimizerConfig | None = None,
            embed_fn: Callable[[str], np.ndarray] = embed) -> dict:
    """Whole refinement flow for one video and its best comment."""
    generator = generator or TextGenerator()
    vtree = enhance_knowledge(build_video_tot(video, generator), kb, generator)
    utils = dimension_utilities(best_comment, vtree, embed_fn=embed_fn)
    vtree = vtree.with_weights(weights_from_utilities(utils))
    opt = optimize_tot_weights(vtree, utils, config)
    ctree = build_comment_tot(best_comment, generator)
    merged = merge_comment_tot(ctree, opt.tree)
    return {
        "tree": merged.to_dict(),
        "refined_comment": refine_comment(best_comment, merged, generator),
        "video_tree": opt.tree.to_dict(),
        "utilities": utils,
        "optimizer": {"iterations": opt.iterations, "reason": opt.reason},
        "flags": dict(opt.tree.flags),
    }
