"""Retrieval-style ranking metrics and n-gram reference metrics.

Tokenization is mixed: each CJK character is one token, ASCII runs are
split on whitespace and punctuation. BLEU and ROUGE-L values depend on this
choice.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .providers import is_cjk

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:'[A-Za-z]+)?|\S")


def tokenize(text: str) -> list[str]:
    out = []
    for tok in _TOKEN_RE.findall(text or ""):
        if len(tok) == 1 and not tok.isalnum() and not is_cjk(tok):
            continue  # punctuation
        out.append(tok.lower() if tok.isascii() else tok)
    return out


# ---------------------------------------------------------------------------
# ranking


@dataclass(frozen=True)
class RankingTask:
    candidates: tuple[str, ...]
    relevant: frozenset[int]
    scores: tuple[float, ...]

    def __post_init__(self):
        if len(self.scores) != len(self.candidates):
            raise ValueError("one score per candidate")
        if not self.relevant:
            raise ValueError("ranking task needs a relevant candidate")
        if any(not 0 <= i < len(self.candidates) for i in self.relevant):
            raise ValueError("relevant index out of range")

    @classmethod
    def from_dict(cls, d: dict) -> "RankingTask":
        cands = tuple(d.get("candidates") or [""] * len(d["scores"]))
        return cls(cands, frozenset(int(i) for i in d["relevant"]), tuple(float(s) for s in d["scores"]))


def best_rank(task: RankingTask) -> int:
    """1-based rank of the best relevant candidate.

    Candidates sort by descending score; equal scores keep input order.
    """
    order = sorted(range(len(task.scores)), key=lambda i: -task.scores[i])
    for pos, idx in enumerate(order, start=1):
        if idx in task.relevant:
            return pos
    raise AssertionError("unreachable: relevant set is non-empty")


def _as_list(tasks) -> list[RankingTask]:
    return [tasks] if isinstance(tasks, RankingTask) else list(tasks)


def recall_at_k(tasks, k: int) -> float:
    tasks = _as_list(tasks)
    if not tasks:
        raise ValueError("no ranking tasks")
    return sum(1.0 for t in tasks if best_rank(t) <= k) / len(tasks)


def mean_rank(tasks) -> float:
    tasks = _as_list(tasks)
    if not tasks:
        raise ValueError("no ranking tasks")
    return sum(best_rank(t) for t in tasks) / len(tasks)


def mrr(tasks) -> float:
    tasks = _as_list(tasks)
    if not tasks:
        raise ValueError("no ranking tasks")
    return sum(1.0 / best_rank(t) for t in tasks) / len(tasks)


# ---------------------------------------------------------------------------
# BLEU


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _bleu_stats(cand: list[str], refs: list[list[str]], max_n: int):
    matches, totals = [], []
    for n in range(1, max_n + 1):
        c = ngrams(cand, n)
        max_ref: Counter = Counter()
        for r in refs:
            for g, cnt in ngrams(r, n).items():
                max_ref[g] = max(max_ref[g], cnt)
        matches.append(sum(min(cnt, max_ref[g]) for g, cnt in c.items()))
        totals.append(max(0, len(cand) - n + 1))
    # closest reference length, shorter wins ties
    ref_len = min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
    return matches, totals, len(cand), ref_len


def _combine(matches, totals, cand_len, ref_len, smooth: bool) -> float:
    if cand_len == 0:
        return 0.0
    logs = []
    for m, t in zip(matches, totals):
        if t == 0:
            continue  # order longer than the candidate
        if m == 0:
            if not smooth:
                return 0.0
            logs.append(math.log(1.0 / (t + 1)))
        else:
            logs.append(math.log(m / t))
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(sum(logs) / len(logs))


def bleu(candidate: str, references: Sequence[str], max_n: int = 4, smooth: bool = True) -> float:
    """Sentence BLEU with clipped counts over all references and brevity penalty.

    With ``smooth`` an order with no matches scores ``1 / (total + 1)``
    instead of zeroing the whole product. Orders longer than the candidate
    are left out of the geometric mean.
    """
    if not references:
        raise ValueError("need at least one reference")
    cand = tokenize(candidate)
    refs = [tokenize(r) for r in references]
    return _combine(*_bleu_stats(cand, refs, max_n), smooth)


def corpus_bleu(candidates: Sequence[str], references: Sequence[Sequence[str]], max_n: int = 4,
                smooth: bool = True) -> float:
    if len(candidates) != len(references):
        raise ValueError("one reference list per candidate")
    M = [0] * max_n
    T = [0] * max_n
    c_len = r_len = 0
    for cand, refs in zip(candidates, references):
        m, t, cl, rl = _bleu_stats(tokenize(cand), [tokenize(r) for r in refs], max_n)
        M = [a + b for a, b in zip(M, m)]
        T = [a + b for a, b in zip(T, t)]
        c_len += cl
        r_len += rl
    return _combine(M, T, c_len, r_len, smooth)


# ---------------------------------------------------------------------------
# ROUGE-L


def lcs_length(a: Sequence, b: Sequence) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str | Sequence[str], beta: float = 1.2) -> float:
    """LCS F-measure; with several references the best one counts."""
    if not isinstance(reference, str):
        return max(rouge_l(candidate, r, beta) for r in reference)
    c, r = tokenize(candidate), tokenize(reference)
    lcs = lcs_length(c, r)
    if lcs == 0:
        return 0.0
    prec, rec = lcs / len(c), lcs / len(r)
    return (1 + beta ** 2) * prec * rec / (rec + beta ** 2 * prec)


METRICS = ("r@1", "r@5", "r@10", "mr", "mrr", "bleu", "rouge_l")


def evaluate(rows: Sequence[dict], metrics: Sequence[str] = METRICS) -> dict:
    """Aggregate metrics over task rows.

    Ranking metrics use rows with ``scores``/``relevant``; BLEU and ROUGE-L
    use rows with ``hypothesis``/``references``. A metric with no usable
    rows reports ``None``.
    """
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise ValueError(f"unknown metric(s): {unknown}")
    tasks = [RankingTask.from_dict(r) for r in rows if "scores" in r and "relevant" in r]
    gens = [(r["hypothesis"], r["references"]) for r in rows if "hypothesis" in r and r.get("references")]
    out: dict = {"n_ranking_tasks": len(tasks), "n_generation_rows": len(gens)}
    for m in metrics:
        if m.startswith("r@"):
            out[m] = recall_at_k(tasks, int(m[2:])) if tasks else None
        elif m == "mr":
            out[m] = mean_rank(tasks) if tasks else None
        elif m == "mrr":
            out[m] = mrr(tasks) if tasks else None
        elif m == "bleu":
            out[m] = sum(bleu(h, refs) for h, refs in gens) / len(gens) if gens else None
        elif m == "rouge_l":
            out[m] = sum(rouge_l(h, refs) for h, refs in gens) / len(gens) if gens else None
    return out
