"""Independent reference evaluators for the tests.

Written in plain Python with explicit loops so they share no code path with
the package implementations they check.
"""

import math
from fractions import Fraction


def length_penalty(L, L_min=1, L_max=50, alpha=0.05):
    if L < L_min:
        v = L / L_min
    elif L > L_max:
        v = 1 - alpha * (L - L_max)
    else:
        v = L / L_max
    if v < 0:
        v = 0.0
    if v > 1:
        v = 1.0
    return v


def bigram_ratio(text):
    text = text.strip()
    seen = {}
    total = 0
    for i in range(len(text) - 1):
        g = text[i] + text[i + 1]
        seen[g] = seen.get(g, 0) + 1
        total += 1
    if total == 0:
        return 0.0
    return total / len(seen)


def logistic(x):
    return 1.0 / (1.0 + math.exp(-x)) if x > -700 else 0.0


def cosine(a, b):
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    return dot / (math.sqrt(na) * math.sqrt(nb))


def keyword_share(comment, keywords):
    if not keywords:
        return 0.0
    hits = 0
    for kw in keywords:
        found = False
        for start in range(len(comment) - len(kw) + 1):
            if comment[start:start + len(kw)] == kw:
                found = True
                break
        hits += found
    return hits / len(keywords)


def pearson(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return None
    return sxy / math.sqrt(sxx * syy)


def auc_rank_sum(scores, labels):
    """Mann-Whitney U from average ranks."""
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    r_pos = sum(r for r, y in zip(ranks, labels) if y == 1)
    return (r_pos - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def krippendorff_pairs(table, metric="interval"):
    """Alpha from pair enumeration, in exact fractions.

    Observed disagreement: within-unit ordered pairs weighted 1/(m_u - 1).
    Expected disagreement: all ordered pairs of pairable values.
    """
    units = []
    for j in range(max(len(r) for r in table)):
        vals = [r[j] for r in table if j < len(r) and r[j] is not None]
        if len(vals) >= 2:
            units.append(vals)
    pooled = [v for u in units for v in u]
    n = len(pooled)

    def d(a, b):
        if metric == "nominal":
            return Fraction(0 if a == b else 1)
        return Fraction(a - b) ** 2

    obs = Fraction(0)
    for u in units:
        s = Fraction(0)
        for i in range(len(u)):
            for k in range(len(u)):
                if i != k:
                    s += d(u[i], u[k])
        obs += s / (len(u) - 1)
    exp = Fraction(0)
    for i in range(n):
        for k in range(n):
            if i != k:
                exp += d(pooled[i], pooled[k])
    if exp == 0:
        return 1.0
    return float(1 - (n - 1) * obs / exp)


def best_rank_scan(scores, relevant):
    """Scan candidates in order of descending score, earliest index first on ties."""
    remaining = list(range(len(scores)))
    rank = 0
    while remaining:
        best = remaining[0]
        for i in remaining:
            if scores[i] > scores[best]:
                best = i
        remaining.remove(best)
        rank += 1
        if best in relevant:
            return rank
    raise ValueError("no relevant candidate")


def lcs_recursive(a, b):
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)
