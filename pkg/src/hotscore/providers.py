"""Pluggable stand-ins for the LLM and knowledge-base calls used by scoring.

Every provider has a deterministic offline default. When ``ProviderConfig``
names an endpoint, requests go out as JSON over HTTP POST::

    {"task": "keywords" | "rhetoric" | "trending" | "generate",
     "input": str, "round": int}  ->  {"output": str | [str] | int}
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import string
import unicodedata
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

EMBED_DIM = 256
TOP_KEYWORDS = 10


class ProviderError(Exception):
    """A remote provider failed after all retries."""


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str | None = None
    timeout_ms: int = 10_000
    retry_count: int = 2
    vote_rounds: int = 5

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.retry_count < 0:
            raise ValueError("retry_count must be non-negative")
        if self.vote_rounds < 1:
            raise ValueError("vote_rounds must be >= 1")


@dataclass(frozen=True)
class KeywordSet:
    keywords: tuple[str, ...]
    source: str = "local-default"  # or "remote"
    consistency: float | None = None
    fallback: bool = False

    def __len__(self) -> int:
        return len(self.keywords)


# ---------------------------------------------------------------------------
# remote transport


class RemoteClient:
    def __init__(self, config: ProviderConfig):
        if not config.endpoint_url:
            raise ValueError("RemoteClient needs an endpoint_url")
        self.config = config

    def call(self, task: str, text: str, round_: int = 0):
        body = json.dumps({"task": task, "input": text, "round": round_}).encode("utf-8")
        last_exc: Exception | None = None
        for _ in range(self.config.retry_count + 1):
            req = urllib.request.Request(
                self.config.endpoint_url,
                data=body,
                headers={"Content-Type": "application/json"},
                method="POST",
            )
            try:
                with urllib.request.urlopen(req, timeout=self.config.timeout_ms / 1000) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                return payload["output"]
            except (urllib.error.URLError, OSError, ValueError, KeyError, TypeError) as exc:
                last_exc = exc
                logger.debug("remote %s call failed: %s", task, exc)
        raise ProviderError(f"remote {task!r} failed after {self.config.retry_count + 1} attempts: {last_exc}")


def majority_vote(responses: Sequence) -> tuple[object, float]:
    """Most common response (first occurrence wins ties) and its share."""
    if not responses:
        raise ValueError("no responses to vote over")
    keys = [json.dumps(r, ensure_ascii=False, sort_keys=True) for r in responses]
    counts = Counter(keys)
    best = max(counts.values())
    for key, resp in zip(keys, responses):
        if counts[key] == best:
            return resp, best / len(responses)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# tokenization / keywords


def _load_resource_terms(name: str) -> list[str]:
    text = resources.files("hotscore.resources").joinpath(name).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


STOPWORDS_EN = frozenset(_load_resource_terms("stopwords_en.txt"))
STOPCHARS_ZH = frozenset("".join(_load_resource_terms("stopchars_zh.txt")))

_CJK = (
    "\u3400-\u4dbf\u4e00-\u9fff\uf900-\ufaff"
    "\U00020000-\U0002a6df\U0002a700-\U0002ebef"
)
_TOKEN_RE = re.compile(rf"[{_CJK}]+|[A-Za-z0-9]+(?:'[A-Za-z]+)?")
_CJK_RE = re.compile(rf"[{_CJK}]")


def is_cjk(ch: str) -> bool:
    return bool(_CJK_RE.match(ch))


def normalize_term(term: str) -> str:
    """NFC, with ASCII letters lowercased and CJK left verbatim."""
    term = unicodedata.normalize("NFC", term.strip())
    return _ascii_lower(term)


def content_tokens(text: str) -> list[str]:
    """Word tokens for ASCII runs, overlapping character bigrams for CJK runs.

    Stop words are dropped; a CJK bigram is dropped when both its characters
    are function characters.
    """
    out = []
    for run in _TOKEN_RE.findall(unicodedata.normalize("NFC", text)):
        if is_cjk(run[0]):
            if len(run) == 1:
                grams = [run]
            else:
                grams = [run[i:i + 2] for i in range(len(run) - 1)]
            out.extend(g for g in grams if not all(ch in STOPCHARS_ZH for ch in g))
        else:
            tok = run.lower()
            if tok not in STOPWORDS_EN and not tok.isdigit():
                out.append(tok)
    return out


def rank_by_frequency(tokens: Sequence[str], top: int = TOP_KEYWORDS) -> list[str]:
    counts = Counter(tokens)
    first: dict[str, int] = {}
    for i, t in enumerate(tokens):
        first.setdefault(t, i)
    ranked = sorted(counts, key=lambda t: (-counts[t], first[t]))
    return ranked[:top]


def _dedupe(items: Iterable[str]) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for it in items:
        it = normalize_term(it)
        if it:
            seen.setdefault(it, None)
    return tuple(seen)


def local_keywords(caption: str, top: int = TOP_KEYWORDS) -> KeywordSet:
    return KeywordSet(_dedupe(rank_by_frequency(content_tokens(caption), top)))


def extract_keywords(caption: str, config: ProviderConfig | None = None) -> KeywordSet:
    """Caption keywords; by 5-round majority vote when a remote is configured.

    A remote failure falls back to the local extractor and sets ``fallback``.
    """
    if not caption or not caption.strip():
        raise ValueError("caption must be non-empty")
    config = config or ProviderConfig()
    if not config.endpoint_url:
        return local_keywords(caption)
    client = RemoteClient(config)
    try:
        responses = []
        for r in range(config.vote_rounds):
            out = client.call("keywords", caption, r)
            if isinstance(out, str):
                out = [out]
            responses.append(list(_dedupe(out)))
    except ProviderError as exc:
        logger.warning("keyword extraction fell back to local default: %s", exc)
        kw = local_keywords(caption)
        return KeywordSet(kw.keywords, "local-default", None, fallback=True)
    winner, share = majority_vote(responses)
    return KeywordSet(tuple(winner), "remote", share)


# ---------------------------------------------------------------------------
# embedding


def char_ngrams(text: str, n_max: int = 3) -> list[str]:
    return [text[i:i + n] for n in range(1, n_max + 1) for i in range(len(text) - n + 1)]


def ngram_bucket(gram: str, dim: int = EMBED_DIM) -> int:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


def embed(text: str, dim: int = EMBED_DIM) -> np.ndarray:
    """Hashed character 1..3-gram counts, L2-normalized.

    Stable across processes (no use of the salted builtin ``hash``).
    """
    text = unicodedata.normalize("NFC", text or "").strip()
    if not text:
        raise ValueError("cannot embed empty text")
    vec = np.zeros(dim, dtype=np.float64)
    for gram in char_ngrams(text):
        vec[ngram_bucket(gram, dim)] += 1.0
    return vec / np.linalg.norm(vec)


# ---------------------------------------------------------------------------
# term lexicons (rhetoric / trending) and span scanning


def _ascii_lower(text: str) -> str:
    return "".join(ch.lower() if ch in string.ascii_letters else ch for ch in text)


def scan_terms(text: str, terms: Iterable[str], fold: bool = True) -> list[tuple[int, int, str]]:
    """Non-overlapping occurrences of ``terms``, longest match first.

    All candidate spans are collected, then accepted greedily by length
    (longer first, then leftmost). Returns ``(start, end, term)`` sorted by
    start.
    """
    hay = _ascii_lower(text) if fold else text
    cands = []
    for term in set(terms):
        if not term:
            continue
        needle = _ascii_lower(term) if fold else term
        start = hay.find(needle)
        while start != -1:
            cands.append((start, start + len(needle), term))
            start = hay.find(needle, start + 1)
    cands.sort(key=lambda c: (-(c[1] - c[0]), c[0], c[2]))
    taken = [False] * (len(hay) + 1)
    chosen = []
    for s, e, term in cands:
        if any(taken[s:e]):
            continue
        for i in range(s, e):
            taken[i] = True
        chosen.append((s, e, term))
    chosen.sort()
    return chosen


@dataclass(frozen=True)
class TermLexicon:
    """Literal terms plus optional regex patterns (``re:`` prefix in files)."""

    terms: tuple[str, ...] = ()
    patterns: tuple[str, ...] = ()

    def count(self, text: str) -> int:
        text = unicodedata.normalize("NFC", text or "")
        n = len(scan_terms(text, self.terms))
        for pat in self.patterns:
            n += sum(1 for _ in re.finditer(pat, text))
        return n

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "TermLexicon":
        terms, patterns = [], []
        for ln in lines:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            if ln.startswith("re:"):
                re.compile(ln[3:])
                patterns.append(ln[3:])
            else:
                terms.append(unicodedata.normalize("NFC", ln))
        return cls(tuple(terms), tuple(patterns))

    @classmethod
    def from_file(cls, path: str | Path) -> "TermLexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def builtin(cls, name: str) -> "TermLexicon":
        text = resources.files("hotscore.resources").joinpath(name).read_text(encoding="utf-8")
        return cls.from_lines(text.splitlines())


def count_rhetoric(comment: str, lexicon: TermLexicon, config: ProviderConfig | None = None) -> int:
    """Occurrences of rhetorical markers in ``comment`` (x_r)."""
    return _count(comment, lexicon, "rhetoric", config)


def count_trending(comment: str, lexicon: TermLexicon, config: ProviderConfig | None = None) -> int:
    """Occurrences of trending terms in ``comment`` (x_t)."""
    return _count(comment, lexicon, "trending", config)


def _count(comment: str, lexicon: TermLexicon, task: str, config: ProviderConfig | None) -> int:
    if config is None or not config.endpoint_url:
        return lexicon.count(comment)
    client = RemoteClient(config)
    try:
        votes = [int(client.call(task, comment, r)) for r in range(config.vote_rounds)]
    except (ProviderError, ValueError, TypeError) as exc:
        logger.warning("%s count fell back to local lexicon: %s", task, exc)
        return lexicon.count(comment)
    winner, _ = majority_vote(votes)
    return max(0, int(winner))


# ---------------------------------------------------------------------------
# knowledge base / entity linking


@dataclass(frozen=True)
class EntityLink:
    surface: str
    start: int
    end: int
    entity_id: str
    description: str


class KnowledgeBase:
    """Alias lookup over a local ``{"entities": {id: {aliases, description}}}`` file."""

    def __init__(self, entities: dict[str, dict]):
        self.entities = entities
        self._alias_to_id: dict[str, str] = {}
        for eid, ent in entities.items():
            for alias in ent.get("aliases", []):
                key = normalize_term(alias)
                if key:
                    self._alias_to_id.setdefault(key, eid)

    @classmethod
    def from_file(cls, path: str | Path) -> "KnowledgeBase":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ProviderError(f"cannot read knowledge base {path}: {exc}") from exc
        if not isinstance(data, dict) or not isinstance(data.get("entities"), dict):
            raise ProviderError(f"knowledge base {path} lacks an 'entities' object")
        return cls(data["entities"])

    def description(self, entity_id: str) -> str:
        return self.entities[entity_id].get("description", "")

    def link(self, text: str) -> list[EntityLink]:
        text = unicodedata.normalize("NFC", text or "")
        links = []
        for s, e, alias in scan_terms(text, self._alias_to_id):
            eid = self._alias_to_id[alias]
            links.append(EntityLink(text[s:e], s, e, eid, self.description(eid)))
        return links


def link_entities(text: str, kb: KnowledgeBase) -> list[EntityLink]:
    return kb.link(text)


# ---------------------------------------------------------------------------
# text generation


class _KeepMissing(dict):
    def __missing__(self, key):
        return ""


def render(template: str, **fields) -> str:
    """Fill ``{name}`` slots; unknown names expand to the empty string."""
    return string.Formatter().vformat(template, (), _KeepMissing(fields))


class TextGenerator:
    """Template-filling generator; returns the rendered prompt.

    With an endpoint configured, the prompt is sent as a ``generate`` task and
    failures propagate as :class:`ProviderError`.
    """

    def __init__(self, config: ProviderConfig | None = None):
        self.config = config or ProviderConfig()

    @property
    def remote(self) -> bool:
        return bool(self.config.endpoint_url)

    def generate(self, prompt: str, **fields) -> str:
        return generate_text(prompt, self.config, **fields)


def generate_text(prompt: str, config: ProviderConfig | None = None, **fields) -> str:
    if not prompt or not prompt.strip():
        raise ValueError("prompt must be non-empty")
    text = render(prompt, **fields) if fields else prompt
    config = config or ProviderConfig()
    if config.endpoint_url:
        out = RemoteClient(config).call("generate", text, 0)
        if not isinstance(out, str) or not out:
            raise ProviderError("remote generate returned no text")
        return out
    return " ".join(text.split())


# ---------------------------------------------------------------------------
# bundle


@dataclass
class Providers:
    config: ProviderConfig = field(default_factory=ProviderConfig)
    rhetoric: TermLexicon = field(default_factory=lambda: TermLexicon.builtin("rhetoric.txt"))
    trending: TermLexicon = field(default_factory=lambda: TermLexicon.builtin("trending.txt"))
    kb: KnowledgeBase | None = None
    embed_dim: int = EMBED_DIM

    def keywords(self, caption: str) -> KeywordSet:
        if not caption or not caption.strip():
            return KeywordSet(())
        return extract_keywords(caption, self.config)

    def embed(self, text: str) -> np.ndarray:
        return embed(text, self.embed_dim)

    def count_rhetoric(self, comment: str) -> int:
        return count_rhetoric(comment, self.rhetoric, self.config)

    def count_trending(self, comment: str) -> int:
        return count_trending(comment, self.trending, self.config)

    @property
    def generator(self) -> TextGenerator:
        return TextGenerator(self.config)
