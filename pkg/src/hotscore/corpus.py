"""Video/comment corpus ingestion, rule-based filtering and summary statistics.

Corpus files are JSONL. A line carrying ``comment_id`` is a comment, any
other line is a video. Filtering follows a fixed rule order (length, emoji,
ascii, lexicon); a comment breaking several rules is reported once, under the
first rule it fails.
"""

from __future__ import annotations

import json
import statistics
import unicodedata
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, Sequence

THEMES = (
    "food", "travel", "music", "dance", "comedy", "sports", "games", "pets",
    "beauty", "fashion", "tech", "education", "news", "film", "auto",
    "parenting", "health", "finance", "art", "life",
)

FILTER_RULES = ("length", "emoji", "ascii", "lexicon")
LEXICON_NAMES = ("profanity", "political", "negative", "promotional")

MIN_CHARS = 1
MAX_CHARS = 50
MIN_COMMENTS_PER_VIDEO = 2

# Code point ranges treated as emoji.
_EMOJI_RANGES = (
    (0x1F000, 0x1FAFF),  # mahjong .. symbols & pictographs extended-A
    (0x2600, 0x27BF),    # misc symbols, dingbats
    (0x2300, 0x23FF),    # misc technical (watch, hourglass, ...)
    (0x2B05, 0x2B07),
    (0x2B1B, 0x2B1C),
    (0x2B50, 0x2B55),
    (0xFE0F, 0xFE0F),    # emoji presentation selector
    (0x200D, 0x200D),    # zero width joiner
    (0x20E3, 0x20E3),    # combining enclosing keycap
    (0xE0020, 0xE007F),  # tag sequences
)
_EMOJI_SINGLES = frozenset({0x3030, 0x303D, 0x3297, 0x3299})


class CorpusError(Exception):
    """Raised when a corpus file cannot be read."""


class SchemaError(CorpusError):
    """One or more corpus lines violate the record schema.

    ``problems`` holds every ``(line_number, field, message)`` found, so a
    caller sees all malformed lines at once.
    """

    def __init__(self, problems: list[tuple[int, str, str]]):
        self.problems = problems
        head = "; ".join(f"line {n}: {f}: {m}" for n, f, m in problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        super().__init__(f"{len(problems)} schema violation(s): {head}{more}")


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    title: str = ""
    description: str = ""
    caption_text: str = ""
    audio_text: str = ""
    theme: str = "unknown"
    duration_s: float = 0.0
    keyframe_count: int = 0
    likes: int = 0
    comments_count: int = 0
    favorites: int = 0
    shares: int = 0
    created_at: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CommentRecord:
    comment_id: str
    video_id: str
    text: str
    likes: int = 0
    replies: int = 0
    human_labels: Mapping[str, int] | None = None
    human_rating: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["human_labels"] is None:
            del d["human_labels"]
        else:
            d["human_labels"] = dict(d["human_labels"])
        if d["human_rating"] is None:
            del d["human_rating"]
        else:
            d["human_rating"] = list(d["human_rating"])
        return d


@dataclass
class FilterReport:
    input_count: int = 0
    kept_count: int = 0
    rejected: dict[str, int] = field(default_factory=dict)

    def reconciles(self) -> bool:
        return self.input_count == self.kept_count + sum(self.rejected.values())

    def merge(self, other: "FilterReport") -> "FilterReport":
        rejected = Counter(self.rejected)
        rejected.update(other.rejected)
        return FilterReport(
            self.input_count + other.input_count,
            self.kept_count + other.kept_count,
            dict(rejected),
        )

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "rejected": dict(self.rejected),
        }


@dataclass(frozen=True)
class FilterLexicons:
    """Word lists for the content rules. Any list may be empty."""

    profanity: tuple[str, ...] = ()
    political: tuple[str, ...] = ()
    negative: tuple[str, ...] = ()
    promotional: tuple[str, ...] = ()

    def terms(self) -> list[str]:
        out: list[str] = []
        for name in LEXICON_NAMES:
            out.extend(getattr(self, name))
        return out

    @classmethod
    def from_dir(cls, path: str | Path) -> "FilterLexicons":
        """Load ``<name>.txt`` for each lexicon name found in ``path``."""
        path = Path(path)
        kwargs = {}
        for name in LEXICON_NAMES:
            f = path / f"{name}.txt"
            if f.exists():
                kwargs[name] = tuple(read_term_file(f))
        return cls(**kwargs)


def read_term_file(path: str | Path) -> list[str]:
    """One term per line, UTF-8; blank lines and ``#`` comments are skipped."""
    terms = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            terms.append(unicodedata.normalize("NFC", line))
    return terms


# ---------------------------------------------------------------------------
# parsing


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _parse_rfc3339(s: str) -> None:
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    datetime.fromisoformat(s)


_VIDEO_TEXT = ("title", "description", "caption_text", "audio_text", "theme")
_VIDEO_COUNTS = ("keyframe_count", "likes", "comments_count", "favorites", "shares")


def _video_from(obj: dict, lineno: int, problems: list) -> VideoRecord | None:
    start = len(problems)
    vid = obj.get("video_id")
    if not isinstance(vid, str) or not vid:
        problems.append((lineno, "video_id", "missing or not a non-empty string"))
    for key in _VIDEO_TEXT:
        if key in obj and not isinstance(obj[key], str):
            problems.append((lineno, key, "expected string"))
    for key in _VIDEO_COUNTS:
        if key in obj and (not _is_int(obj[key]) or obj[key] < 0):
            problems.append((lineno, key, "expected non-negative integer"))
    dur = obj.get("duration_s", 0)
    if isinstance(dur, bool) or not isinstance(dur, (int, float)) or dur < 0:
        problems.append((lineno, "duration_s", "expected non-negative number"))
    created = obj.get("created_at")
    if created is not None:
        try:
            if not isinstance(created, str):
                raise ValueError
            _parse_rfc3339(created)
        except ValueError:
            problems.append((lineno, "created_at", "expected RFC3339 timestamp"))
    if len(problems) > start:
        return None
    theme = obj.get("theme") or "unknown"
    return VideoRecord(
        video_id=vid,
        title=obj.get("title", ""),
        description=obj.get("description", ""),
        caption_text=obj.get("caption_text", ""),
        audio_text=obj.get("audio_text", ""),
        theme=theme if theme in THEMES else "unknown",
        duration_s=float(dur),
        keyframe_count=obj.get("keyframe_count", 0),
        likes=obj.get("likes", 0),
        comments_count=obj.get("comments_count", 0),
        favorites=obj.get("favorites", 0),
        shares=obj.get("shares", 0),
        created_at=created,
    )


def _comment_from(obj: dict, lineno: int, problems: list) -> CommentRecord | None:
    start = len(problems)
    for key in ("comment_id", "video_id"):
        if not isinstance(obj.get(key), str) or not obj.get(key):
            problems.append((lineno, key, "missing or not a non-empty string"))
    if not isinstance(obj.get("text"), str):
        problems.append((lineno, "text", "missing or not a string"))
    for key in ("likes", "replies"):
        if key in obj and (not _is_int(obj[key]) or obj[key] < 0):
            problems.append((lineno, key, "expected non-negative integer"))
    labels = obj.get("human_labels")
    if labels is not None:
        if not isinstance(labels, dict) or any(
            not _is_int(v) or v not in (0, 1) for v in labels.values()
        ):
            problems.append((lineno, "human_labels", "expected map of name -> 0/1"))
    rating = obj.get("human_rating")
    if rating is not None:
        if not isinstance(rating, list) or any(
            not _is_int(v) or not 1 <= v <= 5 for v in rating
        ):
            problems.append((lineno, "human_rating", "expected list of integers in 1..5"))
    if len(problems) > start:
        return None
    return CommentRecord(
        comment_id=obj["comment_id"],
        video_id=obj["video_id"],
        text=unicodedata.normalize("NFC", obj["text"]),
        likes=obj.get("likes", 0),
        replies=obj.get("replies", 0),
        human_labels=dict(labels) if labels is not None else None,
        human_rating=tuple(rating) if rating is not None else None,
    )


def parse_records(lines: Iterable[str]) -> tuple[list[VideoRecord], list[CommentRecord]]:
    videos: list[VideoRecord] = []
    comments: list[CommentRecord] = []
    problems: list[tuple[int, str, str]] = []
    seen_videos: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append((lineno, "<line>", f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            problems.append((lineno, "<line>", "expected a JSON object"))
            continue
        if "comment_id" in obj:
            rec = _comment_from(obj, lineno, problems)
            if rec is not None:
                comments.append(rec)
        else:
            rec = _video_from(obj, lineno, problems)
            if rec is not None:
                if rec.video_id in seen_videos:
                    problems.append((lineno, "video_id", f"duplicate id {rec.video_id!r}"))
                    continue
                seen_videos.add(rec.video_id)
                videos.append(rec)
    if problems:
        raise SchemaError(problems)
    return videos, comments


def parse_corpus(path: str | Path) -> tuple[list[VideoRecord], list[CommentRecord]]:
    """Parse a JSONL corpus file into videos and comments, in file order.

    Raises :class:`CorpusError` if the file cannot be read and
    :class:`SchemaError` (listing every bad line) on schema violations.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    return parse_records(lines)


def orphan_comments(videos: Sequence[VideoRecord], comments: Sequence[CommentRecord]) -> list[CommentRecord]:
    ids = {v.video_id for v in videos}
    return [c for c in comments if c.video_id not in ids]


def write_corpus(path: str | Path, videos: Iterable[VideoRecord], comments: Iterable[CommentRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in videos:
            fh.write(json.dumps(v.to_dict(), ensure_ascii=False) + "\n")
        for c in comments:
            fh.write(json.dumps(c.to_dict(), ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# filtering


def is_emoji_char(ch: str) -> bool:
    cp = ord(ch)
    if cp in _EMOJI_SINGLES:
        return True
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def contains_emoji(text: str) -> bool:
    return any(is_emoji_char(ch) for ch in text)


def is_pure_ascii(text: str) -> bool:
    """True when the trimmed text is non-empty and every code point is < 128."""
    text = text.strip()
    return bool(text) and all(ord(ch) < 128 for ch in text)


def char_length(text: str) -> int:
    """Length in Unicode scalar values after trimming whitespace."""
    return len(text.strip())


def _lexicon_hit(text: str, terms: Sequence[str]) -> bool:
    folded = text.casefold()
    return any(t.casefold() in folded for t in terms if t)


def rejection_rule(comment: CommentRecord, lexicons: FilterLexicons) -> str | None:
    """First rule the comment fails, or ``None`` if it survives."""
    text = comment.text
    n = char_length(text)
    if n < MIN_CHARS or n > MAX_CHARS:
        return "length"
    if contains_emoji(text):
        return "emoji"
    if is_pure_ascii(text):
        return "ascii"
    if _lexicon_hit(text, lexicons.terms()):
        return "lexicon"
    return None


def filter_comments(
    comments: Sequence[CommentRecord], lexicons: FilterLexicons | None = None
) -> tuple[list[CommentRecord], FilterReport]:
    lexicons = lexicons or FilterLexicons()
    kept = []
    rejected = {rule: 0 for rule in FILTER_RULES}
    for c in comments:
        rule = rejection_rule(c, lexicons)
        if rule is None:
            kept.append(c)
        else:
            rejected[rule] += 1
    return kept, FilterReport(len(comments), len(kept), rejected)


def filter_videos(
    videos: Sequence[VideoRecord], comments: Sequence[CommentRecord]
) -> tuple[list[VideoRecord], FilterReport]:
    """Drop videos left with fewer than two comments.

    ``comments`` should already be filtered; the count is taken over them.
    """
    per_video = Counter(c.video_id for c in comments)
    kept = [v for v in videos if per_video[v.video_id] >= MIN_COMMENTS_PER_VIDEO]
    report = FilterReport(len(videos), len(kept), {"too_few_comments": len(videos) - len(kept)})
    return kept, report


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class FeatureStats:
    mean: float
    median: float
    max: float
    min: float
    std: float

    def to_dict(self) -> dict:
        return asdict(self)


StatsTable = dict  # row label -> FeatureStats, in table order


def describe(values: Sequence[float]) -> FeatureStats:
    """Mean, median, max, min and population standard deviation."""
    if not values:
        raise ValueError("cannot describe an empty sequence")
    vals = [float(v) for v in values]
    return FeatureStats(
        mean=statistics.fmean(vals),
        median=float(statistics.median(vals)),
        max=max(vals),
        min=min(vals),
        std=statistics.pstdev(vals),
    )


VIDEO_ROWS = (
    ("Video Lengths", lambda v: v.duration_s),
    ("Video Keyframe Counts", lambda v: v.keyframe_count),
    ("Video Title Lengths", lambda v: len(v.title)),
    ("Video Description Lengths", lambda v: len(v.description)),
    ("Video Caption Lengths", lambda v: len(v.caption_text)),
    ("Audio Speech Lengths", lambda v: len(v.audio_text)),
    ("Video Likes Counts", lambda v: v.likes),
    ("Video Comments Counts", lambda v: v.comments_count),
    ("Video Favorites Counts", lambda v: v.favorites),
    ("Video Shares Counts", lambda v: v.shares),
)
COMMENT_ROWS = (
    ("Comment Likes Counts/per Video", lambda c: c.likes),
    ("Comment Replies Counts/per Video", lambda c: c.replies),
    ("Comment Lengths/per Video", lambda c: char_length(c.text)),
)


def corpus_stats(videos: Sequence[VideoRecord], comments: Sequence[CommentRecord]) -> StatsTable:
    """Per-feature summary rows in the dataset-statistics table layout.

    Video rows need at least one video, comment rows at least one comment.
    """
    if not videos and not comments:
        raise ValueError("corpus is empty")
    table: StatsTable = {}
    if videos:
        for label, get in VIDEO_ROWS:
            table[label] = describe([get(v) for v in videos])
    if comments:
        for label, get in COMMENT_ROWS:
            table[label] = describe([get(c) for c in comments])
    return table


def format_stats_table(table: StatsTable) -> str:
    header = f"{'Feature':<34}{'Mean':>14}{'Median':>12}{'Max':>14}{'Min':>10}{'Std':>14}"
    lines = [header, "-" * len(header)]
    for label, s in table.items():
        lines.append(
            f"{label:<34}{s.mean:>14.2f}{s.median:>12.2f}{s.max:>14.2f}{s.min:>10.2f}{s.std:>14.4g}"
        )
    return "\n".join(lines) + "\n"
