"""Hot-comment scoring, reward mathematics, Tree-of-Thought refinement and
evaluation metrics for short-video comments."""

from .corpus import CommentRecord, FilterLexicons, FilterReport, VideoRecord, filter_comments, filter_videos, parse_corpus
from .metrics import MetricParams, ScoreBreakdown, score_comment
from .providers import Providers, ProviderConfig
from .weights import WeightSet, load_weights

__version__ = "0.1.0"

__all__ = [
    "CommentRecord", "FilterLexicons", "FilterReport", "MetricParams", "ProviderConfig", "Providers",
    "ScoreBreakdown", "VideoRecord", "WeightSet", "filter_comments", "filter_videos", "load_weights",
    "parse_corpus", "score_comment",
]
