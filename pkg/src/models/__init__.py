"""Data models for SB-MCL entities"""

from .stream import Domain, StreamSpec
from .episode import Episode, TaskParams
from .config import HeadKind, PredictMode, MetaConfig, HEAD_DOMAINS
from .metrics import MetricsRow, EpisodeLossReport, CSV_COLUMNS, METRIC_NAMES
from .checkpoint import Checkpoint
