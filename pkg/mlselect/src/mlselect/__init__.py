"""Supervised analog beam selection on simulator-exported datasets."""

from .data import Dataset, Standardizer, load_dataset
from .errors import ConfigError, DataError, MlSelectError
from .evaluate import evaluate, format_report, score_with_cli, write_assignments
from .model import MODELS, BeamPredictor, MlJob, train

__version__ = "0.1.0"
