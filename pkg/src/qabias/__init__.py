"""Bias audit toolkit for 5-way multiple-choice QA datasets."""

__version__ = "0.1.0"

from qabias.data import (  # noqa: F401
    DatasetHandle,
    DatasetStats,
    LoadResult,
    QAItem,
    Split,
    make_split,
    parse_dataset_file,
    write_canonical,
)
from qabias.synth import SyntheticBiasConfig, generate_synthetic_dataset  # noqa: F401
from qabias.scorer import ScorerConfig, ScoreVector, train_scorer, load_scorer  # noqa: F401
