"""Synthetic A5 dataset generator with planted, known-by-construction biases.

Every bias the audit probes for can be planted here with a controlled
strength: per-annotator signature tokens in correct answers, a token-count
offset on correct answers, and question-type-conditional variants. Used as
the desk-scale surrogate for real crowd-sourced corpora.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Optional

from qabias.data import DatasetHandle, QAItem
from qabias.errors import ValidationError

_DEFAULT_QTYPE_MIX = {"what": 0.2, "who": 0.2, "where": 0.2, "why": 0.2, "how": 0.2}

_NAMES = ["mara", "jonas", "petra", "elio", "sana", "viktor", "ida", "tomas"]
_VERBS = ["open", "chase", "borrow", "repair", "hide", "paint", "trade", "follow"]
_NOUNS = ["ladder", "engine", "letter", "lantern", "bridge", "garden", "violin", "map"]
_FILLERS = [
    "because", "near", "during", "quietly", "old", "broken", "red", "small",
    "yesterday", "again", "outside", "alone", "slowly", "twice",
]


@dataclass(frozen=True)
class SyntheticBiasConfig:
    n_items: int
    k_annotators: int
    marker_bias_rate: float = 0.0
    length_bias_delta: int = 0
    qtype_mix: dict = field(default_factory=lambda: dict(_DEFAULT_QTYPE_MIX))
    seed: int = 0
    dataset_id: str = "synthetic"
    # Restrict marker planting to these question prefixes (None = all).
    bias_qtypes: Optional[frozenset] = None
    # When true, items outside bias_qtypes get the marker on a random
    # distractor instead, so the marker is predictive only jointly with
    # the question prefix.
    conditional_marker: bool = False

    def validate(self) -> None:
        if self.n_items < 0:
            raise ValidationError(f"n_items must be >= 0, got {self.n_items}")
        if self.k_annotators < 0:
            raise ValidationError(f"k_annotators must be >= 0, got {self.k_annotators}")
        if self.k_annotators > 0 and self.n_items < self.k_annotators:
            raise ValidationError(
                f"n_items ({self.n_items}) < k_annotators ({self.k_annotators})"
            )
        if not 0.0 <= self.marker_bias_rate <= 1.0:
            raise ValidationError(
                f"marker_bias_rate {self.marker_bias_rate} outside [0, 1]"
            )
        if self.length_bias_delta < 0:
            raise ValidationError("length_bias_delta must be >= 0")
        if not self.qtype_mix:
            raise ValidationError("qtype_mix must be non-empty")
        if any(p < 0 for p in self.qtype_mix.values()):
            raise ValidationError("qtype_mix probabilities must be >= 0")
        if sum(self.qtype_mix.values()) <= 0:
            raise ValidationError("qtype_mix must have positive total mass")


def marker_token(dataset_id: str, annotator_index: int) -> str:
    """Signature token for one annotator; unique per (dataset, annotator)."""
    slug = re.sub(r"[^a-z0-9]", "", dataset_id.lower()) or "ds"
    return f"zz{slug}mk{annotator_index}"


def generate_synthetic_dataset(config: SyntheticBiasConfig) -> DatasetHandle:
    """Generate a planted-bias dataset, deterministic given the config seed.

    Annotators a0..a{k-1} are assigned round-robin; each has a unique
    signature token. With probability marker_bias_rate an item's correct
    answer carries its annotator's token (and no distractor ever does).
    """
    config.validate()
    rng = random.Random(config.seed)
    prefixes = sorted(config.qtype_mix)
    weights = [config.qtype_mix[p] for p in prefixes]

    items = []
    for i in range(config.n_items):
        a_idx = i % config.k_annotators if config.k_annotators else None
        annotator = f"a{a_idx}" if a_idx is not None else None
        prefix = rng.choices(prefixes, weights=weights, k=1)[0]
        question = (
            f"{prefix.capitalize()} did {rng.choice(_NAMES)} "
            f"{rng.choice(_VERBS)} the {rng.choice(_NOUNS)}?"
        )
        answers = [_random_answer(rng) for _ in range(5)]
        correct_idx = rng.randrange(5)

        in_biased_qtype = config.bias_qtypes is None or prefix in config.bias_qtypes
        if a_idx is not None and rng.random() < config.marker_bias_rate:
            token = marker_token(config.dataset_id, a_idx)
            if in_biased_qtype:
                answers[correct_idx] += " " + token
            elif config.conditional_marker:
                wrong = rng.choice([j for j in range(5) if j != correct_idx])
                answers[wrong] += " " + token
        if config.length_bias_delta and in_biased_qtype:
            answers[correct_idx] += " pad" * config.length_bias_delta

        items.append(
            QAItem(
                item_id=f"{config.dataset_id}-{i:06d}",
                dataset_id=config.dataset_id,
                question=question,
                answers=tuple(answers),
                correct_idx=correct_idx,
                annotator_id=annotator,
            )
        )
    return DatasetHandle(config.dataset_id, items)


def _random_answer(rng: random.Random) -> str:
    n_extra = rng.randint(1, 3)
    words = [rng.choice(_NAMES), rng.choice(_VERBS), rng.choice(_NOUNS)]
    words += [rng.choice(_FILLERS) for _ in range(n_extra)]
    rng.shuffle(words)
    return " ".join(words)
