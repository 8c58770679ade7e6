import pytest

from qabias.data import QAItem
from qabias.scorer import ScorerConfig
from qabias.synth import SyntheticBiasConfig, generate_synthetic_dataset


def make_item(item_id="it-0", question="Why did Mara open the door?",
              answers=("one", "two", "three", "four", "five"),
              correct_idx=0, annotator_id="a0", dataset_id="test"):
    return QAItem(
        item_id=item_id,
        dataset_id=dataset_id,
        question=question,
        answers=tuple(answers),
        correct_idx=correct_idx,
        annotator_id=annotator_id,
    )


@pytest.fixture
def marker_dataset():
    """300 items, 5 annotators, every correct answer carries its annotator marker."""
    return generate_synthetic_dataset(
        SyntheticBiasConfig(n_items=300, k_annotators=5, marker_bias_rate=1.0, seed=7)
    )


@pytest.fixture
def plain_dataset():
    """200 items without any planted signal."""
    return generate_synthetic_dataset(
        SyntheticBiasConfig(n_items=200, k_annotators=4, marker_bias_rate=0.0, seed=11)
    )


@pytest.fixture
def fast_lexical():
    return ScorerConfig.lexical(epochs=8)
