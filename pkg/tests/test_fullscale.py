"""Full-scale reproduction profile: licensed corpora + GPU fine-tuning.

Skipped unless QABIAS_MOVIEQA_PATH and QABIAS_TVQA_PATH point at the
canonical-format corpora; run explicitly with `pytest -m fullscale`.
Every comparison uses the +/- FULLSCALE_TOLERANCE accuracy-point band.
"""

import os

import pytest

from qabias.bias import (
    build_annotator_minisplits,
    inter_annotator_matrix,
    non_overlap_resplit_suite,
    select_top_annotators,
)
from qabias.data import RandomRule, make_split, parse_dataset_file
from qabias.experiments import DatasetWithSplits, ablation_suite, cross_dataset_matrix
from qabias.fullscale import (
    ABLATION_REFERENCE,
    ANNOTATOR_DIAGONAL_REFERENCE,
    DATASET_STATS_REFERENCE,
    FULLSCALE_TOLERANCE,
    MINI_TRAIN,
    MINI_VALID,
    RESPLIT_REFERENCE,
    TRANSFER_REFERENCE,
)
from qabias.scorer import ScorerConfig

pytestmark = pytest.mark.fullscale

ENV_PATHS = {"movieqa": "QABIAS_MOVIEQA_PATH", "tvqa": "QABIAS_TVQA_PATH"}


def corpus(dataset_id):
    path = os.environ.get(ENV_PATHS[dataset_id])
    if not path:
        pytest.skip(f"{ENV_PATHS[dataset_id]} not set")
    result = parse_dataset_file(path, "canonical_jsonl", dataset_id=dataset_id)
    assert not result.errors, f"{dataset_id}: {len(result.errors)} rejected records"
    return result.handle


def transformer_config(**over):
    # fine-tuning recipe used for the reference numbers; no search
    return ScorerConfig(
        encoder="pretrained_transformer", learning_rate=1e-6,
        questions_per_batch=3, epochs=16, checkpoint_policy="last",
        encoder_name="roberta-large-mnli", **over,
    )


def within(measured, reference):
    return abs(measured - reference) <= FULLSCALE_TOLERANCE


@pytest.mark.parametrize("dataset_id", ["movieqa", "tvqa"])
def test_corpus_stats_match_reference(dataset_id):
    ds = corpus(dataset_id)
    ref = DATASET_STATS_REFERENCE[dataset_id]
    assert ds.stats.n_items == ref["n_items"]
    if ref["n_annotators"] is not None:
        assert ds.stats.n_annotators == ref["n_annotators"]
    assert abs(ds.stats.pct_why_how - ref["pct_why_how"]) <= 0.5
    assert abs(ds.stats.avg_question_len - ref["avg_question_len"]) <= 0.5
    assert abs(ds.stats.avg_answer_len - ref["avg_answer_len"]) <= 0.5


@pytest.mark.parametrize("dataset_id", ["movieqa", "tvqa"])
def test_context_free_ablations(dataset_id):
    ds = corpus(dataset_id)
    train, valid = make_split(ds, RandomRule(0.9), seed=0)
    results = ablation_suite(ds, transformer_config(), train, valid)
    for mode, ref_acc in ABLATION_REFERENCE[dataset_id].items():
        assert within(results[mode].accuracy, ref_acc), (
            f"{dataset_id}/{mode}: {results[mode].accuracy:.2f} vs {ref_acc}"
        )


def test_cross_dataset_transfer():
    triples = []
    for dataset_id in TRANSFER_REFERENCE["train_ids"]:
        ds = corpus(dataset_id)
        triples.append(DatasetWithSplits(ds, *make_split(ds, RandomRule(0.9), seed=0)))
    tm = cross_dataset_matrix(triples, transformer_config())
    for i in range(2):
        for j in range(2):
            assert within(tm.acc[i][j], TRANSFER_REFERENCE["acc"][i][j])


def test_tvqa_annotator_matrix_diagonals():
    ds = corpus("tvqa")
    annots = select_top_annotators(ds, 10)
    minis = build_annotator_minisplits(ds, annots, MINI_TRAIN, MINI_VALID, seed=0)
    sm = inter_annotator_matrix(ds, minis, transformer_config())
    for annotator, ref_acc in ANNOTATOR_DIAGONAL_REFERENCE.items():
        i = sm.annotators.index(annotator)
        assert within(sm.acc[i][i], ref_acc)


def test_tvqa_resplit_shifts():
    ds = corpus("tvqa")
    annots = select_top_annotators(ds, 10)
    report = non_overlap_resplit_suite(
        ds, annots, transformer_config(),
        per_annotator_train=MINI_TRAIN, per_annotator_valid=MINI_VALID, seed=0,
    )
    assert within(report.overlap_acc, RESPLIT_REFERENCE["overlap_acc"])
    by_id = {a: shift for a, _, shift in report.per_dropped}
    for annotator, ref_shift in RESPLIT_REFERENCE["shifts"].items():
        assert abs(by_id[annotator] - ref_shift) <= FULLSCALE_TOLERANCE
