import pytest

from qabias.data import RandomRule, Split, make_split
from qabias.errors import TrainingError
from qabias.experiments import (
    RANDOM_GUESS_ACC,
    DatasetWithSplits,
    ablation_suite,
    argmax_lowest,
    cross_dataset_matrix,
    evaluate_split,
)
from qabias.scorer import ScorerConfig, ScoreVector
from qabias.synth import SyntheticBiasConfig, generate_synthetic_dataset
from tests.conftest import make_item


class OracleScorer:
    """Test-only upper bound: reads correct_idx straight off the item."""

    def score_item(self, item):
        probs = [0.025] * 5
        probs[item.correct_idx] = 0.9
        return ScoreVector(tuple(probs))


class ConstantScorer:
    def score_item(self, item):
        return ScoreVector((0.2,) * 5)


class TableScorer:
    """Fixed per-item score table."""

    def __init__(self, table):
        self.table = table

    def score_item(self, item):
        return ScoreVector(self.table[item.item_id])


def split_of(ds):
    return Split("valid", "valid", frozenset(it.item_id for it in ds), "all")


class TestEvaluateSplit:
    def test_oracle_scores_100(self, marker_dataset):
        result = evaluate_split(OracleScorer(), split_of(marker_dataset), marker_dataset)
        assert result.accuracy == 100.0
        assert result.tie_count == 0

    def test_constant_scorer_accuracy_is_correct_idx_zero_rate(self, plain_dataset):
        result = evaluate_split(ConstantScorer(), split_of(plain_dataset), plain_dataset)
        frac_zero = sum(1 for it in plain_dataset if it.correct_idx == 0) / len(plain_dataset)
        assert result.accuracy == pytest.approx(100.0 * frac_zero)
        assert result.tie_count == result.n_items

    def test_hand_built_table_gives_75(self):
        items = [make_item(f"i{k}", correct_idx=k % 5) for k in range(4)]
        from qabias.data import DatasetHandle

        ds = DatasetHandle("hand", items)
        hi = [0.6, 0.1, 0.1, 0.1, 0.1]
        table = {
            "i0": tuple(hi),                      # predicts 0, correct (idx 0)
            "i1": (0.1, 0.6, 0.1, 0.1, 0.1),      # predicts 1, correct (idx 1)
            "i2": (0.1, 0.1, 0.6, 0.1, 0.1),      # predicts 2, correct (idx 2)
            "i3": tuple(hi),                      # predicts 0, wrong (idx 3)
        }
        result = evaluate_split(TableScorer(table), split_of(ds), ds)
        assert result.accuracy == 75.0

    def test_accuracy_equals_per_item_recount(self, marker_dataset, fast_lexical):
        from qabias.scorer import train_scorer

        train, valid = make_split(marker_dataset, RandomRule(0.8), seed=0)
        scorer = train_scorer(fast_lexical, train, marker_dataset)
        result = evaluate_split(scorer, valid, marker_dataset)
        assert result.accuracy == result.recount_accuracy()

    def test_order_independent(self, marker_dataset):
        ids = sorted(it.item_id for it in marker_dataset)
        a = Split("a", "valid", frozenset(ids[:100]), "")
        b = Split("b", "valid", frozenset(reversed(ids[:100])), "")
        ra = evaluate_split(OracleScorer(), a, marker_dataset)
        rb = evaluate_split(OracleScorer(), b, marker_dataset)
        assert ra.accuracy == rb.accuracy

    def test_empty_split_rejected(self, marker_dataset):
        with pytest.raises(TrainingError, match="empty"):
            evaluate_split(OracleScorer(), Split("e", "valid", frozenset(), ""), marker_dataset)

    def test_tie_break_lowest_index(self):
        pred, tie = argmax_lowest((0.25, 0.25, 0.25, 0.15, 0.10))
        assert pred == 0 and tie


class TestAblationSuite:
    def test_question_conditional_bias_opens_qa_gap(self):
        # Marker sits in the correct answer only for why/how questions and
        # on a distractor otherwise: answer-only has a ceiling at the
        # biased-question fraction, qa mode can condition on the prefix.
        ds = generate_synthetic_dataset(SyntheticBiasConfig(
            n_items=800, k_annotators=4, marker_bias_rate=1.0, seed=21,
            bias_qtypes=frozenset({"why", "how"}), conditional_marker=True,
        ))
        # Brute-force conditional-frequency oracle for the answer-only ceiling:
        # picking the marker answer is right exactly on biased-qtype items.
        from qabias.qtypes import classify_question_type

        biased = sum(
            1 for it in ds if classify_question_type(it.question) in ("why", "how")
        )
        ceiling = 100.0 * biased / len(ds)
        assert ceiling < 60.0

        train, valid = make_split(ds, RandomRule(0.9), seed=0)
        results = ablation_suite(ds, ScorerConfig.lexical(), train, valid)
        assert set(results) == {"qa", "answer_only", "qa_frozen"}
        assert results["qa"].accuracy - results["answer_only"].accuracy >= 10.0
        assert RANDOM_GUESS_ACC == 20.0

    def test_answer_side_bias_keeps_modes_close(self, marker_dataset, fast_lexical):
        train, valid = make_split(marker_dataset, RandomRule(0.8), seed=0)
        results = ablation_suite(marker_dataset, fast_lexical, train, valid)
        gap = abs(results["qa"].accuracy - results["answer_only"].accuracy)
        assert gap <= 5.0


class TestCrossDatasetMatrix:
    def _pair(self, seed, ds_id):
        ds = generate_synthetic_dataset(SyntheticBiasConfig(
            n_items=400, k_annotators=4, marker_bias_rate=1.0,
            seed=seed, dataset_id=ds_id,
        ))
        train, valid = make_split(ds, RandomRule(0.9), seed=0)
        return DatasetWithSplits(ds, train, valid)

    def test_single_dataset_degenerate(self, fast_lexical):
        d = self._pair(1, "solo")
        tm = cross_dataset_matrix([d], fast_lexical)
        from qabias.scorer import train_scorer

        scorer = train_scorer(fast_lexical, d.train, d.handle)
        direct = evaluate_split(scorer, d.valid, d.handle)
        assert tm.acc == ((direct.accuracy,),)

    def test_orthogonal_biases_dominate_diagonal(self, fast_lexical):
        pair = [self._pair(2, "orthoA"), self._pair(3, "orthoB")]
        tm = cross_dataset_matrix(pair, fast_lexical, jobs=2)
        for i in range(2):
            for j in range(2):
                if i != j:
                    assert tm.acc[i][i] > tm.acc[i][j]

    def test_failed_cell_recorded_not_fatal(self, fast_lexical):
        good = self._pair(4, "good")
        broken = self._pair(5, "broken")
        bad_valid = Split("bad", "valid", frozenset({"ghost"}), "")
        bad = DatasetWithSplits(broken.handle, broken.train, bad_valid)
        tm = cross_dataset_matrix([good, bad], fast_lexical)
        flat = [c for row in tm.acc for c in row]
        assert None in flat and any(c is not None for c in flat)
        assert tm.errors

    def test_no_datasets_rejected(self, fast_lexical):
        with pytest.raises(TrainingError):
            cross_dataset_matrix([], fast_lexical)
