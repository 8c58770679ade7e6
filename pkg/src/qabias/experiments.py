"""Evaluation, ablation battery, and the cross-dataset transfer matrix."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

from qabias.data import DatasetHandle, Split
from qabias.errors import TrainingError
from qabias.scorer import ScorerConfig, ScoreVector, train_scorer

RANDOM_GUESS_ACC = 20.0  # 5-choose-1 chance


@dataclass(frozen=True)
class PerItemResult:
    item_id: str
    predicted_idx: int
    correct: bool
    scores: ScoreVector
    tie: bool


@dataclass(frozen=True)
class EvalResult:
    accuracy: float  # percentage
    n_items: int
    per_item: tuple[PerItemResult, ...]
    tie_count: int

    def recount_accuracy(self) -> float:
        """Brute-force recount from per_item; must equal .accuracy."""
        return 100.0 * sum(1 for r in self.per_item if r.correct) / len(self.per_item)


def argmax_lowest(probs: Sequence[float]) -> tuple[int, bool]:
    """Argmax with lowest-index tie-break; also reports whether a tie occurred."""
    best = max(probs)
    winners = [i for i, p in enumerate(probs) if p == best]
    return winners[0], len(winners) > 1


def evaluate_split(scorer, valid: Split, ds: DatasetHandle) -> EvalResult:
    if not valid.item_ids:
        raise TrainingError("empty eval split")
    per_item = []
    n_correct = 0
    ties = 0
    for item_id in sorted(valid.item_ids):
        item = ds.get(item_id)
        sv = scorer.score_item(item)
        pred, tie = argmax_lowest(sv.probs)
        ok = pred == item.correct_idx
        n_correct += ok
        ties += tie
        per_item.append(PerItemResult(item_id, pred, ok, sv, tie))
    return EvalResult(
        accuracy=100.0 * n_correct / len(per_item),
        n_items=len(per_item),
        per_item=tuple(per_item),
        tie_count=ties,
    )


ABLATION_MODES = ("qa", "answer_only", "qa_frozen")


def ablation_suite(
    ds: DatasetHandle,
    base_config: ScorerConfig,
    train: Split,
    valid: Split,
) -> dict[str, EvalResult]:
    """Train/eval the three context-free configurations on identical data and seeds.

    Returns results keyed qa / answer_only / qa_frozen; the 20.0 random-guess
    reference lives in RANDOM_GUESS_ACC.
    """
    configs = {
        "qa": replace(base_config, mode="qa", freeze_encoder=False),
        "answer_only": replace(base_config, mode="answer_only", freeze_encoder=False),
        "qa_frozen": replace(base_config, mode="qa", freeze_encoder=True),
    }
    results: dict[str, EvalResult] = {}
    for name, config in configs.items():
        try:
            scorer = train_scorer(config, train, ds)
            results[name] = evaluate_split(scorer, valid, ds)
        except Exception as e:
            raise TrainingError(f"ablation mode {name!r} failed: {e}") from e
    return results


class DatasetWithSplits(NamedTuple):
    handle: DatasetHandle
    train: Split
    valid: Split


@dataclass(frozen=True)
class TransferMatrix:
    """acc[i][j] = accuracy of the scorer trained on dataset i, evaluated on dataset j.

    Failed cells hold None in acc with the error message in errors.
    """

    train_ids: tuple[str, ...]
    eval_ids: tuple[str, ...]
    acc: tuple[tuple[Optional[float], ...], ...]
    errors: dict[tuple[str, str], str]


def cross_dataset_matrix(
    datasets: Sequence[DatasetWithSplits],
    config: ScorerConfig,
    jobs: int = 1,
) -> TransferMatrix:
    """Train one scorer per dataset, evaluate every scorer on every dataset.

    A failing cell is recorded in place; remaining cells still run.
    Independent cells may run concurrently (jobs > 1); the merge is keyed
    by (train_id, eval_id) so results are deterministic either way.
    """
    if not datasets:
        raise TrainingError("cross_dataset_matrix needs at least one dataset")
    ids = tuple(d.handle.dataset_id for d in datasets)
    errors: dict[tuple[str, str], str] = {}
    scorers: dict[str, object] = {}

    def _train(d: DatasetWithSplits):
        return d.handle.dataset_id, train_scorer(config, d.train, d.handle)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [pool.submit(_train, d) for d in datasets]
        for d, fut in zip(datasets, futures):
            try:
                ds_id, scorer = fut.result()
                scorers[ds_id] = scorer
            except Exception as e:
                for eval_id in ids:
                    errors[(d.handle.dataset_id, eval_id)] = f"train failed: {e}"

    def _cell(train_id: str, d_eval: DatasetWithSplits):
        return evaluate_split(scorers[train_id], d_eval.valid, d_eval.handle)

    cells: dict[tuple[str, str], Optional[float]] = {}
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {}
        for train_id in ids:
            for d_eval in datasets:
                key = (train_id, d_eval.handle.dataset_id)
                if train_id in scorers:
                    futures[key] = pool.submit(_cell, train_id, d_eval)
        for key, fut in futures.items():
            try:
                cells[key] = fut.result().accuracy
            except Exception as e:
                cells[key] = None
                errors[key] = str(e)

    acc = tuple(
        tuple(cells.get((ti, tj)) for tj in ids) for ti in ids
    )
    return TransferMatrix(train_ids=ids, eval_ids=ids, acc=acc, errors=errors)
