"""Context-free scorers for A5 questions.

One scorer scores each of a question's five answers independently
(question and answer encoded as a pair, a head reduces the encoding to a
scalar), then softmaxes the five scalars into a probability vector and is
trained with cross-entropy against the correct index.

Two encoders are provided: a fast deterministic lexical bag-of-tokens
encoder trained with a pure-numpy head (used for property tests and the
gate service's cold start), and a pretrained transformer fine-tuned via
torch (see qabias.torch_backend).
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from qabias.data import DatasetHandle, QAItem, Split
from qabias.errors import CheckpointError, EncodingError, TrainingError, ValidationError

CHECKPOINT_FORMAT = "qabias-scorer"
CHECKPOINT_VERSION = 1

SEP = "[sep]"

ENCODERS = ("lexical", "pretrained_transformer")
MODES = ("qa", "answer_only")


@dataclass(frozen=True)
class ScorerConfig:
    """Scorer hyperparameters.

    Defaults follow the transformer fine-tuning recipe (lr 1e-6, 3
    questions per batch, 16 epochs, last checkpoint, no hyperparameter
    search). Use ScorerConfig.lexical() for the numpy surrogate.
    """

    encoder: str = "pretrained_transformer"
    mode: str = "qa"
    freeze_encoder: bool = False
    max_seq_len: int = 512
    learning_rate: float = 1e-6
    questions_per_batch: int = 3
    epochs: int = 16
    seed: int = 0
    head_layers: int = 4
    checkpoint_policy: str = "last"
    # Identifier of the pretrained encoder checkpoint (transformer only).
    encoder_name: Optional[str] = "roberta-large-mnli"
    # Head hidden width; None = encoder embedding width.
    hidden_width: Optional[int] = None

    @classmethod
    def lexical(cls, **overrides) -> "ScorerConfig":
        defaults = dict(
            encoder="lexical",
            learning_rate=0.05,
            questions_per_batch=8,
            epochs=12,
            head_layers=1,
            encoder_name=None,
        )
        defaults.update(overrides)
        return cls(**defaults)

    def validate(self) -> None:
        if self.encoder not in ENCODERS:
            raise ValidationError(f"unknown encoder {self.encoder!r}")
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")
        if self.head_layers < 1:
            raise ValidationError("head_layers must be >= 1")
        if self.questions_per_batch < 1:
            raise ValidationError("questions_per_batch must be >= 1")
        if self.max_seq_len < 2:
            raise ValidationError("max_seq_len must be >= 2")
        if self.checkpoint_policy != "last":
            raise ValidationError("only checkpoint_policy='last' is supported")


@dataclass(frozen=True)
class ScoreVector:
    """Softmax probabilities over the five candidate answers."""

    probs: tuple[float, float, float, float, float]

    def __post_init__(self):
        if len(self.probs) != 5:
            raise ValidationError(f"expected 5 probabilities, got {len(self.probs)}")
        if any(p < 0.0 or p > 1.0 for p in self.probs):
            raise ValidationError(f"probabilities outside [0, 1]: {self.probs}")
        if abs(sum(self.probs) - 1.0) > 1e-6:
            raise ValidationError(f"probabilities sum to {sum(self.probs)}, not 1")


def tokenize(text: str) -> list[str]:
    """Scorer-side normalization: lowercase + whitespace split."""
    return text.lower().split()


def encode_pair(config: ScorerConfig, question: str, answer: str) -> list[str]:
    """Encode one question/answer pair as a single token sequence.

    Layout is question tokens, a separator, then answer tokens. In
    answer_only mode the question is dropped entirely. If the sequence
    exceeds max_seq_len the question is truncated from its front; the
    answer is always kept whole.
    """
    a_tokens = tokenize(answer)
    if not a_tokens:
        raise EncodingError("empty answer")
    q_tokens = [] if config.mode == "answer_only" else tokenize(question)
    budget = config.max_seq_len - len(a_tokens) - 1
    if budget < 0:
        raise EncodingError(
            f"answer alone ({len(a_tokens)} tokens) exceeds max_seq_len "
            f"{config.max_seq_len}"
        )
    if len(q_tokens) > budget:
        q_tokens = q_tokens[len(q_tokens) - budget:]
    return q_tokens + [SEP] + a_tokens


def _exact_softmax(scores: np.ndarray) -> tuple[float, ...]:
    """Softmax of one score row using a correctly rounded (fsum) denominator,
    so permuting the inputs permutes the outputs bit-exactly."""
    import math

    m = float(scores.max())
    e = [math.exp(float(s) - m) for s in scores]
    denom = math.fsum(e)
    return tuple(v / denom for v in e)


def softmax5(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax; max-subtraction keeps it exactly permutation-equivariant."""
    s = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# MLP head (numpy)
# ---------------------------------------------------------------------------


def init_head(
    in_dim: int, n_layers: int, hidden: Optional[int], seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """n_layers linear layers (tanh between) down to a scalar score."""
    h = hidden if hidden is not None else in_dim
    rng = np.random.RandomState(seed)
    sizes = [in_dim] + [h] * (n_layers - 1) + [1]
    params = []
    for d_in, d_out in zip(sizes[:-1], sizes[1:]):
        scale = 1.0 / np.sqrt(max(d_in, 1))
        params.append((rng.randn(d_in, d_out) * scale, np.zeros(d_out)))
    return params


def head_forward(params: Sequence[tuple[np.ndarray, np.ndarray]], X: np.ndarray):
    """Scores for X of shape (n, d); returns (scores (n,), activation cache)."""
    h = X
    cache = [h]
    for W, b in params[:-1]:
        h = np.tanh(h @ W + b)
        cache.append(h)
    W, b = params[-1]
    scores = (h @ W + b).reshape(-1)
    return scores, cache


def head_loss_and_grads(
    params: Sequence[tuple[np.ndarray, np.ndarray]],
    X: np.ndarray,
    correct: np.ndarray,
):
    """Mean cross-entropy over a batch and its analytic head gradients.

    X has shape (m, 5, d): m questions, five encoded answers each.
    """
    m, five, d = X.shape
    flat = X.reshape(m * five, d)
    scores, cache = head_forward(params, flat)
    probs = softmax5(scores.reshape(m, five))
    eps = 1e-12
    loss = -np.log(probs[np.arange(m), correct] + eps).mean()

    dscores = probs.copy()
    dscores[np.arange(m), correct] -= 1.0
    dscores = (dscores / m).reshape(m * five, 1)

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params)  # type: ignore
    delta = dscores
    for li in range(len(params) - 1, -1, -1):
        W, b = params[li]
        a_in = cache[li]
        grads[li] = (a_in.T @ delta, delta.sum(axis=0))
        if li > 0:
            delta = (delta @ W.T) * (1.0 - cache[li] ** 2)
    return loss, probs, grads


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        self.v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]

    def step(self, params, grads):
        self.t += 1
        out = []
        for i, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
            mW, mb = self.m[i]
            vW, vb = self.v[i]
            mW = self.b1 * mW + (1 - self.b1) * gW
            mb = self.b1 * mb + (1 - self.b1) * gb
            vW = self.b2 * vW + (1 - self.b2) * gW**2
            vb = self.b2 * vb + (1 - self.b2) * gb**2
            self.m[i], self.v[i] = (mW, mb), (vW, vb)
            c1 = 1 - self.b1**self.t
            c2 = 1 - self.b2**self.t
            W = W - self.lr * (mW / c1) / (np.sqrt(vW / c2) + self.eps)
            b = b - self.lr * (mb / c1) / (np.sqrt(vb / c2) + self.eps)
            out.append((W, b))
        return out


# ---------------------------------------------------------------------------
# Lexical scorer
# ---------------------------------------------------------------------------


class LexicalScorer:
    """Bag-of-tokens linear scorer (optionally with an MLP head).

    Features per encoded pair: answer unigram counts plus, in qa mode,
    conjunctions of the question's first token with each answer unigram
    (plain question unigrams are identical across the five answers and
    cancel in the softmax, so only the conjunctions carry question
    signal). Deterministic, CPU-second training scale.
    """

    def __init__(self, config: ScorerConfig, vocab: dict[str, int], params, training_log=None):
        self.config = config
        self.vocab = vocab
        self.params = params
        self.training_log: list[dict] = training_log or []

    # -- features ----------------------------------------------------------

    @staticmethod
    def pair_features(tokens: Sequence[str]) -> dict[str, int]:
        sep = tokens.index(SEP)
        q_tokens, a_tokens = tokens[:sep], tokens[sep + 1:]
        feats: dict[str, int] = {}
        for t in a_tokens:
            feats[t] = feats.get(t, 0) + 1
        if q_tokens:
            head = q_tokens[0]
            for t in set(a_tokens):
                feats[f"{head}|{t}"] = 1
        return feats

    def _vector(self, question: str, answer: str) -> np.ndarray:
        x = np.zeros(len(self.vocab))
        tokens = encode_pair(self.config, question, answer)
        for name, count in self.pair_features(tokens).items():
            idx = self.vocab.get(name)
            if idx is not None:
                x[idx] = count
        return x

    def item_matrix(self, item: QAItem) -> np.ndarray:
        try:
            return np.stack([self._vector(item.question, a) for a in item.answers])
        except EncodingError as e:
            raise EncodingError(f"item {item.item_id!r}: {e}") from None

    # -- scoring -----------------------------------------------------------

    def score_item(self, item: QAItem) -> ScoreVector:
        item.validate()
        X = self.item_matrix(item)
        scores, _ = head_forward(self.params, X)
        return ScoreVector(_exact_softmax(scores))

    def explain(self, item: QAItem, answer_idx: int, top_n: int = 5):
        """Top contributing feature names for one answer (linear head only)."""
        if len(self.params) != 1:
            return None
        W, _ = self.params[0]
        x = self._vector(item.question, item.answers[answer_idx])
        contrib = x * W[:, 0]
        order = np.argsort(-np.abs(contrib))
        names = {idx: name for name, idx in self.vocab.items()}
        out = []
        for idx in order[:top_n]:
            if contrib[idx] != 0.0:
                out.append((names[idx], float(contrib[idx])))
        return out

    def encoder_checksum(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.vocab):
            h.update(name.encode("utf-8"))
            h.update(str(self.vocab[name]).encode())
        return h.hexdigest()

    # -- persistence -------------------------------------------------------

    def to_payload(self) -> dict:
        return {
            "encoder": "lexical",
            "config": asdict(self.config),
            "vocab": sorted(self.vocab, key=self.vocab.get),
            "params": [
                {"W": _b64(W), "W_shape": list(W.shape), "b": _b64(b)}
                for W, b in self.params
            ],
            "training_log": self.training_log,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "LexicalScorer":
        config = ScorerConfig(**payload["config"])
        vocab = {name: i for i, name in enumerate(payload["vocab"])}
        params = [
            (_unb64(p["W"]).reshape(p["W_shape"]), _unb64(p["b"]))
            for p in payload["params"]
        ]
        return cls(config, vocab, params, payload.get("training_log"))


def build_lexical_scorer(
    config: ScorerConfig, items: Sequence[QAItem]
) -> LexicalScorer:
    """Freshly initialized scorer with a vocabulary fitted on the given items."""
    vocab: dict[str, int] = {}
    for item in items:
        for answer in item.answers:
            tokens = encode_pair(config, item.question, answer)
            for name in LexicalScorer.pair_features(tokens):
                if name not in vocab:
                    vocab[name] = len(vocab)
    params = init_head(len(vocab), config.head_layers, config.hidden_width, config.seed)
    return LexicalScorer(config, vocab, params)


def _train_lexical(
    config: ScorerConfig, train: Split, ds: DatasetHandle
) -> LexicalScorer:
    items = [ds.get(iid) for iid in sorted(train.item_ids)]
    scorer = build_lexical_scorer(config, items)
    X = np.stack([scorer.item_matrix(it) for it in items])  # (n, 5, d)
    y = np.array([it.correct_idx for it in items])
    n = len(items)

    rng = np.random.RandomState(config.seed)
    opt = _Adam(scorer.params, config.learning_rate)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.questions_per_batch):
            idx = order[start : start + config.questions_per_batch]
            _, _, grads = head_loss_and_grads(scorer.params, X[idx], y[idx])
            scorer.params = opt.step(scorer.params, grads)
        loss, probs, _ = head_loss_and_grads(scorer.params, X, y)
        acc = float((probs.argmax(axis=1) == y).mean())
        scorer.training_log.append(
            {"epoch": epoch, "loss": float(loss), "train_acc": acc}
        )
    return scorer


# ---------------------------------------------------------------------------
# Training entry point and persistence
# ---------------------------------------------------------------------------


def train_scorer(config: ScorerConfig, train: Split, ds: DatasetHandle, **backend_kwargs):
    """Train a scorer on a split; returns the final-epoch state (no early stopping)."""
    config.validate()
    if not train.item_ids:
        raise TrainingError("empty train split")
    missing = [iid for iid in train.item_ids if iid not in ds]
    if missing:
        raise TrainingError(
            f"split ids not in dataset {ds.dataset_id!r}: {sorted(missing)[:5]}"
        )
    if config.encoder == "lexical":
        if backend_kwargs:
            raise TrainingError("lexical scorer takes no backend kwargs")
        return _train_lexical(config, train, ds)
    from qabias import torch_backend

    return torch_backend.train_transformer_scorer(config, train, ds, **backend_kwargs)


def save_scorer(scorer, path: Union[str, Path]) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        **scorer.to_payload(),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_scorer(path: Union[str, Path]):
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"{path}: no such checkpoint")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt checkpoint: {e}") from None
    if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: version mismatch: expected {CHECKPOINT_FORMAT}/"
            f"{CHECKPOINT_VERSION}, got {doc.get('format')}/{doc.get('version')}"
        )
    if doc.get("encoder") == "lexical":
        return LexicalScorer.from_payload(doc)
    if doc.get("encoder") == "pretrained_transformer":
        from qabias import torch_backend

        return torch_backend.TransformerScorer.from_payload(doc)
    raise CheckpointError(f"{path}: unknown encoder {doc.get('encoder')!r}")


def _b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype=np.float64).tobytes()).decode()


def _unb64(blob: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(blob), dtype=np.float64).copy()
