"""Transformer scorer: pretrained encoder + MLP head fine-tuned with torch.

The encoder is pluggable behind an embedding-extraction contract: any
torch module mapping (input_ids, attention_mask) to per-token hidden
states works, so tests can substitute a tiny randomly initialized encoder
for the full pretrained checkpoint. torch/transformers are imported
lazily; installing the package without them keeps every other module
usable.
"""

from __future__ import annotations

import hashlib
from typing import Optional, Sequence

from qabias.data import DatasetHandle, QAItem, Split
from qabias.errors import EncodingError, TrainingError
from qabias.scorer import ScorerConfig, ScoreVector


def _require_torch():
    try:
        import torch  # noqa: F401

        return torch
    except ImportError as e:
        raise TrainingError(
            "the transformer scorer needs the optional [transformer] extra "
            "(pip install qabias[transformer])"
        ) from e


class WordHashTokenizer:
    """Whitespace tokenizer hashing words into a fixed id range.

    Stand-in for a subword tokenizer when testing with tiny encoders;
    implements the same pair-encoding contract (question truncated from
    the front, answer kept whole).
    """

    def __init__(self, vocab_size: int = 120, cls_id: int = 0, sep_id: int = 1,
                 pad_id: int = 2, reserved: int = 4):
        self.vocab_size = vocab_size
        self.cls_id, self.sep_id, self.pad_id = cls_id, sep_id, pad_id
        self.reserved = reserved

    def __call__(self, text: str) -> list[int]:
        span = self.vocab_size - self.reserved
        return [
            self.reserved + int(hashlib.md5(w.encode()).hexdigest(), 16) % span
            for w in text.lower().split()
        ]


class HFSubwordTokenizer:
    """Adapter exposing a HuggingFace tokenizer under the id-list contract."""

    def __init__(self, tok):
        self.tok = tok
        self.cls_id = tok.cls_token_id
        self.sep_id = tok.sep_token_id
        self.pad_id = tok.pad_token_id

    def __call__(self, text: str) -> list[int]:
        return self.tok.encode(text, add_special_tokens=False)


def encode_pair_ids(config: ScorerConfig, tokenizer, question: str, answer: str) -> list[int]:
    """[cls] question-tail [sep] answer [sep], capped at max_seq_len."""
    a_ids = tokenizer(answer)
    if not a_ids:
        raise EncodingError("empty answer")
    q = "" if config.mode == "answer_only" else question
    q_ids = tokenizer(q)
    budget = config.max_seq_len - len(a_ids) - 3  # cls + two seps
    if budget < 0:
        raise EncodingError(
            f"answer alone ({len(a_ids)} tokens) exceeds max_seq_len {config.max_seq_len}"
        )
    if len(q_ids) > budget:
        q_ids = q_ids[len(q_ids) - budget:]
    return [tokenizer.cls_id] + q_ids + [tokenizer.sep_id] + a_ids + [tokenizer.sep_id]


def _load_pretrained(config: ScorerConfig):
    from transformers import AutoModel, AutoTokenizer

    name = config.encoder_name or "roberta-large-mnli"
    model = AutoModel.from_pretrained(name)
    tokenizer = HFSubwordTokenizer(AutoTokenizer.from_pretrained(name, use_fast=True))
    return model, tokenizer


class TransformerScorer:
    """Trained transformer scorer (encoder + head); immutable after training."""

    def __init__(self, config: ScorerConfig, model, tokenizer, training_log=None):
        self.config = config
        self.model = model  # _PairScoringModel
        self.tokenizer = tokenizer
        self.training_log: list[dict] = training_log or []

    def score_item(self, item: QAItem) -> ScoreVector:
        torch = _require_torch()
        item.validate()
        try:
            batches = [
                encode_pair_ids(self.config, self.tokenizer, item.question, a)
                for a in item.answers
            ]
        except EncodingError as e:
            raise EncodingError(f"item {item.item_id!r}: {e}") from None
        self.model.eval()
        with torch.no_grad():
            scores = self.model.score_pairs(batches, self.tokenizer.pad_id)
            probs = torch.softmax(scores, dim=-1)
        return ScoreVector(tuple(float(p) for p in probs))

    def encoder_checksum(self) -> str:
        h = hashlib.sha256()
        for name, tensor in sorted(self.model.encoder.state_dict().items()):
            h.update(name.encode())
            h.update(tensor.detach().cpu().numpy().tobytes())
        return h.hexdigest()

    def to_payload(self) -> dict:
        raise NotImplementedError(
            "transformer checkpoints are saved with torch.save via save_torch_scorer"
        )

    @classmethod
    def from_payload(cls, payload: dict) -> "TransformerScorer":
        raise NotImplementedError(
            "transformer checkpoints are loaded with load_torch_scorer"
        )


def _build_model(config: ScorerConfig, encoder, hidden_size: int):
    torch = _require_torch()
    from torch import nn

    class _PairScoringModel(nn.Module):
        def __init__(self):
            super().__init__()
            self.encoder = encoder
            width = config.hidden_width or hidden_size
            layers: list[nn.Module] = []
            d_in = hidden_size
            for _ in range(config.head_layers - 1):
                layers += [nn.Linear(d_in, width), nn.Tanh()]
                d_in = width
            layers.append(nn.Linear(d_in, 1))
            self.head = nn.Sequential(*layers)

        def score_pairs(self, id_lists: Sequence[list[int]], pad_id: int):
            max_len = max(len(ids) for ids in id_lists)
            input_ids = torch.full((len(id_lists), max_len), pad_id, dtype=torch.long)
            mask = torch.zeros((len(id_lists), max_len), dtype=torch.long)
            for i, ids in enumerate(id_lists):
                input_ids[i, : len(ids)] = torch.tensor(ids)
                mask[i, : len(ids)] = 1
            hidden = self.encoder(input_ids=input_ids, attention_mask=mask)
            if hasattr(hidden, "last_hidden_state"):
                hidden = hidden.last_hidden_state
            return self.head(hidden[:, 0, :]).reshape(-1)

    return _PairScoringModel()


def train_transformer_scorer(
    config: ScorerConfig,
    train: Split,
    ds: DatasetHandle,
    encoder=None,
    tokenizer=None,
    hidden_size: Optional[int] = None,
) -> TransformerScorer:
    """Fine-tune the pair scorer with AdamW and cross-entropy.

    Batches hold config.questions_per_batch questions with all five
    answers each; the final-epoch state is returned (last checkpoint, no
    model selection). freeze_encoder=True detaches the encoder from the
    optimizer entirely.
    """
    torch = _require_torch()

    if encoder is None or tokenizer is None:
        encoder, tokenizer = _load_pretrained(config)
        hidden_size = encoder.config.hidden_size
    if hidden_size is None:
        hidden_size = encoder.config.hidden_size

    torch.manual_seed(config.seed)
    model = _build_model(config, encoder, hidden_size)
    if config.freeze_encoder:
        for p in model.encoder.parameters():
            p.requires_grad_(False)

    items = [ds.get(iid) for iid in sorted(train.item_ids)]
    encoded = [
        [encode_pair_ids(config, tokenizer, it.question, a) for a in it.answers]
        for it in items
    ]
    targets = torch.tensor([it.correct_idx for it in items])

    trainable = [p for p in model.parameters() if p.requires_grad]
    opt = torch.optim.AdamW(trainable, lr=config.learning_rate)
    loss_fn = torch.nn.CrossEntropyLoss()
    gen = torch.Generator().manual_seed(config.seed)

    scorer = TransformerScorer(config, model, tokenizer)
    n = len(items)
    for epoch in range(config.epochs):
        model.train()
        order = torch.randperm(n, generator=gen)
        epoch_loss, epoch_correct = 0.0, 0
        for start in range(0, n, config.questions_per_batch):
            idx = order[start : start + config.questions_per_batch]
            pair_lists = [pairs for i in idx for pairs in encoded[i]]
            scores = model.score_pairs(pair_lists, tokenizer.pad_id).reshape(len(idx), 5)
            loss = loss_fn(scores, targets[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach()) * len(idx)
            epoch_correct += int((scores.argmax(dim=1) == targets[idx]).sum())
        scorer.training_log.append(
            {
                "epoch": epoch,
                "loss": epoch_loss / n,
                "train_acc": epoch_correct / n,
            }
        )
    model.eval()
    return scorer


def save_torch_scorer(scorer: TransformerScorer, path) -> None:
    torch = _require_torch()
    from dataclasses import asdict

    torch.save(
        {
            "format": "qabias-torch-scorer",
            "version": 1,
            "config": asdict(scorer.config),
            "state_dict": scorer.model.state_dict(),
            "training_log": scorer.training_log,
        },
        path,
    )


def load_torch_scorer(path, encoder, tokenizer, hidden_size: int) -> TransformerScorer:
    """Restore head + encoder weights into a caller-provided encoder shell."""
    torch = _require_torch()
    from qabias.errors import CheckpointError

    doc = torch.load(path, weights_only=False)
    if doc.get("format") != "qabias-torch-scorer" or doc.get("version") != 1:
        raise CheckpointError(f"{path}: not a v1 transformer checkpoint")
    config = ScorerConfig(**doc["config"])
    model = _build_model(config, encoder, hidden_size)
    model.load_state_dict(doc["state_dict"])
    model.eval()
    return TransformerScorer(config, model, tokenizer, doc.get("training_log"))
