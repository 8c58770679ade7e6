"""Transformer-backend tests using a tiny randomly initialized encoder.

No pretrained weights are downloaded; the encoder contract (ids + mask in,
per-token hidden states out) is what is under test, not model quality.
"""

import dataclasses

import pytest

torch = pytest.importorskip("torch")
transformers = pytest.importorskip("transformers")

from qabias.data import RandomRule, make_split
from qabias.errors import CheckpointError, EncodingError
from qabias.scorer import ScorerConfig, train_scorer
from qabias.synth import SyntheticBiasConfig, generate_synthetic_dataset
from qabias.torch_backend import (
    WordHashTokenizer,
    encode_pair_ids,
    load_torch_scorer,
    save_torch_scorer,
    train_transformer_scorer,
)
from tests.conftest import make_item

HIDDEN = 16


def tiny_encoder(seed=0):
    from transformers import RobertaConfig, RobertaModel

    torch.manual_seed(seed)
    cfg = RobertaConfig(
        vocab_size=120, hidden_size=HIDDEN, num_hidden_layers=1,
        num_attention_heads=2, intermediate_size=32, max_position_embeddings=64,
    )
    return RobertaModel(cfg)


def tiny_config(**over):
    base = ScorerConfig(
        encoder="pretrained_transformer", learning_rate=1e-3,
        questions_per_batch=4, epochs=2, max_seq_len=48, head_layers=2,
    )
    return dataclasses.replace(base, **over)


@pytest.fixture(scope="module")
def small_ds():
    return generate_synthetic_dataset(
        SyntheticBiasConfig(n_items=40, k_annotators=2, marker_bias_rate=1.0, seed=2)
    )


@pytest.fixture(scope="module")
def small_split(small_ds):
    return make_split(small_ds, RandomRule(0.8), seed=0)


class TestEncodePairIds:
    def test_layout(self):
        tok = WordHashTokenizer()
        ids = encode_pair_ids(tiny_config(), tok, "why did it end", "it just did")
        assert ids[0] == tok.cls_id
        assert ids[-1] == tok.sep_id
        assert ids.count(tok.sep_id) == 2

    def test_question_truncated_from_front(self):
        tok = WordHashTokenizer()
        cfg = tiny_config(max_seq_len=10)
        long_q = " ".join(f"w{i}" for i in range(30))
        ids = encode_pair_ids(cfg, tok, long_q, "a b")
        assert len(ids) == 10
        # the kept question tail must match the suffix of the full encoding
        full_q = tok(long_q)
        sep_pos = ids.index(tok.sep_id)
        assert ids[1:sep_pos] == full_q[-(sep_pos - 1):]

    def test_answer_only_mode_drops_question(self):
        tok = WordHashTokenizer()
        cfg = tiny_config(mode="answer_only")
        a = encode_pair_ids(cfg, tok, "why did it end", "the dog barked")
        b = encode_pair_ids(cfg, tok, "who was there", "the dog barked")
        assert a == b

    def test_oversized_answer_rejected(self):
        tok = WordHashTokenizer()
        cfg = tiny_config(max_seq_len=8)
        with pytest.raises(EncodingError, match="max_seq_len"):
            encode_pair_ids(cfg, tok, "q", " ".join(["word"] * 20))

    def test_empty_answer_rejected(self):
        with pytest.raises(EncodingError, match="empty answer"):
            encode_pair_ids(tiny_config(), WordHashTokenizer(), "q", "   ")


class TestWordHashTokenizer:
    def test_ids_stay_in_range(self):
        tok = WordHashTokenizer(vocab_size=120)
        ids = tok("The Quick brown FOX jumps over 13 lazy dogs")
        assert ids == tok("the quick brown fox jumps over 13 lazy dogs")
        assert all(tok.reserved <= i < 120 for i in ids)


class TestTraining:
    def test_smoke_train_and_score(self, small_ds, small_split):
        train, valid = small_split
        scorer = train_transformer_scorer(
            tiny_config(), train, small_ds,
            encoder=tiny_encoder(), tokenizer=WordHashTokenizer(),
            hidden_size=HIDDEN,
        )
        assert len(scorer.training_log) == 2
        sv = scorer.score_item(small_ds.items[0])
        assert sum(sv.probs) == pytest.approx(1.0, abs=1e-5)

    def test_frozen_encoder_checksum_unchanged(self, small_ds, small_split):
        train, _ = small_split
        before = train_transformer_scorer(
            tiny_config(epochs=0), train, small_ds,
            encoder=tiny_encoder(seed=7), tokenizer=WordHashTokenizer(),
            hidden_size=HIDDEN,
        ).encoder_checksum()
        frozen = train_transformer_scorer(
            tiny_config(freeze_encoder=True), train, small_ds,
            encoder=tiny_encoder(seed=7), tokenizer=WordHashTokenizer(),
            hidden_size=HIDDEN,
        )
        assert frozen.encoder_checksum() == before

    def test_unfrozen_encoder_checksum_changes(self, small_ds, small_split):
        train, _ = small_split
        before = tiny_encoder(seed=7)
        ref = train_transformer_scorer(
            tiny_config(epochs=0), train, small_ds,
            encoder=tiny_encoder(seed=7), tokenizer=WordHashTokenizer(),
            hidden_size=HIDDEN,
        ).encoder_checksum()
        tuned = train_transformer_scorer(
            tiny_config(freeze_encoder=False), train, small_ds,
            encoder=before, tokenizer=WordHashTokenizer(),
            hidden_size=HIDDEN,
        )
        assert tuned.encoder_checksum() != ref

    def test_training_is_seed_deterministic(self, small_ds, small_split):
        train, _ = small_split
        probe = small_ds.items[3]

        def run():
            scorer = train_transformer_scorer(
                tiny_config(), train, small_ds,
                encoder=tiny_encoder(seed=5), tokenizer=WordHashTokenizer(),
                hidden_size=HIDDEN,
            )
            return scorer.score_item(probe).probs

        assert run() == run()

    def test_train_scorer_dispatches_via_kwargs(self, small_ds, small_split):
        train, _ = small_split
        scorer = train_scorer(
            tiny_config(epochs=1), train, small_ds,
            encoder=tiny_encoder(), tokenizer=WordHashTokenizer(),
            hidden_size=HIDDEN,
        )
        assert scorer.score_item(small_ds.items[1]).probs


class TestCheckpoint:
    def test_round_trip_scores_identical(self, small_ds, small_split, tmp_path):
        train, _ = small_split
        scorer = train_transformer_scorer(
            tiny_config(), train, small_ds,
            encoder=tiny_encoder(seed=3), tokenizer=WordHashTokenizer(),
            hidden_size=HIDDEN,
        )
        path = tmp_path / "scorer.pt"
        save_torch_scorer(scorer, path)
        # a fresh random shell gets fully overwritten by the checkpoint
        loaded = load_torch_scorer(
            path, tiny_encoder(seed=99), WordHashTokenizer(), HIDDEN
        )
        probe = make_item("p", question="why did it stop", correct_idx=2)
        assert loaded.score_item(probe).probs == scorer.score_item(probe).probs
        assert loaded.training_log == scorer.training_log

    def test_bad_format_rejected(self, tmp_path):
        path = tmp_path / "junk.pt"
        torch.save({"format": "other"}, path)
        with pytest.raises(CheckpointError, match="checkpoint"):
            load_torch_scorer(path, tiny_encoder(), WordHashTokenizer(), HIDDEN)
