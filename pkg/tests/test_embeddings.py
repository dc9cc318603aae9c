import math

import numpy as np
import pytest

from coldstart_al.classifier import init_model, train, TrainConfig
from coldstart_al.embeddings import (
    FeaturizerConfig,
    Featurizer,
    feature_embedding,
    gradient_embedding,
    hidden_embedding,
    load_external_embeddings,
    per_sentence_seed,
    save_embeddings_file,
    surprisal_embedding,
)
from coldstart_al.corpus import Record, TokenSeq, build_vocab, tokenize
from coldstart_al.surprisal_lm import NllVector


def nllvec(values, real_len, sid="s"):
    return NllVector(id=sid, nll=np.asarray(values, dtype=np.float64), real_len=real_len)


class TestSurprisalEmbedding:
    def test_hand_normalization(self):
        # sampled positions {0, 2} of [0.5, 1.0, 2.0, pad]:
        # raw [0.5, 0, 2.0, 0], norm sqrt(4.25) ~ 2.06155
        vec = nllvec([0.5, 1.0, 2.0, 0.0], real_len=3)
        seed = next(
            s for s in range(200)
            if set(np.flatnonzero(surprisal_embedding(vec, 2 / 3, s).sampled_mask)) == {0, 2}
        )
        emb = surprisal_embedding(vec, 2 / 3, seed)
        assert emb.values == pytest.approx([0.24253562, 0.0, 0.97014250, 0.0], abs=1e-7)
        assert np.linalg.norm(emb.values) == pytest.approx(1.0, abs=1e-12)

    def test_all_zero_nll_stays_zero(self):
        emb = surprisal_embedding(nllvec([0.0, 0.0, 0.0], real_len=3), 1.0, 0)
        assert np.all(emb.values == 0.0)
        assert emb.sampled_mask.sum() == 3

    def test_fifteen_percent_of_hundred(self):
        vec = nllvec([1.0] * 100, real_len=100)
        emb = surprisal_embedding(vec, 0.15, 3)
        assert emb.sampled_mask.sum() == 15

    def test_empty_sentence(self):
        emb = surprisal_embedding(nllvec([0.0, 0.0], real_len=0), 0.15, 0)
        assert not emb.sampled_mask.any()
        assert np.all(emb.values == 0.0)

    def test_floor_of_one_sample(self):
        emb = surprisal_embedding(nllvec([2.0, 3.0, 0.0, 0.0], real_len=2), 0.05, 0)
        assert emb.sampled_mask.sum() == 1

    def test_deterministic(self):
        vec = nllvec(np.linspace(0.1, 2.0, 20), real_len=20)
        a = surprisal_embedding(vec, 0.3, 11)
        b = surprisal_embedding(vec, 0.3, 11)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.sampled_mask, b.sampled_mask)

    def test_sampled_entries_bit_equal_to_provider(self):
        rng = np.random.default_rng(0)
        for trial in range(200):
            length = int(rng.integers(1, 30))
            raw = np.zeros(32)
            raw[:length] = rng.exponential(1.0, size=length)
            vec = nllvec(raw, real_len=length, sid=f"t{trial}")
            emb = surprisal_embedding(vec, 0.15, trial)
            for i in range(32):
                if emb.sampled_mask[i]:
                    assert emb.raw_values[i] == raw[i]  # bit-equal
                else:
                    assert emb.raw_values[i] == 0.0
                    assert emb.values[i] == 0.0
            n = np.linalg.norm(emb.values)
            assert n == 0.0 or abs(n - 1.0) < 1e-6

    def test_never_samples_padding(self):
        vec = nllvec([1.0, 1.0, 0.0, 0.0, 0.0], real_len=2)
        for seed in range(50):
            emb = surprisal_embedding(vec, 1.0, seed)
            assert not emb.sampled_mask[2:].any()

    def test_invalid_fraction_rejected(self):
        with pytest.raises(ValueError):
            surprisal_embedding(nllvec([1.0], 1), 0.0, 0)

    def test_per_sentence_seed_stable(self):
        assert per_sentence_seed(7, "abc") == per_sentence_seed(7, "abc")
        assert per_sentence_seed(7, "abc") != per_sentence_seed(8, "abc")
        # frozen value: catches accidental changes to the derivation
        assert per_sentence_seed(0, "r0") == 1356265112506922421


class TestGradientEmbedding:
    def test_hand_two_class(self):
        g = gradient_embedding(np.array([0.7, 0.3]), np.array([1.0, 2.0]))
        assert g.values == pytest.approx([-0.3, -0.6, 0.3, 0.6])

    def test_one_hot_confidence_gives_zero(self):
        g = gradient_embedding(np.array([0.0, 1.0, 0.0]), np.array([3.0, -1.0]))
        assert np.all(g.values == 0.0)

    def test_exactly_one_negative_block(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            conf = rng.dirichlet(np.ones(4))
            hidden = np.abs(rng.normal(size=5)) + 0.1
            g = gradient_embedding(conf, hidden).values.reshape(4, 5)
            negative_blocks = int(np.sum(g.sum(axis=1) < 0))
            assert negative_blocks == 1

    def test_matches_finite_difference_of_last_layer_loss(self):
        # oracle: central differences of L(V) = -log softmax(V @ h)[yhat]
        rng = np.random.default_rng(3)
        eps = 1e-6
        for _ in range(25):
            c, d = int(rng.integers(2, 6)), int(rng.integers(2, 8))
            v = rng.normal(size=(c, d))
            h = rng.normal(size=d)

            def loss(vmat, target):
                logits = vmat @ h
                logits = logits - logits.max()
                return -(logits[target] - math.log(np.exp(logits).sum()))

            logits = v @ h
            conf = np.exp(logits - logits.max())
            conf = conf / conf.sum()
            yhat = int(np.argmax(conf))
            g = gradient_embedding(conf, h).values.reshape(c, d)
            num = np.zeros_like(v)
            for i in range(c):
                for j in range(d):
                    vp, vm = v.copy(), v.copy()
                    vp[i, j] += eps
                    vm[i, j] -= eps
                    num[i, j] = (loss(vp, yhat) - loss(vm, yhat)) / (2 * eps)
            rel = np.abs(g - num) / np.maximum(np.abs(num), 1e-8)
            assert rel.max() < 1e-4

    def test_non_simplex_rejected(self):
        with pytest.raises(ValueError, match="simplex"):
            gradient_embedding(np.array([0.9, 0.3]), np.array([1.0]))


class TestFeatureEmbedding:
    def test_empty_sentence_zero_unnormalized(self, tiny_vocab):
        seq = tokenize("", tiny_vocab, 8, seq_id="e")
        fv = feature_embedding(seq, FeaturizerConfig(dim=64))
        assert np.all(fv.values == 0.0)
        assert fv.normalized is False

    def test_identical_sentences_identical_vectors(self, tiny_vocab):
        a = feature_embedding(tokenize("the cat sat", tiny_vocab, 8, seq_id="a"))
        b = feature_embedding(tokenize("the cat sat", tiny_vocab, 8, seq_id="b"))
        assert np.array_equal(a.values, b.values)
        assert a.normalized and np.linalg.norm(a.values) == pytest.approx(1.0, abs=1e-9)

    def test_bigram_bucket_collision_rate(self):
        # pairs like ("a b", "a c") differ in the bigram bucket unless hashed together
        from coldstart_al.util import stable_bucket

        rng = np.random.default_rng(9)
        dim = 512
        collisions = 0
        for _ in range(1000):
            t1, t2, t3 = (int(x) for x in rng.integers(3, 10_000, size=3))
            if t2 == t3:
                continue
            if stable_bucket("b", t1, t2, dim=dim) == stable_bucket("b", t1, t3, dim=dim):
                collisions += 1
        assert collisions / 1000 < 0.05


class TestHiddenEmbedding:
    def test_zero_input_zero_activation(self):
        model = init_model(4, 6, 2, seed=0)  # biases start at zero
        out = hidden_embedding(model, np.zeros(4))
        assert np.all(out == 0.0)

    def test_shape_is_hidden_dim(self):
        model = init_model(4, 32, 4, seed=0)
        out = hidden_embedding(model, np.ones(4))
        assert out.shape == (32,)

    def test_training_changes_hidden_space(self):
        model = init_model(4, 6, 2, seed=0)
        x = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
        y = np.array([0, 1])
        trained = train(model, x, y, TrainConfig(epochs=5, seed=0))
        before = hidden_embedding(model, x[0])
        after = hidden_embedding(trained, x[0])
        assert not np.allclose(before, after)

    def test_dimension_mismatch_rejected(self):
        model = init_model(4, 6, 2, seed=0)
        with pytest.raises(ValueError, match="dimension"):
            hidden_embedding(model, np.zeros(5))


class TestExternalVectors:
    def test_round_trip(self, tmp_path):
        vectors = {"a": np.array([0.25, -1.5]), "b": np.array([3.0, 4.0])}
        path = str(tmp_path / "emb.jsonl")
        save_embeddings_file(path, vectors)
        loaded = load_external_embeddings(path)
        assert set(loaded) == {"a", "b"}
        assert np.array_equal(loaded["a"], vectors["a"])

    def test_mixed_dimensions_rejected(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text('{"id": "a", "vec": [1.0, 2.0]}\n{"id": "b", "vec": [1.0]}\n')
        from coldstart_al.util import DataFormatError

        with pytest.raises(DataFormatError, match="dimension"):
            load_external_embeddings(str(path))

    def test_featurizer_external_lookup(self, tiny_seqs):
        vectors = {sid: np.array([1.0, 0.0]) for sid in tiny_seqs}
        f = Featurizer(external=vectors)
        assert f.dim == 2
        fv = f(next(iter(tiny_seqs.values())))
        assert np.array_equal(fv.values, [1.0, 0.0])
