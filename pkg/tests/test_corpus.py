import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coldstart_al.corpus import (
    Pool,
    Record,
    build_vocab,
    load_dataset,
    split_pool,
    split_text,
    tokenize,
)
from coldstart_al.util import DataFormatError

from jsonl_util import write_jsonl_file


class TestLoadDataset:
    def test_first_label_maps_to_zero(self, jsonl_path):
        ds = load_dataset(jsonl_path, "jsonl")
        assert ds.records[0].id == "a1"
        assert ds.records[0].label == 0
        assert ds.records[1].label == 1
        assert ds.label_names == ["pos", "neg"]

    def test_duplicate_id_rejected(self, tmp_path):
        path = write_jsonl_file(
            tmp_path / "dup.jsonl",
            [
                {"id": "a1", "text": "x", "label": "p"},
                {"id": "a1", "text": "y", "label": "n"},
            ],
        )
        with pytest.raises(DataFormatError, match="duplicate id"):
            load_dataset(str(path), "jsonl")

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a1", "text": "ok", "label": "p"}\nnot json\n')
        with pytest.raises(DataFormatError, match="line 2"):
            load_dataset(str(path), "jsonl")

    def test_single_label_is_degenerate(self, tmp_path):
        path = write_jsonl_file(
            tmp_path / "one.jsonl",
            [{"id": f"a{i}", "text": "x", "label": "only"} for i in range(3)],
        )
        with pytest.raises(DataFormatError, match="one distinct label"):
            load_dataset(str(path), "jsonl")

    def test_record_count_matches_line_count_oracle(self, tmp_path):
        # 4-class news-style file with 2000 records
        rows = [
            {"id": f"n{i}", "text": f"headline number {i} about topic", "label": f"topic{i % 4}"}
            for i in range(2000)
        ]
        path = write_jsonl_file(tmp_path / "news.jsonl", rows)
        with open(path) as fh:
            n_lines = sum(1 for line in fh if line.strip())
        ds = load_dataset(str(path), "jsonl")
        assert len(ds.records) == n_lines == 2000
        assert ds.num_classes == 4

    def test_tsv_format_autoassigns_line_ids(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("pos\tgood film\nneg\tawful film\n")
        ds = load_dataset(str(path), "tsv")
        assert [r.id for r in ds.records] == ["0", "1"]
        assert ds.records[0].label == 0

    def test_tsv_missing_tab_names_line(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("pos\tgood film\nno tab here\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_dataset(str(path), "tsv")


class TestTokenize:
    def test_padding_case(self, tiny_vocab):
        seq = tokenize("Good movie.", tiny_vocab, 5)
        assert len(seq.tokens) == 5
        assert seq.real_len == 3
        assert seq.tokens[3] == tiny_vocab.pad_id
        assert seq.tokens[4] == tiny_vocab.pad_id
        assert split_text("Good movie.") == ["good", "movie", "."]

    def test_truncation_at_max_len(self, tiny_vocab):
        text = " ".join(f"w{i}" for i in range(200))
        seq = tokenize(text, tiny_vocab, 128)
        assert seq.real_len == 128
        assert len(seq.tokens) == 128

    def test_oov_maps_to_unknown(self, tiny_vocab):
        seq = tokenize("the zyzzyva sat", tiny_vocab, 8)
        assert seq.tokens[1] == tiny_vocab.unk_id
        assert seq.tokens[0] != tiny_vocab.unk_id

    def test_empty_text_flagged_by_real_len(self, tiny_vocab):
        seq = tokenize("", tiny_vocab, 4)
        assert seq.real_len == 0
        assert all(t == tiny_vocab.pad_id for t in seq.tokens)

    @given(st.text(max_size=300), st.integers(min_value=1, max_value=64))
    @settings(max_examples=60, deadline=None)
    def test_always_exactly_max_len_positions(self, text, max_len):
        vocab = build_vocab([Record(id="x", text="a b c")], min_count=1)
        seq = tokenize(text, vocab, max_len)
        assert len(seq.tokens) == max_len
        assert 0 <= seq.real_len <= max_len
        assert all(t == vocab.pad_id for t in seq.tokens[seq.real_len:])


class TestBuildVocab:
    def test_min_count_threshold(self):
        records = [Record(id="0", text="a a b")]
        vocab = build_vocab(records, min_count=2)
        assert "a" in vocab
        assert "b" not in vocab
        assert vocab.id("b") == vocab.unk_id

    def test_min_count_zero_keeps_everything(self):
        records = [Record(id="0", text="a b c d")]
        vocab = build_vocab(records, min_count=0)
        assert all(t in vocab for t in "abcd")

    def test_size_matches_frequency_count_oracle(self):
        rng = np.random.default_rng(5)
        words = [f"w{j}" for j in range(120)]
        records = [
            Record(id=str(i), text=" ".join(rng.choice(words, size=12)))
            for i in range(1000)
        ]
        # brute-force frequency count
        from collections import Counter

        counts = Counter(t for r in records for t in split_text(r.text))
        expected = sum(1 for c in counts.values() if c >= 2)
        vocab = build_vocab(records, min_count=2)
        assert len(vocab) == expected + 3  # plus pad/unk/boundary

    def test_deterministic_id_assignment(self, tiny_records):
        v1 = build_vocab(tiny_records, min_count=1)
        v2 = build_vocab(tiny_records, min_count=1)
        assert [v1.token(i) for i in range(len(v1))] == [v2.token(i) for i in range(len(v2))]


class TestSplitPool:
    def _records(self, n, n_classes=2):
        return [
            Record(id=f"r{i}", text=f"text {i}", label=i % n_classes)
            for i in range(n)
        ]

    def test_sizes(self):
        pool = split_pool(self._records(100), 0.2, seed=0)
        assert len(pool.unlabeled) == 80
        assert len(pool.test) == 20
        assert not pool.labeled

    def test_same_seed_same_split(self):
        a = split_pool(self._records(50), 0.3, seed=7)
        b = split_pool(self._records(50), 0.3, seed=7)
        assert a.unlabeled == b.unlabeled
        assert a.test == b.test

    def test_stratification_counts(self):
        records = self._records(100, n_classes=4)  # 25 per class
        pool = split_pool(records, 0.2, seed=1)
        labels = {r.id: r.label for r in records}
        from collections import Counter

        per_class = Counter(labels[i] for i in pool.test)
        assert per_class == Counter({0: 5, 1: 5, 2: 5, 3: 5})

    def test_single_record_class_rejected(self):
        records = [
            Record(id="a", text="x", label=0),
            Record(id="b", text="y", label=0),
            Record(id="c", text="z", label=1),
        ]
        with pytest.raises(ValueError, match="fewer than 2"):
            split_pool(records, 0.5, seed=0)


class TestPool:
    def test_mark_labeled_moves_ids(self):
        pool = Pool(unlabeled=["a", "b", "c"], labeled={}, test=["t"])
        pool.mark_labeled(["b"], [1])
        assert pool.unlabeled == ["a", "c"]
        assert pool.labeled == {"b": 1}

    def test_unknown_id_rejected(self):
        pool = Pool(unlabeled=["a"], labeled={}, test=[])
        with pytest.raises(ValueError, match="not in unlabeled"):
            pool.mark_labeled(["z"], [0])

    @given(st.lists(st.integers(min_value=0, max_value=19), min_size=1, max_size=12))
    @settings(max_examples=40, deadline=None)
    def test_size_conservation_and_disjointness(self, picks):
        ids = [f"s{i}" for i in range(20)]
        pool = Pool(unlabeled=list(ids), labeled={}, test=[])
        total = len(pool.unlabeled)
        for pick in picks:
            target = f"s{pick}"
            if target in pool.unlabeled:
                pool.mark_labeled([target], [0])
            assert len(pool.unlabeled) + len(pool.labeled) == total
            assert not set(pool.unlabeled) & set(pool.labeled)
