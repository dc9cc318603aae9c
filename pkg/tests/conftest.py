import os

import pytest

from coldstart_al.corpus import Record, build_vocab, tokenize

from jsonl_util import write_jsonl_file


@pytest.fixture
def tiny_records():
    texts = [
        ("r0", "the cat sat on the mat", "animal"),
        ("r1", "a dog ran in the park", "animal"),
        ("r2", "stocks fell sharply on tuesday", "money"),
        ("r3", "the bank raised interest rates", "money"),
        ("r4", "a cat chased the dog", "animal"),
        ("r5", "markets rallied after the report", "money"),
    ]
    return [Record(id=i, text=t, label=0 if lab == "animal" else 1, label_name=lab) for i, t, lab in texts]


@pytest.fixture
def tiny_vocab(tiny_records):
    return build_vocab(tiny_records, min_count=1)


@pytest.fixture
def tiny_seqs(tiny_records, tiny_vocab):
    return {r.id: tokenize(r.text, tiny_vocab, 16, seq_id=r.id, label=r.label) for r in tiny_records}


@pytest.fixture
def jsonl_path(tmp_path):
    rows = [
        {"id": "a1", "text": "good movie", "label": "pos"},
        {"id": "a2", "text": "bad movie", "label": "neg"},
        {"id": "a3", "text": "great plot twist", "label": "pos"},
        {"id": "a4", "text": "terrible acting throughout", "label": "neg"},
    ]
    return write_jsonl_file(os.path.join(tmp_path, "data.jsonl"), rows)
