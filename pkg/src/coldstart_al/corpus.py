"""Dataset loading, tokenization, vocabulary and pool management.

Two on-disk dataset formats are supported:

* JSONL: one object per line with fields ``id`` (string), ``text`` (string)
  and optional ``label`` (string).
* TSV: ``label<TAB>text`` per line; ids are assigned as zero-based line
  numbers.

Label strings map to dense class ids in first-occurrence order, so loading
is deterministic for a fixed file.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .util import DataFormatError, stable_seed

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
BOUNDARY_TOKEN = "<s>"

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def split_text(text: str) -> list[str]:
    """Lowercased whitespace-plus-punctuation word split."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Record:
    id: str
    text: str
    label: int | None = None
    label_name: str | None = None


@dataclass(frozen=True)
class Dataset:
    records: list[Record]
    label_names: list[str]

    @property
    def num_classes(self) -> int:
        return len(self.label_names)


@dataclass(frozen=True)
class TokenSeq:
    """A fixed-length tokenized sentence; positions >= real_len hold pad ids."""

    id: str
    tokens: tuple[int, ...]
    real_len: int
    label: int | None = None


class Vocab:
    """Token/id bijection with pad, unknown and sentence-boundary specials."""

    def __init__(self, tokens: list[str]):
        self._id_to_token = [PAD_TOKEN, UNK_TOKEN, BOUNDARY_TOKEN] + list(tokens)
        self._token_to_id = {t: i for i, t in enumerate(self._id_to_token)}
        if len(self._token_to_id) != len(self._id_to_token):
            raise ValueError("duplicate tokens in vocabulary")

    pad_id = 0
    unk_id = 1
    boundary_id = 2

    @property
    def special_ids(self) -> frozenset[int]:
        return frozenset((self.pad_id, self.unk_id, self.boundary_id))

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id(self, token: str) -> int:
        return self._token_to_id.get(token, self.unk_id)

    def token(self, token_id: int) -> str:
        return self._id_to_token[token_id]


@dataclass
class Pool:
    """Labeled/unlabeled/test membership for one experiment.

    ``labeled`` grows monotonically via mark_labeled and never overlaps
    ``unlabeled``; insertion order of both is preserved so downstream
    computations are deterministic.
    """

    unlabeled: list[str]
    labeled: dict[str, int] = field(default_factory=dict)
    test: list[str] = field(default_factory=list)

    def mark_labeled(self, ids: list[str], labels: list[int]) -> None:
        if len(ids) != len(labels):
            raise ValueError("ids and labels length mismatch")
        batch = set(ids)
        if len(batch) != len(ids):
            raise ValueError("duplicate ids in batch")
        unlabeled_set = set(self.unlabeled)
        for i in ids:
            if i not in unlabeled_set:
                raise ValueError(f"id {i!r} not in unlabeled pool")
        self.unlabeled = [i for i in self.unlabeled if i not in batch]
        for i, y in zip(ids, labels):
            self.labeled[i] = y


def load_dataset(path: str, fmt: str = "jsonl") -> Dataset:
    """Parse a dataset file; see the module docstring for the two formats.

    Raises DataFormatError on malformed lines (naming the line number),
    duplicate ids, or a degenerate single-label task.
    """
    if fmt not in ("jsonl", "tsv"):
        raise ValueError(f"unknown dataset format {fmt!r} (expected jsonl or tsv)")
    label_ids: dict[str, int] = {}
    records: list[Record] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            stripped = line.rstrip("\n")
            if not stripped.strip():
                continue
            if fmt == "jsonl":
                try:
                    obj = json.loads(stripped)
                except json.JSONDecodeError as e:
                    raise DataFormatError(f"{path} line {lineno + 1}: invalid JSON ({e.msg})") from e
                if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                    raise DataFormatError(f"{path} line {lineno + 1}: object must have id and text fields")
                rid = str(obj["id"])
                text = obj["text"]
                if not isinstance(text, str):
                    raise DataFormatError(f"{path} line {lineno + 1}: text must be a string")
                raw_label = obj.get("label")
                label_name = None if raw_label is None else str(raw_label)
            else:
                if "\t" not in stripped:
                    raise DataFormatError(f"{path} line {lineno + 1}: expected label<TAB>text")
                label_name, text = stripped.split("\t", 1)
                rid = str(lineno)
            if rid in seen:
                raise DataFormatError(f"{path} line {lineno + 1}: duplicate id {rid!r}")
            seen.add(rid)
            label = None
            if label_name is not None:
                if label_name not in label_ids:
                    label_ids[label_name] = len(label_ids)
                label = label_ids[label_name]
            records.append(Record(id=rid, text=text, label=label, label_name=label_name))
    if len(label_ids) == 1:
        raise DataFormatError(f"{path}: only one distinct label present (degenerate task)")
    return Dataset(records=records, label_names=list(label_ids))


def tokenize(text: str, vocab: Vocab, max_len: int, seq_id: str = "", label: int | None = None) -> TokenSeq:
    """Map text to exactly max_len token ids, truncating or right-padding."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = [vocab.id(t) for t in split_text(text)][:max_len]
    real_len = len(ids)
    ids.extend([vocab.pad_id] * (max_len - real_len))
    return TokenSeq(id=seq_id, tokens=tuple(ids), real_len=real_len, label=label)


def tokenize_records(dataset: Dataset, vocab: Vocab, max_len: int) -> dict[str, TokenSeq]:
    return {
        r.id: tokenize(r.text, vocab, max_len, seq_id=r.id, label=r.label)
        for r in dataset.records
    }


def build_vocab(records: list[Record], min_count: int = 1) -> Vocab:
    """Vocabulary over tokens with corpus frequency >= min_count.

    Ids are assigned by descending frequency, ties broken lexicographically,
    so construction is fully deterministic.
    """
    if not records:
        raise ValueError("cannot build a vocabulary from zero records")
    counts: dict[str, int] = {}
    for r in records:
        for tok in split_text(r.text):
            counts[tok] = counts.get(tok, 0) + 1
    kept = [t for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocab(kept)


def split_pool(records: list[Record], test_fraction: float, seed: int) -> Pool:
    """Stratified train/test split; all training records start unlabeled.

    Every record must carry a gold label (the simulated oracle needs them)
    and every class needs at least two records.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    by_class: dict[int, list[str]] = {}
    for r in records:
        if r.label is None:
            raise ValueError(f"record {r.id!r} has no label; stratified split needs gold labels")
        by_class.setdefault(r.label, []).append(r.id)
    test_ids: set[str] = set()
    for label in sorted(by_class):
        ids = by_class[label]
        if len(ids) < 2:
            raise ValueError(f"class {label} has fewer than 2 records")
        rng = np.random.default_rng(stable_seed(seed, "split", label))
        n_test = int(round(len(ids) * test_fraction))
        n_test = min(n_test, len(ids) - 1)
        order = rng.permutation(len(ids))
        test_ids.update(ids[i] for i in order[:n_test])
    unlabeled = [r.id for r in records if r.id not in test_ids]
    test = [r.id for r in records if r.id in test_ids]
    return Pool(unlabeled=unlabeled, labeled={}, test=test)
