"""Synthetic topic-classification corpora for benchmarks and tests.

Each class draws tokens from its own distribution over a vocabulary that is
partly shared across classes and partly class-specific. Class priors in
the training pool can be skewed while the test set stays balanced, which
is where representative sampling pays off over uniform sampling. Sentence
lengths also vary by class, mirroring how real corpora tie style to label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TopicCorpusConfig:
    n_train: int = 2000
    n_test: int = 500
    n_classes: int = 4
    vocab_size: int = 400
    shared_fraction: float = 0.3
    class_priors: tuple[float, ...] = (0.4, 0.3, 0.2, 0.1)
    # rarer classes are terser, the way specialized labels tend to be
    length_ranges: tuple[tuple[int, int], ...] = ((22, 36), (16, 28), (10, 20), (6, 14))
    shared_token_rate: float = 0.5
    zipf_exponent: float = 1.1
    seed: int = 0


def _zipf_weights(n: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, n + 1, dtype=np.float64)
    w = ranks ** -exponent
    return w / w.sum()


def generate_topic_corpus(cfg: TopicCorpusConfig = TopicCorpusConfig()) -> tuple[list[dict], list[dict]]:
    """Return (train_records, test_records) as dicts with id/text/label."""
    if len(cfg.class_priors) != cfg.n_classes or len(cfg.length_ranges) != cfg.n_classes:
        raise ValueError("class_priors and length_ranges must have one entry per class")
    rng = np.random.default_rng(cfg.seed)
    n_shared = int(round(cfg.vocab_size * cfg.shared_fraction))
    per_class = (cfg.vocab_size - n_shared) // cfg.n_classes
    shared = [f"sh{j:03d}" for j in range(n_shared)]
    class_tokens = [
        [f"c{c}w{j:03d}" for j in range(per_class)] for c in range(cfg.n_classes)
    ]
    shared_w = _zipf_weights(n_shared, cfg.zipf_exponent)
    class_w = _zipf_weights(per_class, cfg.zipf_exponent)
    priors = np.asarray(cfg.class_priors, dtype=np.float64)
    priors = priors / priors.sum()

    def sentence(label: int) -> str:
        lo, hi = cfg.length_ranges[label]
        length = int(rng.integers(lo, hi + 1))
        words = []
        for _ in range(length):
            if rng.random() < cfg.shared_token_rate:
                words.append(shared[int(rng.choice(n_shared, p=shared_w))])
            else:
                words.append(class_tokens[label][int(rng.choice(per_class, p=class_w))])
        return " ".join(words)

    train = []
    train_labels = rng.choice(cfg.n_classes, size=cfg.n_train, p=priors)
    for i, label in enumerate(train_labels):
        train.append({"id": f"tr{i:05d}", "text": sentence(int(label)), "label": f"class{int(label)}"})
    test = []
    per_class_test = cfg.n_test // cfg.n_classes
    test_labels = np.concatenate([
        np.full(per_class_test, c) for c in range(cfg.n_classes)
    ] + [np.arange(cfg.n_test - per_class_test * cfg.n_classes) % cfg.n_classes])
    for i, label in enumerate(test_labels):
        test.append({"id": f"te{i:05d}", "text": sentence(int(label)), "label": f"class{int(label)}"})
    return train, test


def write_jsonl(records: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def write_corpus(cfg: TopicCorpusConfig, train_path: str, test_path: str | None = None) -> None:
    """Write the corpus as JSONL; a single file when test_path is omitted."""
    train, test = generate_topic_corpus(cfg)
    if test_path is None:
        write_jsonl(train + test, train_path)
    else:
        write_jsonl(train, train_path)
        write_jsonl(test, test_path)
