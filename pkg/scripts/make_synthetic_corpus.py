#!/usr/bin/env python3
"""Generate the synthetic topic-classification corpus as JSONL files.

Example:
    python scripts/make_synthetic_corpus.py --out-dir data --seed 0
writes data/train.jsonl (2000 sentences, skewed class priors) and
data/test.jsonl (500 sentences, balanced).
"""

import argparse
import os

from coldstart_al.synthetic import TopicCorpusConfig, write_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--n-train", type=int, default=2000)
    parser.add_argument("--n-test", type=int, default=500)
    parser.add_argument("--n-classes", type=int, default=4)
    parser.add_argument("--vocab-size", type=int, default=400)
    parser.add_argument("--shared-fraction", type=float, default=0.3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    defaults = TopicCorpusConfig()
    if args.n_classes == 4:
        priors, lengths = defaults.class_priors, defaults.length_ranges
    else:
        priors = tuple(1.0 / args.n_classes for _ in range(args.n_classes))
        lengths = tuple((10, 24) for _ in range(args.n_classes))
    cfg = TopicCorpusConfig(
        n_train=args.n_train,
        n_test=args.n_test,
        n_classes=args.n_classes,
        vocab_size=args.vocab_size,
        shared_fraction=args.shared_fraction,
        class_priors=priors,
        length_ranges=lengths,
        seed=args.seed,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    train_path = os.path.join(args.out_dir, "train.jsonl")
    test_path = os.path.join(args.out_dir, "test.jsonl")
    write_corpus(cfg, train_path, test_path)
    print(f"wrote {train_path} ({args.n_train} records) and {test_path} ({args.n_test} records)")


if __name__ == "__main__":
    main()
