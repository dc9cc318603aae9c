#!/usr/bin/env python3
"""End-to-end desk-scale benchmark: corpus, all six strategies, aggregation.

Reproduces the headline comparison (6 strategies x 5 seeds x 6 iterations of
50 queries) and drops raw.csv / aggregate.csv / per-run JSON under --out.
Runs in a couple of minutes on a laptop.
"""

import argparse
import os
import sys

from coldstart_al.cli import main as cli_main
from coldstart_al.synthetic import TopicCorpusConfig, write_corpus

CONFIG_TEMPLATE = """\
[data]
path = {train}
test_path = {test}
max_len = 128

[train]
learning_rate = 0.02
epochs = 40

[run]
strategies = alps,badge,entropy,random,emb-km,ft-emb-km
seeds = 0,1,2,3,4
k = 50
iterations = 6

[output]
dir = {out}
"""


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="corpus generation seed")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    os.makedirs(args.out, exist_ok=True)
    train_path = os.path.join(args.out, "train.jsonl")
    test_path = os.path.join(args.out, "test.jsonl")
    write_corpus(TopicCorpusConfig(seed=args.seed), train_path, test_path)

    config_path = os.path.join(args.out, "benchmark.ini")
    with open(config_path, "w") as fh:
        fh.write(CONFIG_TEMPLATE.format(train=train_path, test=test_path, out=args.out))
    return cli_main(["simulate", "--config", config_path, "--jobs", str(args.jobs)])


if __name__ == "__main__":
    sys.exit(main())
