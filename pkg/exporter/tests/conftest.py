import json

import pytest
import torch
from transformers import BertConfig, BertForMaskedLM, BertTokenizer

# a small wordpiece vocabulary: whole words plus pieces so that some words
# ("alpha", "beta", "gamma") split into multiple subwords
VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "cat", "sat", "on", "mat", "a", "dog", "ran", "in", "park",
    "bird", "flew", "over", "tree", "fish", "swam", "under", "bridge",
    "al", "##pha", "be", "##ta", "gam", "##ma", "del", "##ta",
    ".", ",", "!",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A deterministic, randomly initialized masked LM saved locally."""
    path = tmp_path_factory.mktemp("tinybert")
    with open(path / "vocab.txt", "w") as fh:
        fh.write("\n".join(VOCAB))
    tokenizer = BertTokenizer(str(path / "vocab.txt"), do_lower_case=True)
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=48,
    )
    model = BertForMaskedLM(config)
    model.eval()
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return str(path)


SENTENCES = [
    "the cat sat on the mat",
    "a dog ran in the park",
    "the bird flew over the tree",
    "a fish swam under the bridge",
    "alpha beta gamma",
    "the alpha cat sat on a delta mat .",
    "gamma dog , beta bird !",
    "the fish swam over the park",
    "a tree sat under the bridge",
    "delta alpha beta gamma delta",
]


@pytest.fixture(scope="session")
def sample_dataset(tmp_path_factory):
    """50 sentences cycled from the templates, ids d000..d049."""
    path = tmp_path_factory.mktemp("data") / "sample.jsonl"
    with open(path, "w") as fh:
        for i in range(50):
            text = SENTENCES[i % len(SENTENCES)]
            fh.write(json.dumps({"id": f"d{i:03d}", "text": text, "label": f"c{i % 2}"}) + "\n")
    return str(path)
