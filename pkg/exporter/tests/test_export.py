import json
import os

import numpy as np
import pytest
import torch

from mlm_export.cli import main
from mlm_export.export import ExportJob, ScoringModel, load_records, run_export
from mlm_export.words import split_words

# the core package is the consumer contract: its loaders validate everything
from coldstart_al.corpus import Record, build_vocab, split_text, tokenize
from coldstart_al.embeddings import load_external_embeddings
from coldstart_al.strategies import sample_alps
from coldstart_al.surprisal_lm import load_external_nll


@pytest.fixture(scope="session")
def scoring_model(tiny_model_dir):
    return ScoringModel(tiny_model_dir)


@pytest.fixture(scope="session")
def exported(tiny_model_dir, sample_dataset, tmp_path_factory, scoring_model):
    out = tmp_path_factory.mktemp("exported")
    job = ExportJob(
        model=tiny_model_dir,
        data_path=sample_dataset,
        mode="unmasked",
        max_len=32,
        out_nll=str(out / "nll.jsonl"),
        out_emb=str(out / "emb.jsonl"),
    )
    run_export(job, sm=scoring_model)
    return job


class TestWordAlignment:
    def test_word_split_matches_core_tokenizer(self):
        for text in ("The cat sat.", "Alpha, beta!", "a  b\tc", ""):
            assert split_words(text) == split_text(text)


class TestNllExport:
    def test_validates_under_core_loader_with_zero_errors(self, exported, sample_dataset):
        records = load_records(sample_dataset)
        loaded = load_external_nll(exported.out_nll, max_len=32, known_ids=dict(records))
        assert len(loaded) == 50

    def test_word_level_alignment_with_core_real_len(self, exported, sample_dataset):
        loaded = load_external_nll(exported.out_nll, max_len=32)
        records = load_records(sample_dataset)
        vocab = build_vocab([Record(id=i, text=t) for i, t in records], min_count=1)
        for rid, text in records:
            core_seq = tokenize(text, vocab, 32, seq_id=rid)
            assert loaded[rid].real_len == core_seq.real_len

    def test_values_nonnegative_finite_zero_padding(self, exported):
        loaded = load_external_nll(exported.out_nll, max_len=32)
        for vec in loaded.values():
            assert np.all(np.isfinite(vec.nll))
            assert np.all(vec.nll >= 0)
            assert np.all(vec.nll[vec.real_len:] == 0.0)
            assert np.all(vec.nll[: vec.real_len] > 0.0)  # random model is never certain

    def test_alps_runs_end_to_end_on_exported_nll(self, exported):
        loaded = load_external_nll(exported.out_nll, max_len=32)
        ids = sorted(loaded)
        batch = sample_alps(ids, loaded, k=5, p=0.15, seed=0)
        assert len(batch.ids) == 5
        assert len(set(batch.ids)) == 5
        assert set(batch.ids) <= set(ids)

    def test_multiword_subword_sum(self, scoring_model, tiny_model_dir, tmp_path):
        # "alpha" splits into two subwords; its word NLL must be their sum
        data = tmp_path / "one.jsonl"
        data.write_text(json.dumps({"id": "x", "text": "alpha cat"}) + "\n")
        job = ExportJob(
            model=tiny_model_dir, data_path=str(data), max_len=8,
            out_nll=str(tmp_path / "nll.jsonl"),
        )
        run_export(job, sm=scoring_model)
        vec = load_external_nll(job.out_nll, max_len=8)["x"]
        assert vec.real_len == 2

        tok = scoring_model.tokenizer
        ids = [tok.cls_token_id] + tok("alpha cat", add_special_tokens=False)["input_ids"] + [tok.sep_token_id]
        with torch.no_grad():
            logits = scoring_model.model(input_ids=torch.tensor([ids])).logits
        logprobs = torch.log_softmax(logits.double(), dim=-1)[0]
        word_nll = -(logprobs[1, ids[1]] + logprobs[2, ids[2]])  # "al" + "##pha"
        assert vec.nll[0] == pytest.approx(float(word_nll), abs=1e-9)
        assert vec.nll[1] == pytest.approx(float(-logprobs[3, ids[3]]), abs=1e-9)


class TestRealModelSpotChecks:
    @pytest.mark.skipif(
        not os.environ.get("MLM_EXPORT_REAL_MODEL"),
        reason="needs a trained model; set MLM_EXPORT_REAL_MODEL=<name-or-path>",
    )
    def test_predictable_token_scores_below_sentence_mean(self, tmp_path):
        # "the" after "of" is about as predictable as tokens get
        model = os.environ["MLM_EXPORT_REAL_MODEL"]
        sentences = [
            "the capital of the country is growing fast",
            "she is a member of the city council",
            "the color of the sky changed at dusk",
            "he stood at the edge of the cliff",
            "the goal of the project is ambitious",
            "we reached the top of the mountain by noon",
            "the cost of the repairs was enormous",
            "the sound of the engine woke everyone",
            "a map of the region hung on the wall",
            "the result of the election surprised analysts",
        ]
        data = tmp_path / "preds.jsonl"
        with open(data, "w") as fh:
            for i, text in enumerate(sentences):
                fh.write(json.dumps({"id": f"p{i}", "text": text}) + "\n")
        job = ExportJob(model=model, data_path=str(data), max_len=32,
                        out_nll=str(tmp_path / "nll.jsonl"))
        run_export(job)
        loaded = load_external_nll(job.out_nll, max_len=32)
        wins = 0
        for i, text in enumerate(sentences):
            words = split_words(text)
            target = words.index("of") + 1  # the "the" right after "of"
            vec = loaded[f"p{i}"]
            wins += vec.nll[target] < vec.nll[: vec.real_len].mean()
        assert wins >= 8


class TestMaskedMode:
    def test_masked_export_validates_and_differs_from_unmasked(
        self, tiny_model_dir, sample_dataset, tmp_path, scoring_model
    ):
        job = ExportJob(
            model=tiny_model_dir, data_path=sample_dataset, mode="masked",
            max_len=32, out_nll=str(tmp_path / "masked.jsonl"), batch_size=8,
        )
        run_export(job, sm=scoring_model)
        masked = load_external_nll(job.out_nll, max_len=32)
        assert len(masked) == 50
        unmasked_path = tmp_path / "unmasked.jsonl"
        run_export(
            ExportJob(model=tiny_model_dir, data_path=sample_dataset, mode="unmasked",
                      max_len=32, out_nll=str(unmasked_path)),
            sm=scoring_model,
        )
        unmasked = load_external_nll(str(unmasked_path), max_len=32)
        diffs = [
            float(np.abs(masked[i].nll - unmasked[i].nll).max()) for i in masked
        ]
        assert max(diffs) > 1e-6  # masking genuinely changes the scores

    def test_masked_single_position_oracle(self, scoring_model, tiny_model_dir, tmp_path):
        # hand-check one position: mask it, read the true token's logprob
        data = tmp_path / "one.jsonl"
        data.write_text(json.dumps({"id": "x", "text": "the cat"}) + "\n")
        job = ExportJob(
            model=tiny_model_dir, data_path=str(data), mode="masked", max_len=4,
            out_nll=str(tmp_path / "m.jsonl"),
        )
        run_export(job, sm=scoring_model)
        vec = load_external_nll(job.out_nll, max_len=4)["x"]
        tok = scoring_model.tokenizer
        ids = [tok.cls_token_id] + tok("the cat", add_special_tokens=False)["input_ids"] + [tok.sep_token_id]
        row = list(ids)
        row[1] = tok.mask_token_id
        with torch.no_grad():
            logits = scoring_model.model(input_ids=torch.tensor([row])).logits
        want = float(-torch.log_softmax(logits.double(), dim=-1)[0, 1, ids[1]])
        assert vec.nll[0] == pytest.approx(want, abs=1e-9)


class TestEmbeddings:
    def test_uniform_dimension_and_unit_norm(self, exported):
        vecs = load_external_embeddings(exported.out_emb)
        assert len(vecs) == 50
        dims = {len(v) for v in vecs.values()}
        assert dims == {32}
        for v in vecs.values():
            assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-5)

    def test_input_dependent_and_deterministic(self, exported):
        vecs = load_external_embeddings(exported.out_emb)
        assert not np.array_equal(vecs["d000"], vecs["d003"])  # different sentences
        assert np.array_equal(vecs["d000"], vecs["d010"])  # identical text, same vector

    @pytest.mark.skipif(
        not os.environ.get("MLM_EXPORT_REAL_MODEL"),
        reason="needs a trained model; set MLM_EXPORT_REAL_MODEL=<name-or-path>",
    )
    def test_near_duplicates_closer_than_unrelated_real_model(self, tmp_path):
        # random-weight models map every sentence to nearly the same [CLS]
        # state, so this measurement only says something about trained ones
        model = os.environ["MLM_EXPORT_REAL_MODEL"]
        triples = [
            ("the movie was great fun", "the movie was great entertainment", "stock prices fell sharply"),
            ("he walked the dog outside", "she walked the dog outside", "the theorem has a short proof"),
            ("rain fell all day long", "rain fell all night long", "the senate passed the bill"),
            ("the soup needs more salt", "the soup needs more pepper", "galaxies rotate around their center"),
            ("open the window please", "open the door please", "the quarterly earnings beat estimates"),
            ("the team won the final", "the team lost the final", "add two cups of flour"),
            ("students study in the library", "students read in the library", "the engine overheated on the highway"),
            ("the garden is full of roses", "the garden is full of tulips", "the court dismissed the case"),
            ("birds sing in the morning", "birds sing in the evening", "the compiler reported an error"),
            ("coffee tastes better warm", "tea tastes better warm", "the glacier retreated ten meters"),
        ]
        data = tmp_path / "triples.jsonl"
        with open(data, "w") as fh:
            for i, (a, b, c) in enumerate(triples):
                for j, text in enumerate((a, b, c)):
                    fh.write(json.dumps({"id": f"t{i}{j}", "text": text}) + "\n")
        job = ExportJob(model=model, data_path=str(data), max_len=32,
                        out_emb=str(tmp_path / "emb.jsonl"))
        run_export(job)
        vecs = load_external_embeddings(job.out_emb)
        wins = sum(
            np.dot(vecs[f"t{i}0"], vecs[f"t{i}1"]) > np.dot(vecs[f"t{i}0"], vecs[f"t{i}2"])
            for i in range(10)
        )
        assert wins >= 9


class TestDeterminismAndMeta:
    def test_two_exports_identical_bytes(self, tiny_model_dir, sample_dataset, tmp_path, scoring_model):
        paths = []
        for name in ("a", "b"):
            job = ExportJob(
                model=tiny_model_dir, data_path=sample_dataset, max_len=32,
                out_nll=str(tmp_path / f"{name}.jsonl"),
            )
            run_export(job, sm=scoring_model)
            paths.append(tmp_path / f"{name}.jsonl")
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_mode_recorded_in_metadata(self, exported):
        meta = json.load(open(exported.out_nll + ".meta.json"))
        assert meta["mode"] == "unmasked"
        assert meta["max_len"] == 32
        assert meta["model"]

    def test_truncation_warns_on_overlong_sentence(self, scoring_model, tiny_model_dir, tmp_path):
        # the tiny model's position budget is 48; 60 words exceed it
        data = tmp_path / "long.jsonl"
        data.write_text(json.dumps({"id": "x", "text": " ".join(["cat"] * 60)}) + "\n")
        job = ExportJob(
            model=tiny_model_dir, data_path=str(data), max_len=128,
            out_nll=str(tmp_path / "long_out.jsonl"),
        )
        with pytest.warns(UserWarning, match="position budget"):
            run_export(job, sm=scoring_model)
        vec = load_external_nll(job.out_nll, max_len=128)["x"]
        assert vec.real_len == 46  # 48 minus [CLS]/[SEP]


class TestCli:
    def test_cli_round_trip(self, tiny_model_dir, sample_dataset, tmp_path):
        out_nll = str(tmp_path / "nll.jsonl")
        out_emb = str(tmp_path / "emb.jsonl")
        code = main([
            "--model", tiny_model_dir, "--data", sample_dataset,
            "--mode", "unmasked", "--max-len", "32",
            "--out-nll", out_nll, "--out-emb", out_emb,
        ])
        assert code == 0
        assert len(load_external_nll(out_nll, max_len=32)) == 50
        assert len(load_external_embeddings(out_emb)) == 50

    def test_no_output_requested_is_an_error(self, tiny_model_dir, sample_dataset):
        assert main(["--model", tiny_model_dir, "--data", sample_dataset]) == 1

    def test_missing_data_file_is_data_error(self, tiny_model_dir, tmp_path):
        code = main([
            "--model", tiny_model_dir, "--data", str(tmp_path / "nope.jsonl"),
            "--out-nll", str(tmp_path / "x.jsonl"),
        ])
        assert code == 2
