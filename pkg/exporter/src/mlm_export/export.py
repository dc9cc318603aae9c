"""Masked-LM scoring and embedding export.

Scoring modes:

* ``unmasked``: one forward pass per batch of sentences; each position's
  NLL is read off the same pass. Cheap, and the default.
* ``masked``: every subword position is scored from its own forward pass
  with that position replaced by the mask token, the way the model was
  pre-trained. One sentence costs as many rows as it has subwords.

Subword NLLs are summed per word (surprisal is additive in log space), so
the emitted vectors line up with the core engine's word positions.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np
import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer

from . import words as word_mod


@dataclass
class ExportJob:
    model: str
    data_path: str
    mode: str = "unmasked"
    max_len: int = 128
    out_nll: str | None = None
    out_emb: str | None = None
    data_format: str = "jsonl"
    batch_size: int = 16

    def __post_init__(self) -> None:
        if self.mode not in ("unmasked", "masked"):
            raise ValueError("mode must be 'unmasked' or 'masked'")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.data_format not in ("jsonl", "tsv"):
            raise ValueError("data_format must be 'jsonl' or 'tsv'")


def load_records(path: str, fmt: str = "jsonl") -> list[tuple[str, str]]:
    """(id, text) pairs from the core dataset formats; labels are ignored."""
    out: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            stripped = line.rstrip("\n")
            if not stripped.strip():
                continue
            if fmt == "jsonl":
                try:
                    obj = json.loads(stripped)
                    rid, text = str(obj["id"]), str(obj["text"])
                except (json.JSONDecodeError, KeyError) as e:
                    raise ValueError(f"{path} line {lineno + 1}: bad record ({e})") from e
            else:
                if "\t" not in stripped:
                    raise ValueError(f"{path} line {lineno + 1}: expected label<TAB>text")
                _, text = stripped.split("\t", 1)
                rid = str(lineno)
            if rid in seen:
                raise ValueError(f"{path} line {lineno + 1}: duplicate id {rid!r}")
            seen.add(rid)
            out.append((rid, text))
    return out


class ScoringModel:
    """A masked-LM plus tokenizer, loaded once and kept in eval mode."""

    def __init__(self, name_or_path: str):
        self.tokenizer = AutoTokenizer.from_pretrained(name_or_path)
        self.model = AutoModelForMaskedLM.from_pretrained(name_or_path)
        self.model.eval()
        limit = getattr(self.model.config, "max_position_embeddings", None)
        if not limit or limit <= 0:
            limit = int(self.tokenizer.model_max_length)
        self.position_limit = limit

    def encode_words(self, text: str, max_len: int) -> tuple[list[list[int]], int]:
        """Per-word subword id lists, truncated to max_len words and to the
        model's position budget (whole words only)."""
        words = word_mod.split_words(text)[:max_len]
        pieces: list[list[int]] = []
        budget = self.position_limit - 2  # [CLS] and [SEP]
        used = 0
        for w in words:
            ids = self.tokenizer(w, add_special_tokens=False)["input_ids"]
            if not ids:
                ids = [self.tokenizer.unk_token_id]
            if used + len(ids) > budget:
                warnings.warn(
                    f"sentence exceeds the model's position budget ({self.position_limit}); "
                    f"truncated to {len(pieces)} words",
                    stacklevel=2,
                )
                break
            pieces.append(ids)
            used += len(ids)
        return pieces, len(pieces)


def _word_nll_from_subwords(pieces: list[list[int]], sub_nll: np.ndarray, max_len: int) -> np.ndarray:
    out = np.zeros(max_len, dtype=np.float64)
    pos = 0
    for w, ids in enumerate(pieces):
        out[w] = sub_nll[pos:pos + len(ids)].sum()
        pos += len(ids)
    return out


@torch.no_grad()
def _score_unmasked(sm: ScoringModel, batch_pieces: list[list[list[int]]]) -> list[np.ndarray]:
    """Subword NLLs for a batch of sentences from a single forward pass."""
    tok = sm.tokenizer
    rows = [[tok.cls_token_id] + [i for ids in p for i in ids] + [tok.sep_token_id] for p in batch_pieces]
    width = max(len(r) for r in rows)
    input_ids = torch.full((len(rows), width), tok.pad_token_id, dtype=torch.long)
    attention = torch.zeros((len(rows), width), dtype=torch.long)
    for b, r in enumerate(rows):
        input_ids[b, : len(r)] = torch.tensor(r, dtype=torch.long)
        attention[b, : len(r)] = 1
    logits = sm.model(input_ids=input_ids, attention_mask=attention).logits
    logprobs = torch.log_softmax(logits.double(), dim=-1)
    out = []
    for b, r in enumerate(rows):
        n_sub = len(r) - 2
        idx = torch.arange(1, 1 + n_sub)
        true_ids = input_ids[b, idx]
        out.append((-logprobs[b, idx, true_ids]).numpy())
    return out


@torch.no_grad()
def _score_masked(sm: ScoringModel, pieces: list[list[int]], batch_size: int) -> np.ndarray:
    """Subword NLLs with one forward pass per position, that position masked."""
    tok = sm.tokenizer
    flat = [i for ids in pieces for i in ids]
    row = [tok.cls_token_id] + flat + [tok.sep_token_id]
    n_sub = len(flat)
    base = torch.tensor(row, dtype=torch.long)
    nll = np.zeros(n_sub, dtype=np.float64)
    for start in range(0, n_sub, batch_size):
        positions = list(range(start, min(start + batch_size, n_sub)))
        batch = base.repeat(len(positions), 1)
        for r, p in enumerate(positions):
            batch[r, 1 + p] = tok.mask_token_id
        logits = sm.model(input_ids=batch).logits
        logprobs = torch.log_softmax(logits.double(), dim=-1)
        for r, p in enumerate(positions):
            nll[p] = float(-logprobs[r, 1 + p, row[1 + p]])
    return nll


@torch.no_grad()
def _embed(sm: ScoringModel, batch_pieces: list[list[list[int]]]) -> list[np.ndarray]:
    """l2-normalized final hidden state of the [CLS] position, unmasked input."""
    tok = sm.tokenizer
    rows = [[tok.cls_token_id] + [i for ids in p for i in ids] + [tok.sep_token_id] for p in batch_pieces]
    width = max(len(r) for r in rows)
    input_ids = torch.full((len(rows), width), tok.pad_token_id, dtype=torch.long)
    attention = torch.zeros((len(rows), width), dtype=torch.long)
    for b, r in enumerate(rows):
        input_ids[b, : len(r)] = torch.tensor(r, dtype=torch.long)
        attention[b, : len(r)] = 1
    states = sm.model(
        input_ids=input_ids, attention_mask=attention, output_hidden_states=True
    ).hidden_states[-1]
    out = []
    for b in range(len(rows)):
        vec = states[b, 0].double().numpy()
        norm = float(np.linalg.norm(vec))
        out.append(vec / norm if norm > 0 else vec)
    return out


def _write_meta(path: str, job: ExportJob) -> None:
    from . import __version__

    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump({"tool_version": __version__, **asdict(job)}, fh, indent=2)


def run_export(job: ExportJob, sm: ScoringModel | None = None) -> None:
    """Produce whichever of the NLL / embedding files the job asks for.

    Output is appended in dataset order; reruns of the same job produce
    identical files.
    """
    if not job.out_nll and not job.out_emb:
        raise ValueError("nothing to do: set out_nll and/or out_emb")
    sm = sm or ScoringModel(job.model)
    records = load_records(job.data_path, job.data_format)
    nll_fh = open(job.out_nll, "w", encoding="utf-8") if job.out_nll else None
    emb_fh = open(job.out_emb, "w", encoding="utf-8") if job.out_emb else None
    try:
        for start in range(0, len(records), job.batch_size):
            chunk = records[start:start + job.batch_size]
            encoded = [sm.encode_words(text, job.max_len) for _, text in chunk]
            nonempty = [i for i, (p, n) in enumerate(encoded) if n > 0]
            if nll_fh is not None:
                sub_nlls: dict[int, np.ndarray] = {}
                if nonempty:
                    if job.mode == "unmasked":
                        scored = _score_unmasked(sm, [encoded[i][0] for i in nonempty])
                        sub_nlls = dict(zip(nonempty, scored))
                    else:
                        sub_nlls = {
                            i: _score_masked(sm, encoded[i][0], job.batch_size) for i in nonempty
                        }
                for i, (rid, _) in enumerate(chunk):
                    pieces, real_len = encoded[i]
                    vec = (
                        _word_nll_from_subwords(pieces, sub_nlls[i], job.max_len)
                        if i in sub_nlls
                        else np.zeros(job.max_len)
                    )
                    # clamp tiny negative round-off from the log-softmax
                    vec = np.maximum(vec, 0.0)
                    nll_fh.write(json.dumps({
                        "id": rid,
                        "l": job.max_len,
                        "real_len": real_len,
                        "nll": [float(x) for x in vec],
                    }) + "\n")
            if emb_fh is not None:
                vecs: dict[int, np.ndarray] = {}
                if nonempty:
                    embedded = _embed(sm, [encoded[i][0] for i in nonempty])
                    vecs = dict(zip(nonempty, embedded))
                hidden = sm.model.config.hidden_size
                for i, (rid, _) in enumerate(chunk):
                    vec = vecs.get(i, np.zeros(hidden))
                    emb_fh.write(json.dumps({"id": rid, "vec": [float(x) for x in vec]}) + "\n")
    finally:
        if nll_fh is not None:
            nll_fh.close()
            _write_meta(job.out_nll, job)
        if emb_fh is not None:
            emb_fh.close()
            _write_meta(job.out_emb, job)


def export_nll(job: ExportJob, sm: ScoringModel | None = None) -> None:
    if not job.out_nll:
        raise ValueError("job has no out_nll path")
    run_export(ExportJob(**{**asdict(job), "out_emb": None}), sm=sm)


def export_embeddings(job: ExportJob, sm: ScoringModel | None = None) -> None:
    if not job.out_emb:
        raise ValueError("job has no out_emb path")
    run_export(ExportJob(**{**asdict(job), "out_nll": None}), sm=sm)
