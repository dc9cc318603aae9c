"""The three embedding families the acquisition strategies cluster.

* surprisal embeddings: per-position NLL values at a random token
  subsample, zeros elsewhere, l2-normalized;
* gradient embeddings: the last-layer cross-entropy gradient at the
  model's own predicted label, one block per class;
* feature vectors: hashed bag-of-tokens-and-bigrams sentence vectors (a
  self-contained stand-in for pretrained sentence encoders), or external
  vectors ingested from JSONL.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierModel
from .corpus import TokenSeq
from .surprisal_lm import NllVector
from .util import DataFormatError, l2_normalize, stable_bucket, stable_seed


@dataclass(frozen=True)
class SurprisalEmbedding:
    id: str
    values: np.ndarray  # l2-normalized (or all-zero)
    sampled_mask: np.ndarray
    raw_values: np.ndarray  # sampled NLLs bit-equal to the provider, zeros elsewhere


@dataclass(frozen=True)
class GradientEmbedding:
    id: str
    values: np.ndarray


@dataclass(frozen=True)
class FeatureVector:
    id: str
    values: np.ndarray
    normalized: bool


@dataclass(frozen=True)
class FeaturizerConfig:
    dim: int = 512


def per_sentence_seed(run_seed: int, sentence_id: str) -> int:
    """Subsampling seed for one sentence, independent of pool order."""
    return stable_seed(run_seed, "surprisal", sentence_id)


def surprisal_embedding(nll: NllVector, p: float, seed: int) -> SurprisalEmbedding:
    """Subsample non-padding positions and keep their NLL values.

    Exactly max(1, round(p * real_len)) distinct positions are drawn
    uniformly without replacement; everything else is zero. The result is
    l2-normalized unless every kept value is zero, in which case the raw
    all-zero vector is returned (degenerate but still clusterable).
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("sampling fraction p must be in (0, 1]")
    length = len(nll.nll)
    mask = np.zeros(length, dtype=bool)
    if nll.real_len > 0:
        n_sample = max(1, int(round(p * nll.real_len)))
        rng = np.random.default_rng(seed)
        positions = rng.choice(nll.real_len, size=n_sample, replace=False)
        mask[positions] = True
    raw = np.where(mask, nll.nll, 0.0)
    return SurprisalEmbedding(
        id=nll.id, values=l2_normalize(raw), sampled_mask=mask, raw_values=raw
    )


def gradient_embedding(confidences: np.ndarray, hidden: np.ndarray, id: str = "") -> GradientEmbedding:
    """Last-layer cross-entropy gradient at the predicted label.

    Block i of the result is ``(confidences[i] - [i == argmax]) * hidden``,
    giving a vector of dimension C * d_h. Ties in the prediction go to the
    lowest class index.
    """
    conf = np.asarray(confidences, dtype=np.float64)
    h = np.asarray(hidden, dtype=np.float64)
    if conf.ndim != 1 or h.ndim != 1:
        raise ValueError("confidences and hidden must be 1-D")
    if np.any(conf < 0) or abs(float(conf.sum()) - 1.0) > 1e-6:
        raise ValueError("confidences must form a probability simplex")
    scales = conf.copy()
    scales[int(np.argmax(conf))] -= 1.0
    return GradientEmbedding(id=id, values=(scales[:, None] * h[None, :]).reshape(-1))


def feature_embedding(seq: TokenSeq, config: FeaturizerConfig = FeaturizerConfig()) -> FeatureVector:
    """Hashed bag-of-tokens-and-bigrams vector, log(1+count) weighted, unit norm."""
    counts = np.zeros(config.dim, dtype=np.float64)
    toks = seq.tokens[: seq.real_len]
    for t in toks:
        counts[stable_bucket("u", t, dim=config.dim)] += 1.0
    for a, b in zip(toks, toks[1:]):
        counts[stable_bucket("b", a, b, dim=config.dim)] += 1.0
    vec = np.log1p(counts)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return FeatureVector(id=seq.id, values=vec, normalized=False)
    return FeatureVector(id=seq.id, values=vec / norm, normalized=True)


def hidden_embedding(model: ClassifierModel, features: FeatureVector | np.ndarray) -> np.ndarray:
    """The classifier's hidden-layer activation for one input."""
    x = features.values if isinstance(features, FeatureVector) else np.asarray(features, dtype=np.float64)
    if x.shape[-1] != model.d_in:
        raise ValueError(f"feature dimension {x.shape[-1]} does not match model d_in {model.d_in}")
    return model.hidden(x)


class Featurizer:
    """Maps token sequences to sentence vectors, hashed or externally supplied."""

    def __init__(
        self,
        config: FeaturizerConfig = FeaturizerConfig(),
        external: dict[str, np.ndarray] | None = None,
    ):
        self._config = config
        self._external: dict[str, np.ndarray] | None = None
        self.dim = config.dim
        if external is not None:
            if not external:
                raise ValueError("external vector map is empty")
            dims = {len(v) for v in external.values()}
            if len(dims) != 1:
                raise DataFormatError(f"external vectors have mixed dimensions {sorted(dims)}")
            self._external = {k: np.asarray(v, dtype=np.float64) for k, v in external.items()}
            self.dim = dims.pop()

    def __call__(self, seq: TokenSeq) -> FeatureVector:
        if self._external is None:
            return feature_embedding(seq, self._config)
        if seq.id not in self._external:
            raise DataFormatError(f"no external vector for sentence {seq.id!r}")
        vec = self._external[seq.id]
        norm = float(np.linalg.norm(vec))
        return FeatureVector(id=seq.id, values=vec, normalized=bool(abs(norm - 1.0) < 1e-6))


def load_external_embeddings(path: str) -> dict[str, np.ndarray]:
    """Read the sentence-embedding ingest format: {"id": ..., "vec": [...]}."""
    out: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            where = f"{path} line {lineno + 1}"
            try:
                obj = json.loads(line)
                rid = str(obj["id"])
                vec = np.asarray(obj["vec"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise DataFormatError(f"{where}: malformed record ({e})") from e
            if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                raise DataFormatError(f"{where}: vec must be a flat list of finite floats")
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise DataFormatError(f"{where}: dimension {len(vec)} != {dim}")
            if rid in out:
                raise DataFormatError(f"{where}: duplicate id {rid!r}")
            out[rid] = vec
    return out


def save_embeddings_file(path: str, vectors: dict[str, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rid, vec in vectors.items():
            fh.write(json.dumps({"id": rid, "vec": [float(x) for x in vec]}) + "\n")
