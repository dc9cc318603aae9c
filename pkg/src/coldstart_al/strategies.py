"""The six acquisition strategies.

Each maps the current unlabeled pool (plus whatever signal it is allowed
to see) to a batch of k distinct sentence ids. Cold-start strategies never
receive the classifier; warm-start ones require a trained model, and their
first-iteration fallbacks are the caller's job (see simulation).

Strategy ids are fixed strings used in configs and output files:
``alps``, ``badge``, ``entropy``, ``random``, ``emb-km``, ``ft-emb-km``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .classifier import ClassifierModel, predict_proba, predictive_entropy
from .clustering import kmeans, kmeanspp_indices, nearest_to_centers
from .embeddings import FeatureVector, per_sentence_seed, surprisal_embedding
from .surprisal_lm import NllVector
from .util import l2_normalize, stable_seed

COLD_START = ("alps", "emb-km", "random")
WARM_START = ("badge", "entropy", "ft-emb-km")
STRATEGY_IDS = ("alps", "badge", "entropy", "random", "emb-km", "ft-emb-km")


@dataclass(frozen=True)
class QueryBatch:
    strategy: str
    iteration: int
    ids: list[str]
    selection_time: float  # seconds


def _clamp_k(k: int, unlabeled: list[str], strategy: str) -> int:
    if k <= 0:
        raise ValueError("k must be positive")
    if not unlabeled:
        raise ValueError("unlabeled pool is empty")
    if k > len(unlabeled):
        warnings.warn(
            f"{strategy}: requested {k} queries from a pool of {len(unlabeled)}; truncating",
            stacklevel=3,
        )
        return len(unlabeled)
    return k


def _cluster_select(
    strategy: str,
    iteration: int,
    unlabeled: list[str],
    matrix: np.ndarray,
    k: int,
    seed: int,
    init: str,
    max_iter: int,
    t0: float,
) -> QueryBatch:
    """Shared k-means-then-nearest pipeline for alps / emb-km / ft-emb-km."""
    n_distinct = len(np.unique(matrix, axis=0))
    k_fit = min(k, n_distinct)
    clust = kmeans(matrix, k_fit, init=init, max_iter=max_iter, seed=stable_seed(seed, strategy, "kmeans"))
    idxs = nearest_to_centers(matrix, clust.centers)
    ids = [unlabeled[i] for i in idxs]
    if len(ids) < k:
        taken = set(ids)
        ids.extend(i for i in unlabeled if i not in taken)
        ids = ids[:k]
    return QueryBatch(strategy=strategy, iteration=iteration, ids=ids, selection_time=time.perf_counter() - t0)


def sample_alps(
    unlabeled: list[str],
    nll_by_id: Mapping[str, NllVector],
    k: int,
    p: float = 0.15,
    seed: int = 0,
    *,
    iteration: int = 1,
    init: str = "random",
    max_iter: int = 10,
) -> QueryBatch:
    """Cluster surprisal embeddings of the pool; query nearest-to-center.

    Per-sentence subsampling seeds derive from (seed, id), so the batch is
    a function of the remaining pool and the NLL provider alone. No
    classifier is consulted.
    """
    t0 = time.perf_counter()
    k = _clamp_k(k, unlabeled, "alps")
    matrix = np.stack(
        [surprisal_embedding(nll_by_id[i], p, per_sentence_seed(seed, i)).values for i in unlabeled]
    )
    return _cluster_select("alps", iteration, unlabeled, matrix, k, seed, init, max_iter, t0)


def sample_emb_km(
    unlabeled: list[str],
    feats_by_id: Mapping[str, FeatureVector],
    k: int,
    seed: int = 0,
    *,
    iteration: int = 1,
    init: str = "random",
    max_iter: int = 10,
) -> QueryBatch:
    """Same pipeline as sample_alps over pretrained sentence features."""
    t0 = time.perf_counter()
    k = _clamp_k(k, unlabeled, "emb-km")
    matrix = np.stack([feats_by_id[i].values for i in unlabeled])
    return _cluster_select("emb-km", iteration, unlabeled, matrix, k, seed, init, max_iter, t0)


def sample_ft_emb_km(
    unlabeled: list[str],
    model_prev: ClassifierModel,
    feats_by_id: Mapping[str, FeatureVector],
    k: int,
    seed: int = 0,
    *,
    iteration: int = 1,
    init: str = "random",
    max_iter: int = 10,
) -> QueryBatch:
    """Cluster hidden activations of the previously fine-tuned model."""
    t0 = time.perf_counter()
    k = _clamp_k(k, unlabeled, "ft-emb-km")
    feats = np.stack([feats_by_id[i].values for i in unlabeled])
    hidden = model_prev.hidden(feats)
    matrix = np.stack([l2_normalize(h) for h in hidden])
    return _cluster_select("ft-emb-km", iteration, unlabeled, matrix, k, seed, init, max_iter, t0)


def sample_entropy(
    unlabeled: list[str],
    model: ClassifierModel,
    feats_by_id: Mapping[str, FeatureVector],
    k: int,
    *,
    iteration: int = 1,
) -> QueryBatch:
    """Top-k by predictive entropy; ties go to the lowest id. No RNG."""
    t0 = time.perf_counter()
    k = _clamp_k(k, unlabeled, "entropy")
    feats = np.stack([feats_by_id[i].values for i in unlabeled])
    ents = predictive_entropy(predict_proba(model, feats))
    ranked = sorted(zip(unlabeled, ents), key=lambda pair: (-pair[1], pair[0]))
    ids = [rid for rid, _ in ranked[:k]]
    return QueryBatch(strategy="entropy", iteration=iteration, ids=ids, selection_time=time.perf_counter() - t0)


def sample_random(
    unlabeled: list[str],
    k: int,
    seed: int = 0,
    *,
    iteration: int = 1,
) -> QueryBatch:
    """Uniform without replacement, deterministic given the seed."""
    t0 = time.perf_counter()
    k = _clamp_k(k, unlabeled, "random")
    rng = np.random.default_rng(stable_seed(seed, "random"))
    order = rng.permutation(len(unlabeled))
    ids = [unlabeled[i] for i in order[:k]]
    return QueryBatch(strategy="random", iteration=iteration, ids=ids, selection_time=time.perf_counter() - t0)


def sample_badge(
    unlabeled: list[str],
    model: ClassifierModel,
    feats_by_id: Mapping[str, FeatureVector],
    k: int,
    seed: int = 0,
    *,
    iteration: int = 1,
) -> QueryBatch:
    """k-means++ over last-layer loss gradients; the chosen points are the queries.

    When every gradient embedding is zero (fully confident model) the
    squared-distance weights vanish and selection degenerates to uniform
    sampling, handled inside the seeding routine.
    """
    t0 = time.perf_counter()
    k = _clamp_k(k, unlabeled, "badge")
    feats = np.stack([feats_by_id[i].values for i in unlabeled])
    conf = predict_proba(model, feats)
    hidden = model.hidden(feats)
    scales = conf.copy()
    scales[np.arange(len(unlabeled)), np.argmax(conf, axis=1)] -= 1.0
    grads = (scales[:, :, None] * hidden[:, None, :]).reshape(len(unlabeled), -1)
    idxs = kmeanspp_indices(grads, k, seed=stable_seed(seed, "badge"))
    ids = [unlabeled[i] for i in idxs]
    return QueryBatch(strategy="badge", iteration=iteration, ids=ids, selection_time=time.perf_counter() - t0)
