"""Post-hoc batch diagnostics and multi-seed aggregation.

Diversity of a sampled set is the Jaccard similarity between its token
types and the token types of the rest of the pool: a representative batch
shares most of the pool's vocabulary. Uncertainty of a set is the mean
predictive entropy under the classifier trained on the full pool, whose
confidence estimates are stable enough to trust.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .classifier import ClassifierModel, predict_proba, predictive_entropy
from .clustering import kmeans, silhouette
from .corpus import TokenSeq, Vocab
from .embeddings import FeatureVector
from .results import RAW_COLUMNS, AlRunResult
from .util import fmt9


def _token_types(ids: Iterable[str], seqs: Mapping[str, TokenSeq], exclude: frozenset[int]) -> set[int]:
    types: set[int] = set()
    for rid in ids:
        s = seqs[rid]
        types.update(t for t in s.tokens[: s.real_len] if t not in exclude)
    return types


def diversity_jaccard(
    sampled_ids: Sequence[str],
    pool_ids: Sequence[str],
    seqs: Mapping[str, TokenSeq],
    vocab: Vocab,
) -> float:
    """Jaccard similarity of token-type sets: sampled vs rest of the pool.

    Special token ids (padding, unknown, boundary) are excluded; they occur
    everywhere and would inflate the overlap.
    """
    sampled = set(sampled_ids)
    rest = [i for i in pool_ids if i not in sampled]
    if not sampled:
        raise ValueError("sampled set is empty")
    if not rest:
        raise ValueError("sampled set covers the whole pool; the complement is empty")
    if not sampled.issubset(pool_ids):
        raise ValueError("sampled ids must be a subset of the pool")
    v_d = _token_types(sampled, seqs, vocab.special_ids)
    v_rest = _token_types(rest, seqs, vocab.special_ids)
    union = v_d | v_rest
    if not union:
        return 1.0  # both type sets empty, hence identical
    return len(v_d & v_rest) / len(union)


def uncertainty_avg_entropy(
    sampled_ids: Sequence[str],
    model_star: ClassifierModel,
    feats_by_id: Mapping[str, FeatureVector],
) -> float:
    """Mean predictive entropy of the batch under the full-data classifier."""
    if not sampled_ids:
        raise ValueError("batch is empty")
    feats = np.stack([feats_by_id[i].values for i in sampled_ids])
    ents = predictive_entropy(predict_proba(model_star, feats))
    return float(np.mean(ents))


@dataclass(frozen=True)
class BatchDiagnostics:
    strategy: str
    iteration: int
    g_d: float
    g_u: float
    batch_size: int


@dataclass
class ClusterReport:
    surprisal_silhouette: float
    feature_silhouette: float
    surprisal_embeddings: np.ndarray
    feature_embeddings: np.ndarray


def cluster_report(
    surprisal_matrix: np.ndarray,
    feature_matrix: np.ndarray,
    k: int,
    seed: int,
    init: str = "random",
    max_iter: int = 10,
) -> ClusterReport:
    """Cluster both embedding families with identical (k, seed); report silhouettes."""
    reports = []
    for matrix in (surprisal_matrix, feature_matrix):
        clust = kmeans(np.asarray(matrix, dtype=np.float64), k, init=init, max_iter=max_iter, seed=seed)
        reports.append(silhouette(matrix, clust.assignment))
    return ClusterReport(
        surprisal_silhouette=reports[0],
        feature_silhouette=reports[1],
        surprisal_embeddings=np.asarray(surprisal_matrix, dtype=np.float64),
        feature_embeddings=np.asarray(feature_matrix, dtype=np.float64),
    )


def _std0(values: list[float]) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def _mean_opt(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


AGGREGATE_COLUMNS = (
    "strategy",
    "iteration",
    "n_labeled",
    "n_seeds",
    "accuracy_mean",
    "accuracy_std",
    "accuracy_min",
    "accuracy_max",
    "micro_f1_mean",
    "micro_f1_std",
    "g_d_mean",
    "g_u_mean",
    "select_ms_mean",
    "train_ms_mean",
)


def aggregate(results: list[AlRunResult]) -> list[dict]:
    """Per (strategy, iteration) summary over seeds: mean, sample std, min, max.

    A single run aggregates with std 0.
    """
    grouped: dict[tuple[str, int], list] = {}
    for res in results:
        for rec in res.records:
            grouped.setdefault((res.strategy, rec.iteration), []).append(rec)
    rows = []
    for (strategy, iteration) in sorted(grouped):
        recs = grouped[(strategy, iteration)]
        accs = [r.accuracy for r in recs]
        f1s = [r.micro_f1 for r in recs]
        rows.append({
            "strategy": strategy,
            "iteration": iteration,
            "n_labeled": recs[0].n_labeled,
            "n_seeds": len(recs),
            "accuracy_mean": float(np.mean(accs)),
            "accuracy_std": _std0(accs),
            "accuracy_min": float(np.min(accs)),
            "accuracy_max": float(np.max(accs)),
            "micro_f1_mean": float(np.mean(f1s)),
            "micro_f1_std": _std0(f1s),
            "g_d_mean": _mean_opt([r.g_d for r in recs]),
            "g_u_mean": _mean_opt([r.g_u for r in recs]),
            "select_ms_mean": float(np.mean([r.select_ms for r in recs])),
            "train_ms_mean": float(np.mean([r.train_ms for r in recs])),
        })
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return fmt9(value)
    return str(value)


def write_raw_csv(results: list[AlRunResult], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RAW_COLUMNS)
        for res in sorted(results, key=lambda r: (r.strategy, r.seed)):
            for rec in res.records:
                writer.writerow([
                    res.strategy,
                    res.seed,
                    rec.iteration,
                    rec.n_labeled,
                    _cell(rec.accuracy),
                    _cell(rec.micro_f1),
                    _cell(rec.g_d),
                    _cell(rec.g_u),
                    _cell(rec.select_ms),
                    _cell(rec.train_ms),
                ])


def write_aggregate_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in AGGREGATE_COLUMNS])


def write_aggregate_json(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2)


def write_diagnostics_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "iteration", "g_d", "g_u"])
        for row in rows:
            writer.writerow([
                row["strategy"],
                row["iteration"],
                _cell(row["g_d_mean"]),
                _cell(row["g_u_mean"]),
            ])


def summary_table(rows: list[dict]) -> str:
    """Plain-text mean +/- std accuracy per strategy per iteration."""
    strategies = sorted({r["strategy"] for r in rows})
    iterations = sorted({r["iteration"] for r in rows})
    by_key = {(r["strategy"], r["iteration"]): r for r in rows}
    width = max(12, max(len(s) for s in strategies) + 2)
    header = "iteration".ljust(12) + "".join(s.ljust(width + 8) for s in strategies)
    lines = [header, "-" * len(header)]
    for it in iterations:
        cells = []
        for s in strategies:
            row = by_key.get((s, it))
            if row is None:
                cells.append("-".ljust(width + 8))
            else:
                cells.append(f"{row['accuracy_mean']:.4f} +/- {row['accuracy_std']:.4f}".ljust(width + 8))
        lines.append(str(it).ljust(12) + "".join(cells))
    return "\n".join(lines)
