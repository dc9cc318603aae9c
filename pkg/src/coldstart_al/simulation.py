"""The active-learning simulation loop and its single-shot variant.

One run fixes (strategy, seed) and iterates: select a batch from the
unlabeled pool, reveal its gold labels, retrain the classifier from the
base parameters on everything labeled so far, evaluate on the held-out
test set, and record diagnostics. Warm-start strategies consult the model
from the previous iteration; at iteration 1 they fall back to random
(entropy, badge) or to cold feature clustering (ft-emb-km).
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import diversity_jaccard, uncertainty_avg_entropy
from .classifier import ClassifierModel, TrainConfig, init_model, predict_proba, train
from .corpus import (
    Dataset,
    Pool,
    TokenSeq,
    Vocab,
    build_vocab,
    load_dataset,
    split_pool,
    tokenize_records,
)
from .embeddings import Featurizer, FeaturizerConfig, FeatureVector, load_external_embeddings
from .results import AlRunResult, IterationRecord
from .strategies import (
    COLD_START,
    STRATEGY_IDS,
    QueryBatch,
    sample_alps,
    sample_badge,
    sample_emb_km,
    sample_entropy,
    sample_ft_emb_km,
    sample_random,
)
from .surprisal_lm import NllVector, load_external_nll, token_nll, train_lm
from .util import stable_seed


def accuracy_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return float(np.mean(y_true == y_pred))


def micro_f1_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Micro-averaged F1 over all classes.

    For single-label classification with every class counted this equals
    accuracy; both are reported side by side anyway.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    classes = np.unique(np.concatenate([y_true, y_pred]))
    tp = sum(int(np.sum((y_pred == c) & (y_true == c))) for c in classes)
    fp = sum(int(np.sum((y_pred == c) & (y_true != c))) for c in classes)
    fn = sum(int(np.sum((y_pred != c) & (y_true == c))) for c in classes)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


@dataclass
class AlRunConfig:
    """Everything one experiment needs; defaults follow the benchmark setup."""

    data_path: str = ""
    data_format: str = "jsonl"
    test_path: str | None = None  # pre-split test set; otherwise stratified split
    strategies: list[str] = field(default_factory=lambda: list(STRATEGY_IDS))
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    k: int = 100
    iterations: int = 10
    p: float = 0.15
    max_len: int = 128
    min_count: int = 1
    test_fraction: float = 0.2
    split_seed: int = 0
    provider: str = "ngram"  # or "external"
    nll_path: str | None = None
    embeddings_path: str | None = None
    feature_dim: int = 512
    hidden_dim: int = 32
    lm_order: int = 3
    lm_alpha: float = 0.1
    lm_lambda: float = 0.5
    kmeans_init: str = "random"
    kmeans_iters: int = 10
    diagnostics: bool = True
    mode: str = "iterative"  # or "single"
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> None:
        if self.k < 1 or self.iterations < 1:
            raise ValueError("k and iterations must be >= 1")
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must be in (0, 1]")
        unknown = [s for s in self.strategies if s not in STRATEGY_IDS]
        if unknown:
            raise ValueError(
                f"unknown strategy {unknown[0]!r}; valid ids: {', '.join(STRATEGY_IDS)}"
            )
        if self.provider not in ("ngram", "external"):
            raise ValueError("provider must be 'ngram' or 'external'")
        if self.provider == "external" and not self.nll_path:
            raise ValueError("provider 'external' requires nll_path")
        if self.mode not in ("iterative", "single"):
            raise ValueError("mode must be 'iterative' or 'single'")
        if self.mode == "single":
            warm = [s for s in self.strategies if s not in COLD_START]
            if warm:
                raise ValueError(
                    f"single-shot mode is undefined for warm-start strategy {warm[0]!r}; "
                    f"cold-start ids: {', '.join(COLD_START)}"
                )
        if not self.seeds:
            raise ValueError("at least one seed is required")


@dataclass
class SimEnv:
    """Data prepared once and shared by every (strategy, seed) run."""

    dataset: Dataset
    vocab: Vocab
    seqs: dict[str, TokenSeq]
    pool0: Pool
    gold: dict[str, int]
    nll_by_id: dict[str, NllVector]
    featurizer: Featurizer
    feats_by_id: dict[str, FeatureVector]
    x_test: np.ndarray
    y_test: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.dataset.num_classes


def _merge_presplit(train: Dataset, test: Dataset) -> tuple[Dataset, Pool]:
    """Join a pre-split pair under the training file's label space."""
    label_to_id = {name: i for i, name in enumerate(train.label_names)}
    unlabeled_train = [r.id for r in train.records if r.label is None]
    if unlabeled_train:
        raise ValueError(f"training record {unlabeled_train[0]!r} has no gold label")
    remapped = []
    for r in test.records:
        if r.label_name is None or r.label_name not in label_to_id:
            raise ValueError(f"test record {r.id!r} has label {r.label_name!r} absent from the training set")
        remapped.append(replace(r, label=label_to_id[r.label_name]))
    dup = {r.id for r in train.records} & {r.id for r in remapped}
    if dup:
        raise ValueError(f"ids shared between train and test files (first: {sorted(dup)[0]!r})")
    merged = Dataset(records=train.records + remapped, label_names=train.label_names)
    pool = Pool(
        unlabeled=[r.id for r in train.records],
        labeled={},
        test=[r.id for r in remapped],
    )
    return merged, pool


def prepare_env(cfg: AlRunConfig) -> SimEnv:
    cfg.validate()
    dataset = load_dataset(cfg.data_path, cfg.data_format)
    if cfg.test_path:
        dataset, pool0 = _merge_presplit(dataset, load_dataset(cfg.test_path, cfg.data_format))
    else:
        pool0 = split_pool(dataset.records, cfg.test_fraction, cfg.split_seed)
    train_records = [r for r in dataset.records if r.id not in set(pool0.test)]
    vocab = build_vocab(train_records, cfg.min_count)
    seqs = tokenize_records(dataset, vocab, cfg.max_len)
    gold = {r.id: r.label for r in dataset.records}

    if cfg.provider == "ngram":
        lm = train_lm(
            (seqs[i] for i in pool0.unlabeled),
            vocab,
            order=cfg.lm_order,
            alpha=cfg.lm_alpha,
            lam=cfg.lm_lambda,
        )
        nll_by_id = {i: token_nll(lm, seqs[i]) for i in pool0.unlabeled}
    else:
        loaded = load_external_nll(cfg.nll_path, max_len=cfg.max_len, known_ids=seqs)
        missing = [i for i in pool0.unlabeled if i not in loaded]
        if missing:
            raise ValueError(f"external NLL file lacks {len(missing)} pool ids (first: {missing[0]!r})")
        nll_by_id = {i: loaded[i] for i in pool0.unlabeled}

    if cfg.embeddings_path:
        featurizer = Featurizer(external=load_external_embeddings(cfg.embeddings_path))
    else:
        featurizer = Featurizer(FeaturizerConfig(dim=cfg.feature_dim))
    feats_by_id = {i: featurizer(seqs[i]) for i in pool0.unlabeled}
    x_test = np.stack([featurizer(seqs[i]).values for i in pool0.test])
    y_test = np.asarray([gold[i] for i in pool0.test], dtype=np.int64)
    return SimEnv(
        dataset=dataset,
        vocab=vocab,
        seqs=seqs,
        pool0=pool0,
        gold=gold,
        nll_by_id=nll_by_id,
        featurizer=featurizer,
        feats_by_id=feats_by_id,
        x_test=x_test,
        y_test=y_test,
    )


def _base_model(cfg: AlRunConfig, env: SimEnv, seed: int) -> ClassifierModel:
    # same base parameters for every strategy at a given seed, for paired comparison
    return init_model(env.featurizer.dim, cfg.hidden_dim, env.n_classes, seed=stable_seed(seed, "init"))


def _labeled_arrays(env: SimEnv, pool: Pool) -> tuple[np.ndarray, np.ndarray]:
    # canonical id order: the trained model depends on the labeled SET, not
    # on the order queries arrived in
    ids = sorted(pool.labeled)
    x = np.stack([env.feats_by_id[i].values for i in ids])
    y = np.asarray([pool.labeled[i] for i in ids], dtype=np.int64)
    return x, y


def _evaluate(model: ClassifierModel, env: SimEnv) -> tuple[float, float]:
    preds = np.argmax(predict_proba(model, env.x_test), axis=1)
    return accuracy_score(env.y_test, preds), micro_f1_score(env.y_test, preds)


def train_full_ceiling(
    cfg: AlRunConfig, env: SimEnv, seed: int
) -> tuple[ClassifierModel, float, float]:
    """Train from the base parameters on the entire training pool."""
    base = _base_model(cfg, env, seed)
    ids = sorted(env.pool0.unlabeled)
    x = np.stack([env.feats_by_id[i].values for i in ids])
    y = np.asarray([env.gold[i] for i in ids], dtype=np.int64)
    model = train(base, x, y, replace(cfg.train, seed=stable_seed(seed, "ceiling")))
    acc, f1 = _evaluate(model, env)
    return model, acc, f1


def _select(
    cfg: AlRunConfig,
    env: SimEnv,
    strategy: str,
    pool: Pool,
    k: int,
    seed: int,
    iteration: int,
    model_prev: ClassifierModel | None,
) -> QueryBatch:
    cold_fallback = iteration == 1 and strategy not in COLD_START
    if strategy == "alps":
        return sample_alps(
            pool.unlabeled, env.nll_by_id, k, cfg.p, seed,
            iteration=iteration, init=cfg.kmeans_init, max_iter=cfg.kmeans_iters,
        )
    if strategy == "random":
        return sample_random(pool.unlabeled, k, stable_seed(seed, "it", iteration), iteration=iteration)
    if strategy == "emb-km":
        return sample_emb_km(
            pool.unlabeled, env.feats_by_id, k, seed,
            iteration=iteration, init=cfg.kmeans_init, max_iter=cfg.kmeans_iters,
        )
    if strategy == "entropy":
        if cold_fallback:
            return sample_random(pool.unlabeled, k, stable_seed(seed, "it", iteration), iteration=iteration)
        return sample_entropy(pool.unlabeled, model_prev, env.feats_by_id, k, iteration=iteration)
    if strategy == "badge":
        if cold_fallback:
            return sample_random(pool.unlabeled, k, stable_seed(seed, "it", iteration), iteration=iteration)
        return sample_badge(
            pool.unlabeled, model_prev, env.feats_by_id, k,
            stable_seed(seed, "it", iteration), iteration=iteration,
        )
    if strategy == "ft-emb-km":
        if cold_fallback:
            return sample_emb_km(
                pool.unlabeled, env.feats_by_id, k, seed,
                iteration=iteration, init=cfg.kmeans_init, max_iter=cfg.kmeans_iters,
            )
        return sample_ft_emb_km(
            pool.unlabeled, model_prev, env.feats_by_id, k, seed,
            iteration=iteration, init=cfg.kmeans_init, max_iter=cfg.kmeans_iters,
        )
    raise ValueError(f"unknown strategy {strategy!r}; valid ids: {', '.join(STRATEGY_IDS)}")


def run_al(cfg: AlRunConfig, env: SimEnv, strategy: str, seed: int) -> AlRunResult:
    """One full simulation for a (strategy, seed) pair; deterministic per seed."""
    if strategy not in STRATEGY_IDS:
        raise ValueError(f"unknown strategy {strategy!r}; valid ids: {', '.join(STRATEGY_IDS)}")
    budget = cfg.k * cfg.iterations
    if budget > len(env.pool0.unlabeled):
        warnings.warn(
            f"budget {budget} exceeds pool size {len(env.pool0.unlabeled)}; run will stop early",
            stacklevel=2,
        )
    pool = Pool(unlabeled=list(env.pool0.unlabeled), labeled={}, test=list(env.pool0.test))
    base = _base_model(cfg, env, seed)
    model_star = None
    ceiling_acc = ceiling_f1 = None
    if cfg.diagnostics:
        model_star, ceiling_acc, ceiling_f1 = train_full_ceiling(cfg, env, seed)
    pool_all_ids = list(env.pool0.unlabeled)

    records: list[IterationRecord] = []
    model_prev: ClassifierModel | None = None
    partial = False
    for t in range(1, cfg.iterations + 1):
        if not pool.unlabeled:
            partial = True
            break
        if cfg.k > len(pool.unlabeled):
            partial = True
        batch = _select(cfg, env, strategy, pool, cfg.k, seed, t, model_prev)
        pool.mark_labeled(batch.ids, [env.gold[i] for i in batch.ids])

        x_l, y_l = _labeled_arrays(env, pool)
        t0 = time.perf_counter()
        model_prev = train(base, x_l, y_l, replace(cfg.train, seed=stable_seed(seed, "train", t)))
        train_s = time.perf_counter() - t0
        acc, f1 = _evaluate(model_prev, env)

        g_d = g_u = None
        if cfg.diagnostics and pool.unlabeled:
            labeled_ids = list(pool.labeled)
            g_d = diversity_jaccard(labeled_ids, pool_all_ids, env.seqs, env.vocab)
            g_u = uncertainty_avg_entropy(labeled_ids, model_star, env.feats_by_id)

        records.append(IterationRecord(
            iteration=t,
            queried_ids=list(batch.ids),
            n_labeled=len(pool.labeled),
            accuracy=acc,
            micro_f1=f1,
            g_d=g_d,
            g_u=g_u,
            select_ms=batch.selection_time * 1e3,
            train_ms=train_s * 1e3,
        ))
    return AlRunResult(
        strategy=strategy,
        seed=seed,
        records=records,
        ceiling_accuracy=ceiling_acc,
        ceiling_micro_f1=ceiling_f1,
        partial=partial,
    )


def run_single_shot(
    cfg: AlRunConfig, env: SimEnv, strategy: str, seed: int, k_total: int | None = None
) -> AlRunResult:
    """Query everything in one batch, then train and evaluate once.

    Only defined for cold-start strategies: there is no trained model to
    warm-start from before the single selection happens.
    """
    if strategy not in COLD_START:
        raise ValueError(
            f"single-shot sampling is undefined for warm-start strategy {strategy!r}; "
            f"cold-start ids: {', '.join(COLD_START)}"
        )
    k_total = cfg.k * cfg.iterations if k_total is None else k_total
    pool = Pool(unlabeled=list(env.pool0.unlabeled), labeled={}, test=list(env.pool0.test))
    base = _base_model(cfg, env, seed)
    model_star = None
    ceiling_acc = ceiling_f1 = None
    if cfg.diagnostics:
        model_star, ceiling_acc, ceiling_f1 = train_full_ceiling(cfg, env, seed)

    batch = _select(cfg, env, strategy, pool, k_total, seed, 1, None)
    pool.mark_labeled(batch.ids, [env.gold[i] for i in batch.ids])
    x_l, y_l = _labeled_arrays(env, pool)
    t0 = time.perf_counter()
    model = train(base, x_l, y_l, replace(cfg.train, seed=stable_seed(seed, "train", 1)))
    train_s = time.perf_counter() - t0
    acc, f1 = _evaluate(model, env)
    g_d = g_u = None
    if cfg.diagnostics and pool.unlabeled:
        labeled_ids = list(pool.labeled)
        g_d = diversity_jaccard(labeled_ids, list(env.pool0.unlabeled), env.seqs, env.vocab)
        g_u = uncertainty_avg_entropy(labeled_ids, model_star, env.feats_by_id)
    record = IterationRecord(
        iteration=1,
        queried_ids=list(batch.ids),
        n_labeled=len(pool.labeled),
        accuracy=acc,
        micro_f1=f1,
        g_d=g_d,
        g_u=g_u,
        select_ms=batch.selection_time * 1e3,
        train_ms=train_s * 1e3,
    )
    return AlRunResult(
        strategy=strategy,
        seed=seed,
        records=[record],
        ceiling_accuracy=ceiling_acc,
        ceiling_micro_f1=ceiling_f1,
        partial=len(batch.ids) < k_total,
    )
