"""Cold-start active learning for sentence classification.

Selects maximally informative unlabeled sentences by clustering
self-supervised surprisal embeddings, and benchmarks that against
uncertainty- and diversity-based baselines in a seeded simulation harness.
"""

__version__ = "0.1.0"

from .analysis import (
    aggregate,
    cluster_report,
    diversity_jaccard,
    uncertainty_avg_entropy,
)
from .classifier import (
    ClassifierModel,
    TrainConfig,
    init_model,
    predict_proba,
    predictive_entropy,
    train,
)
from .clustering import Clustering, kmeans, kmeanspp_init, nearest_to_centers, silhouette
from .corpus import (
    Dataset,
    Pool,
    Record,
    TokenSeq,
    Vocab,
    build_vocab,
    load_dataset,
    split_pool,
    tokenize,
)
from .embeddings import (
    Featurizer,
    FeaturizerConfig,
    FeatureVector,
    GradientEmbedding,
    SurprisalEmbedding,
    feature_embedding,
    gradient_embedding,
    hidden_embedding,
    surprisal_embedding,
)
from .results import AlRunResult, IterationRecord
from .simulation import (
    AlRunConfig,
    SimEnv,
    prepare_env,
    run_al,
    run_single_shot,
    train_full_ceiling,
)
from .strategies import (
    COLD_START,
    STRATEGY_IDS,
    WARM_START,
    QueryBatch,
    sample_alps,
    sample_badge,
    sample_emb_km,
    sample_entropy,
    sample_ft_emb_km,
    sample_random,
)
from .surprisal_lm import NgramLm, NllVector, load_external_nll, save_nll_file, token_nll, train_lm
