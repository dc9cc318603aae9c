"""One-hidden-layer softmax classifier with decoupled-weight-decay Adam.

The model is the smallest one that exposes a nontrivial hidden
representation for gradient embeddings and a fine-tune-dependent hidden
space for clustering: ``softmax(V . tanh(W . x + b))``. Training always
restarts from the stored base parameters, never from a previous fit, so a
model trained at any iteration is a pure function of (base, labeled data,
config).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

ADAM_EPS = 1e-8

_PARAM_NAMES = ("w_hidden", "b_hidden", "w_out", "b_out")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.01
    epochs: int = 3
    batch_size: int = 32
    seed: int = 0
    linear_decay: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must be in [0, 1)")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class ClassifierModel:
    w_hidden: np.ndarray  # (d_in, d_h)
    b_hidden: np.ndarray  # (d_h,)
    w_out: np.ndarray  # (d_h, C)
    b_out: np.ndarray  # (C,)
    base_snapshot: dict[str, np.ndarray] = field(repr=False, default=None)

    @property
    def d_in(self) -> int:
        return self.w_hidden.shape[0]

    @property
    def d_h(self) -> int:
        return self.w_hidden.shape[1]

    @property
    def n_classes(self) -> int:
        return self.w_out.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _PARAM_NAMES}

    def hidden(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.d_in:
            raise ValueError(f"input dimension {x.shape[-1]} != d_in {self.d_in}")
        return np.tanh(x @ self.w_hidden + self.b_hidden)

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self.hidden(x) @ self.w_out + self.b_out


def init_model(d_in: int, d_h: int, n_classes: int, seed: int = 0) -> ClassifierModel:
    """Deterministic uniform init scaled by 1/sqrt(fan_in); biases zero."""
    if min(d_in, d_h, n_classes) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    w_hidden = rng.uniform(-1.0, 1.0, size=(d_in, d_h)) / math.sqrt(d_in)
    w_out = rng.uniform(-1.0, 1.0, size=(d_h, n_classes)) / math.sqrt(d_h)
    model = ClassifierModel(
        w_hidden=w_hidden,
        b_hidden=np.zeros(d_h),
        w_out=w_out,
        b_out=np.zeros(n_classes),
    )
    model.base_snapshot = {k: v.copy() for k, v in model.params().items()}
    return model


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def predict_proba(model: ClassifierModel, x: np.ndarray) -> np.ndarray:
    """Class-confidence simplex for one input (d_in,) or a batch (n, d_in)."""
    return _softmax(model.logits(x))


def predictive_entropy(proba: np.ndarray) -> float | np.ndarray:
    """Shannon entropy in nats, with 0 * log(1/0) taken as 0."""
    p = np.asarray(proba, dtype=np.float64)
    terms = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    ent = -terms.sum(axis=-1) + 0.0  # canonicalize -0.0
    return float(ent) if p.ndim == 1 else ent


def cross_entropy_loss(model: ClassifierModel, x: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of the gold labels; used by the trainer and tests."""
    logits = model.logits(np.atleast_2d(x))
    y = np.atleast_1d(y)
    shifted = logits - np.max(logits, axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(log_z - shifted[np.arange(len(y)), y]))


def _gradients(
    params: dict[str, np.ndarray], x: np.ndarray, y: np.ndarray
) -> dict[str, np.ndarray]:
    h = np.tanh(x @ params["w_hidden"] + params["b_hidden"])
    probs = _softmax(h @ params["w_out"] + params["b_out"])
    dz = probs
    dz[np.arange(len(y)), y] -= 1.0
    dz /= len(y)
    dh = dz @ params["w_out"].T
    dpre = dh * (1.0 - h * h)
    return {
        "w_hidden": x.T @ dpre,
        "b_hidden": dpre.sum(axis=0),
        "w_out": h.T @ dz,
        "b_out": dz.sum(axis=0),
    }


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    m: dict[str, np.ndarray],
    v: dict[str, np.ndarray],
    step: int,
    lr_t: float,
    cfg: TrainConfig,
) -> None:
    """One in-place Adam update with decoupled weight decay.

    param -= lr_t * (m_hat / (sqrt(v_hat) + eps) + weight_decay * param),
    where m_hat, v_hat are the bias-corrected first and second moments.
    ``step`` counts from 1.
    """
    bc1 = 1.0 - cfg.beta1 ** step
    bc2 = 1.0 - cfg.beta2 ** step
    for name, g in grads.items():
        m[name] = cfg.beta1 * m[name] + (1.0 - cfg.beta1) * g
        v[name] = cfg.beta2 * v[name] + (1.0 - cfg.beta2) * g * g
        m_hat = m[name] / bc1
        v_hat = v[name] / bc2
        params[name] -= lr_t * (
            m_hat / (np.sqrt(v_hat) + ADAM_EPS) + cfg.weight_decay * params[name]
        )


def train(
    base: ClassifierModel,
    x: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
) -> ClassifierModel:
    """Mini-batch cross-entropy training from the base snapshot.

    The Adam update keeps weight decay out of the moment estimates:
    ``param -= lr_t * (m_hat / (sqrt(v_hat) + eps) + wd * param)`` with
    bias-corrected moments and, when enabled, lr_t decaying linearly to
    zero over the total step count. Shuffling is driven by cfg.seed only.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("x must be (n, d_in) with one label per row")
    if len(x) == 0:
        raise ValueError("labeled set is empty")
    if y.min() < 0 or y.max() >= base.n_classes:
        raise ValueError(f"label {int(y.max())} outside 0..{base.n_classes - 1}")

    params = {k: v.copy() for k, v in base.base_snapshot.items()}
    if cfg.epochs > 0:
        n = len(x)
        steps_per_epoch = math.ceil(n / cfg.batch_size)
        total_steps = cfg.epochs * steps_per_epoch
        m = {k: np.zeros_like(v) for k, v in params.items()}
        v = {k: np.zeros_like(p) for k, p in params.items()}
        rng = np.random.default_rng(cfg.seed)
        step = 0
        for _ in range(cfg.epochs):
            perm = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                idx = perm[start:start + cfg.batch_size]
                grads = _gradients(params, x[idx], y[idx])
                step += 1
                lr_t = cfg.learning_rate
                if cfg.linear_decay:
                    lr_t *= (total_steps - (step - 1)) / total_steps
                adamw_step(params, grads, m, v, step, lr_t, cfg)
    return ClassifierModel(
        w_hidden=params["w_hidden"],
        b_hidden=params["b_hidden"],
        w_out=params["w_out"],
        b_out=params["b_out"],
        base_snapshot=base.base_snapshot,
    )


def save_model(model: ClassifierModel, path: str) -> None:
    """JSON checkpoint; float repr round-trips bit-exactly."""
    blob = {
        "d_in": model.d_in,
        "d_h": model.d_h,
        "n_classes": model.n_classes,
        "params": {k: v.ravel().tolist() for k, v in model.params().items()},
        "base": {k: v.ravel().tolist() for k, v in model.base_snapshot.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh)


def load_model(path: str) -> ClassifierModel:
    with open(path, encoding="utf-8") as fh:
        blob = json.load(fh)
    d_in, d_h, n_c = blob["d_in"], blob["d_h"], blob["n_classes"]
    shapes = {
        "w_hidden": (d_in, d_h),
        "b_hidden": (d_h,),
        "w_out": (d_h, n_c),
        "b_out": (n_c,),
    }

    def unpack(group: dict[str, list[float]]) -> dict[str, np.ndarray]:
        return {k: np.asarray(group[k], dtype=np.float64).reshape(shapes[k]) for k in _PARAM_NAMES}

    params = unpack(blob["params"])
    model = ClassifierModel(**params)
    model.base_snapshot = unpack(blob["base"])
    return model
