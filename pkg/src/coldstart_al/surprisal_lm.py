"""Per-token negative log-likelihoods from a bidirectional n-gram model.

The provider is deliberately simple: an additive-smoothed n-gram pair, one
reading left-to-right and one right-to-left, blended with weight ``lam``.
Both-side context matters because a token's predictability depends on what
follows it as much as what precedes it. Real masked-LM scores can be
substituted through the JSONL interchange format handled by
:func:`load_external_nll`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .corpus import TokenSeq, Vocab
from .util import DataFormatError


@dataclass(frozen=True)
class NllVector:
    """Per-position negative log-likelihoods for one sentence.

    Entries at padding positions (index >= real_len) are zero; all entries
    are finite and nonnegative.
    """

    id: str
    nll: np.ndarray
    real_len: int

    def validate(self, max_len: int | None = None) -> None:
        if max_len is not None and len(self.nll) != max_len:
            raise DataFormatError(
                f"nll vector for {self.id!r} has length {len(self.nll)}, expected {max_len}"
            )
        if not (0 <= self.real_len <= len(self.nll)):
            raise DataFormatError(f"nll vector for {self.id!r}: real_len out of range")
        if not np.all(np.isfinite(self.nll)):
            raise DataFormatError(f"nll vector for {self.id!r} contains non-finite entries")
        if np.any(self.nll < 0):
            raise DataFormatError(f"nll vector for {self.id!r} contains negative entries")
        if np.any(self.nll[self.real_len:] != 0.0):
            raise DataFormatError(f"nll vector for {self.id!r}: padding positions must be zero")


class NgramLm:
    """Interpolated forward/backward n-gram model with additive smoothing.

    For every context the predictive distribution is
    ``(count + alpha) / (total + alpha * vocab_size)``, which sums to one and
    is strictly positive for alpha > 0.
    """

    def __init__(self, order: int, alpha: float, lam: float, vocab: Vocab):
        if order < 1:
            raise ValueError("order must be >= 1")
        if alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lam must be in [0, 1]")
        self.order = order
        self.alpha = alpha
        self.lam = lam
        self.vocab_size = len(vocab)
        self.boundary_id = vocab.boundary_id
        self._fwd: dict[tuple[int, ...], dict[int, int]] = {}
        self._fwd_total: dict[tuple[int, ...], int] = {}
        self._bwd: dict[tuple[int, ...], dict[int, int]] = {}
        self._bwd_total: dict[tuple[int, ...], int] = {}

    def _contexts(self, tokens: tuple[int, ...], real_len: int, i: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        m = self.order - 1
        left = [self.boundary_id] * max(0, m - i) + list(tokens[max(0, i - m):i])
        right = list(tokens[i + 1:min(real_len, i + 1 + m)])
        right += [self.boundary_id] * (m - len(right))
        return tuple(left), tuple(right)

    def _count(self, sentence: TokenSeq) -> None:
        for i in range(sentence.real_len):
            tok = sentence.tokens[i]
            left, right = self._contexts(sentence.tokens, sentence.real_len, i)
            self._fwd.setdefault(left, {})
            self._fwd[left][tok] = self._fwd[left].get(tok, 0) + 1
            self._fwd_total[left] = self._fwd_total.get(left, 0) + 1
            self._bwd.setdefault(right, {})
            self._bwd[right][tok] = self._bwd[right].get(tok, 0) + 1
            self._bwd_total[right] = self._bwd_total.get(right, 0) + 1

    def prob_forward(self, token: int, context: tuple[int, ...]) -> float:
        c = self._fwd.get(context, {}).get(token, 0)
        total = self._fwd_total.get(context, 0)
        return (c + self.alpha) / (total + self.alpha * self.vocab_size)

    def prob_backward(self, token: int, context: tuple[int, ...]) -> float:
        c = self._bwd.get(context, {}).get(token, 0)
        total = self._bwd_total.get(context, 0)
        return (c + self.alpha) / (total + self.alpha * self.vocab_size)


def train_lm(
    sentences: Iterable[TokenSeq],
    vocab: Vocab,
    order: int = 3,
    alpha: float = 0.1,
    lam: float = 0.5,
) -> NgramLm:
    """Count-train the bidirectional model on an unlabeled corpus."""
    lm = NgramLm(order=order, alpha=alpha, lam=lam, vocab=vocab)
    n = 0
    for s in sentences:
        lm._count(s)
        n += 1
    if n == 0:
        raise ValueError("cannot train a language model on an empty corpus")
    return lm


def token_nll(lm: NgramLm, sentence: TokenSeq) -> NllVector:
    """Blended negative log-likelihood of every non-padding token.

    ``nll[i] = -log(lam * p_fwd(w_i | left) + (1 - lam) * p_bwd(w_i | right))``
    with zeros at padding positions. Smoothing keeps every probability
    positive, so all entries are finite.
    """
    out = np.zeros(len(sentence.tokens), dtype=np.float64)
    for i in range(sentence.real_len):
        tok = sentence.tokens[i]
        left, right = lm._contexts(sentence.tokens, sentence.real_len, i)
        p = lm.lam * lm.prob_forward(tok, left) + (1.0 - lm.lam) * lm.prob_backward(tok, right)
        out[i] = -math.log(p)
    return NllVector(id=sentence.id, nll=out, real_len=sentence.real_len)


def save_nll_file(path: str, vectors: Iterable[NllVector]) -> None:
    """Write vectors in the NLL interchange format (JSONL, textual floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        for v in vectors:
            obj = {
                "id": v.id,
                "l": len(v.nll),
                "real_len": v.real_len,
                "nll": [float(x) for x in v.nll],
            }
            fh.write(json.dumps(obj) + "\n")


def load_external_nll(
    path: str,
    max_len: int | None = None,
    known_ids: Mapping[str, object] | set[str] | None = None,
) -> dict[str, NllVector]:
    """Load and validate an NLL interchange file.

    Every record must have length ``l`` matching its own header (and
    ``max_len`` when given), finite nonnegative entries, and zeros at
    padding positions. Unknown ids are rejected when known_ids is given.
    """
    out: dict[str, NllVector] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            where = f"{path} line {lineno + 1}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataFormatError(f"{where}: invalid JSON ({e.msg})") from e
            try:
                rid = str(obj["id"])
                length = int(obj["l"])
                real_len = int(obj["real_len"])
                nll = np.asarray(obj["nll"], dtype=np.float64)
            except (KeyError, TypeError, ValueError) as e:
                raise DataFormatError(f"{where}: malformed record ({e})") from e
            if known_ids is not None and rid not in known_ids:
                raise DataFormatError(f"{where}: unknown id {rid!r}")
            if rid in out:
                raise DataFormatError(f"{where}: duplicate id {rid!r}")
            if len(nll) != length:
                raise DataFormatError(
                    f"{where} (id={rid!r}): nll has {len(nll)} entries but l={length}"
                )
            vec = NllVector(id=rid, nll=nll, real_len=real_len)
            try:
                vec.validate(max_len=max_len if max_len is not None else length)
            except DataFormatError as e:
                raise DataFormatError(f"{where}: {e}") from e
            out[rid] = vec
    return out
