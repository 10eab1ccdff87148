"""Link-prediction evaluation: scoring plus AUPRC/AUROC with tie handling.

AUPRC is step-wise average precision over distinct score thresholds, so a
fully tied ranking scores positives/(positives+negatives). AUROC is the
rank-sum statistic with ties counted one half. Both depend only on the score
ordering, never on score magnitudes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .graph import Triple
from .models import (
    ModelParams,
    MwnnParams,
    RescalParams,
    TransEParams,
    mwnn_score,
    params_kind,
    rescal_score,
    transe_score,
)
from .splits import SplitBundle


class ScoredExample(NamedTuple):
    triple: Triple
    score: float
    label: int  # 1 positive, 0 negative


@dataclass(frozen=True)
class EvalReport:
    auprc: float
    auroc: float
    model: str
    regime: str
    dim: int
    seed: int | None
    n_pos: int
    n_neg: int
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "auprc": self.auprc,
            "auroc": self.auroc,
            "model": self.model,
            "regime": self.regime,
            "dim": self.dim,
            "seed": self.seed,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "wall_time_s": self.wall_time_s,
        }


def score_all(params: ModelParams, examples: Sequence[Triple]) -> np.ndarray:
    """Score triples with the scorer matching the parameter container."""
    if len(examples) == 0:
        return np.empty(0, dtype=np.float64)
    arr = np.array(examples, dtype=np.int64)
    s, p, o = arr[:, 0], arr[:, 1], arr[:, 2]
    if isinstance(params, RescalParams):
        return rescal_score(params, s, p, o)
    if isinstance(params, TransEParams):
        return transe_score(params, s, p, o)
    if isinstance(params, MwnnParams):
        return mwnn_score(params, s, p, o)
    raise TypeError(f"unsupported parameter container {type(params).__name__}")


def _check_labels(labels: np.ndarray) -> tuple[int, int]:
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("metric undefined: need at least one positive and one negative")
    return n_pos, n_neg


def average_precision(labels: np.ndarray, scores: np.ndarray) -> float:
    """Step-wise average precision over distinct thresholds (ties grouped)."""
    labels = np.asarray(labels, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos, _ = _check_labels(labels)
    order = np.argsort(-scores, kind="stable")
    y = labels[order]
    s = scores[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1.0 - y)
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp_g = tp[last_of_group]
    fp_g = fp[last_of_group]
    recall = tp_g / n_pos
    precision = tp_g / (tp_g + fp_g)
    d_recall = np.diff(np.r_[0.0, recall])
    return float(np.sum(precision * d_recall))


def roc_auc(labels: np.ndarray, scores: np.ndarray) -> float:
    """Rank-sum AUROC: P(random positive outscores random negative), ties 1/2."""
    labels = np.asarray(labels, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos, n_neg = _check_labels(labels)
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    avg_rank = start + (counts + 1) / 2.0  # 1-based average rank per tie group
    ranks = avg_rank[inverse]
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _split_examples(scored: Sequence[ScoredExample]) -> tuple[np.ndarray, np.ndarray]:
    labels = np.array([e.label for e in scored], dtype=np.float64)
    scores = np.array([e.score for e in scored], dtype=np.float64)
    return labels, scores


def auprc(scored: Sequence[ScoredExample]) -> float:
    labels, scores = _split_examples(scored)
    return average_precision(labels, scores)


def auroc(scored: Sequence[ScoredExample]) -> float:
    labels, scores = _split_examples(scored)
    return roc_auc(labels, scores)


def evaluate(
    params: ModelParams,
    split: SplitBundle,
    which: str,
    regime: str = "unknown",
    seed: int | None = None,
) -> EvalReport:
    """Score a split's positives against its negative pool and compute metrics."""
    if which == "validation":
        positives, negatives = split.validation, split.validation_negatives
    elif which == "holdout":
        positives, negatives = split.holdout, split.holdout_negatives
    else:
        raise ValueError("which must be 'validation' or 'holdout'")
    if not negatives:
        raise ValueError(f"no negatives present in the bundle for {which}")
    t0 = time.perf_counter()
    pos_scores = score_all(params, positives)
    neg_scores = score_all(params, negatives)
    scores = np.concatenate([pos_scores, neg_scores])
    labels = np.concatenate([np.ones(len(positives)), np.zeros(len(negatives))])
    report = EvalReport(
        auprc=average_precision(labels, scores),
        auroc=roc_auc(labels, scores),
        model=params_kind(params),
        regime=regime,
        dim=params.d,
        seed=seed,
        n_pos=len(positives),
        n_neg=len(negatives),
        wall_time_s=time.perf_counter() - t0,
    )
    return report
