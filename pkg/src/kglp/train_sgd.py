"""Mini-batch SGD training for the translational and neural models.

The translational model minimizes the margin-ranking hinge with one corrupted
subject and one corrupted object per positive (drawn from the relation's
domain/range) and projects touched entity rows back to unit L2 norm after
every update. The neural model minimizes the Bernoulli loss with a fixed
number of corrupted objects per positive, DropConnect on the first-layer
weights, elastic net on the network weights, and per-coordinate adaptive
gradient updates.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .evaluation import average_precision, score_all
from .graph import TripleStore
from .models import (
    Hyperparams,
    ModelParams,
    MwnnParams,
    MWNN,
    TransEParams,
    TRANSE,
    copy_params,
    init_params,
    normalize_rows,
)
from .sampling import OBJECT_ONLY, SUBJECT_AND_OBJECT, corrupt_for_training
from .semantics import RelationSemantics
from .splits import SplitBundle

log = logging.getLogger(__name__)

ADAGRAD_EPS = 1e-8


@dataclass
class SgdConfig:
    """Trainer knobs; defaults derive from Hyperparams via from_hyperparams."""

    learning_rate: float = 0.05
    batch_size: int = 128
    adagrad_eps: float = ADAGRAD_EPS
    max_epochs: int = 50
    patience: int = 3
    tolerance: float = 1e-4
    corruption_mode: str = SUBJECT_AND_OBJECT
    corruption_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")

    @classmethod
    def from_hyperparams(cls, hp: Hyperparams, kind: str) -> "SgdConfig":
        if kind == TRANSE:
            mode, count = SUBJECT_AND_OBJECT, 1
        elif kind == MWNN:
            mode, count = OBJECT_ONLY, hp.corruptions
        else:
            raise ValueError(f"no SGD trainer for model kind {kind!r}")
        return cls(
            learning_rate=hp.learning_rate,
            batch_size=hp.batch_size,
            max_epochs=hp.max_epochs,
            corruption_mode=mode,
            corruption_count=count,
            seed=hp.seed,
        )


@dataclass
class AdagradState:
    """Per-coordinate accumulated squared gradients for the neural model."""

    A: np.ndarray
    r: np.ndarray
    W: np.ndarray
    beta: np.ndarray

    @classmethod
    def for_params(cls, params: MwnnParams) -> "AdagradState":
        return cls(
            A=np.zeros_like(params.A),
            r=np.zeros_like(params.r),
            W=np.zeros_like(params.W),
            beta=np.zeros_like(params.beta),
        )


def transe_loss_grads(
    params: TransEParams,
    ps: np.ndarray,
    pp: np.ndarray,
    po: np.ndarray,
    ns: np.ndarray,
    no: np.ndarray,
    gamma: float,
):
    """Margin-ranking batch loss and subgradients for frozen corruptions."""
    return kernels.transe_pass(
        params.A,
        params.r,
        np.asarray(ps, dtype=np.int64),
        np.asarray(pp, dtype=np.int64),
        np.asarray(po, dtype=np.int64),
        np.asarray(ns, dtype=np.int64),
        np.asarray(no, dtype=np.int64),
        float(gamma),
        params.distance == "L1",
    )


def mwnn_loss_grads(
    params: MwnnParams,
    ps: np.ndarray,
    pp: np.ndarray,
    po: np.ndarray,
    negs: np.ndarray,
    mask: np.ndarray,
    l1: float,
    l2: float,
):
    """Bernoulli batch loss and gradients for frozen corruptions and mask."""
    return kernels.mwnn_pass(
        params.A,
        params.r,
        params.W,
        params.beta,
        np.asarray(mask, dtype=np.float64),
        np.asarray(ps, dtype=np.int64),
        np.asarray(pp, dtype=np.int64),
        np.asarray(po, dtype=np.int64),
        np.asarray(negs, dtype=np.int64),
        float(l1),
        float(l2),
    )


def transe_batch_step(
    params: TransEParams,
    batch: tuple[np.ndarray, np.ndarray, np.ndarray],
    semantics: RelationSemantics,
    hp: Hyperparams,
    rng: np.random.Generator,
) -> float:
    """One SGD step on a batch: corrupt, accumulate subgradients, update, renorm."""
    ps, pp, po = (np.asarray(a, dtype=np.int64) for a in batch)
    if len(ps) == 0:
        raise ValueError("batch must be non-empty")
    ns, no = corrupt_for_training(ps, pp, po, semantics, SUBJECT_AND_OBJECT, 1, rng)
    loss, gA, gR, touched = transe_loss_grads(params, ps, pp, po, ns, no, hp.gamma)
    params.A -= hp.learning_rate * gA
    params.r -= hp.learning_rate * gR
    rows = np.flatnonzero(touched)
    if rows.size:
        normalize_rows(params.A, rows)
    return loss


def mwnn_batch_step(
    params: MwnnParams,
    batch: tuple[np.ndarray, np.ndarray, np.ndarray],
    semantics: RelationSemantics,
    hp: Hyperparams,
    rng: np.random.Generator,
    ada: AdagradState,
    eps: float = ADAGRAD_EPS,
) -> float:
    """One adaptive-gradient step with a fresh DropConnect mask on the weights."""
    ps, pp, po = (np.asarray(a, dtype=np.int64) for a in batch)
    if len(ps) == 0:
        raise ValueError("batch must be non-empty")
    negs = corrupt_for_training(ps, pp, po, semantics, OBJECT_ONLY, hp.corruptions, rng)
    if hp.dropconnect > 0.0:
        mask = (rng.random(params.W.shape) >= hp.dropconnect).astype(np.float64)
    else:
        mask = np.ones_like(params.W)
    loss, gA, gR, gW, gbeta = mwnn_loss_grads(params, ps, pp, po, negs, mask, hp.l1, hp.l2)
    lr = hp.learning_rate
    for grad, accum, param in (
        (gA, ada.A, params.A),
        (gR, ada.r, params.r),
        (gW, ada.W, params.W),
        (gbeta, ada.beta, params.beta),
    ):
        accum += grad * grad
        param -= lr * grad / np.sqrt(accum + eps)
    return loss


def fit_sgd(
    kind: str,
    store: TripleStore,
    semantics: RelationSemantics,
    split: SplitBundle,
    hp: Hyperparams,
    config: SgdConfig | None = None,
) -> tuple[ModelParams, list[dict]]:
    """Epoch loop over shuffled training mini-batches with probe early stopping.

    Deterministic given the seed: shuffling, corruption draws and DropConnect
    masks all come from one generator stream. Returns the parameters snapshot
    with the best probe average precision.
    """
    if kind not in (TRANSE, MWNN):
        raise ValueError(f"no SGD trainer for model kind {kind!r}")
    cfg = config or SgdConfig.from_hyperparams(hp, kind)
    params = init_params(kind, store.n_entities, store.n_relations, hp)
    ada = AdagradState.for_params(params) if kind == MWNN else None
    rng = np.random.default_rng([cfg.seed, 0x5EED])
    train = np.array(split.train, dtype=np.int64)
    probe = list(split.early_stop_probe)
    probe_negs = list(split.probe_negatives)
    can_probe = bool(probe) and bool(probe_negs)
    if not can_probe:
        log.warning("fit_sgd: empty probe pools, early stopping disabled")
    probe_labels = np.concatenate([np.ones(len(probe)), np.zeros(len(probe_negs))])
    best = copy_params(params)
    best_auprc = -np.inf
    stall = 0
    rows: list[dict] = []
    for epoch in range(1, cfg.max_epochs + 1):
        t0 = time.perf_counter()
        perm = rng.permutation(len(train))
        losses = []
        for start in range(0, len(train), cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            batch = (train[idx, 0], train[idx, 1], train[idx, 2])
            if kind == TRANSE:
                losses.append(transe_batch_step(params, batch, semantics, hp, rng))
            else:
                losses.append(
                    mwnn_batch_step(params, batch, semantics, hp, rng, ada, cfg.adagrad_eps)
                )
        probe_auprc = float("nan")
        if can_probe:
            scores = np.concatenate(
                [score_all(params, probe), score_all(params, probe_negs)]
            )
            probe_auprc = average_precision(probe_labels, scores)
        rows.append(
            {
                "epoch": epoch,
                "loss": float(np.mean(losses)) if losses else 0.0,
                "probe_auprc": probe_auprc,
                "wall_time_s": time.perf_counter() - t0,
            }
        )
        if can_probe:
            significant = probe_auprc > best_auprc + cfg.tolerance
            if probe_auprc > best_auprc:
                best_auprc = probe_auprc
                best = copy_params(params)
            stall = 0 if significant else stall + 1
            if stall >= cfg.patience:
                break
    if not can_probe or best_auprc == -np.inf:
        best = copy_params(params)
    return best, rows
