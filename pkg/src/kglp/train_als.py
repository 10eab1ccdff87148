"""Alternating least-squares training of the bilinear model.

The loss is the block-restricted regularized squared reconstruction error:
for each relation only the rows/columns admitted by its semantics are
reconstructed, with 0/1 targets inside the block. Each sweep solves the
relation matrices exactly (given embeddings) and then updates the embedding
matrix from per-entity normal equations; every update is guarded so the loss
never increases beyond float tolerance, falling back to a backtracked
gradient step when the closed-form candidate overshoots.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .evaluation import average_precision, score_all
from .graph import TripleStore
from .models import Hyperparams, RescalParams, RESCAL, copy_params, init_params
from .semantics import RelationSemantics
from .splits import SplitBundle

log = logging.getLogger(__name__)

_GUARD_TOL = 1e-9


@dataclass
class RelationBlock:
    relation: int
    dom: np.ndarray  # admitted subject ids, ascending
    rng: np.ndarray  # admitted object ids, ascending
    s_global: np.ndarray  # triple subjects (global ids), block-filtered
    o_global: np.ndarray
    s_local: np.ndarray  # positions of s_global within dom
    o_local: np.ndarray

    @property
    def nnz(self) -> int:
        return len(self.s_global)


def _locate(sorted_ids: np.ndarray, wanted: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Positions of wanted ids inside sorted_ids plus an inside-mask."""
    if len(sorted_ids) == 0 or len(wanted) == 0:
        return np.zeros(len(wanted), dtype=np.int64), np.zeros(len(wanted), dtype=bool)
    pos = np.searchsorted(sorted_ids, wanted)
    pos_clipped = np.minimum(pos, len(sorted_ids) - 1)
    inside = sorted_ids[pos_clipped] == wanted
    return pos_clipped, inside


def build_blocks(store: TripleStore, semantics: RelationSemantics) -> list[RelationBlock]:
    """Per-relation constraint blocks with triples filtered to the block."""
    blocks = []
    dropped = 0
    for p in range(store.n_relations):
        dom = semantics.domain(p)
        rng = semantics.range(p)
        pairs = store.relation_pairs(p)
        s_pos, s_in = _locate(dom, pairs[:, 0])
        o_pos, o_in = _locate(rng, pairs[:, 1])
        keep = s_in & o_in
        dropped += int((~keep).sum())
        blocks.append(
            RelationBlock(
                relation=p,
                dom=dom,
                rng=rng,
                s_global=pairs[keep, 0],
                o_global=pairs[keep, 1],
                s_local=s_pos[keep],
                o_local=o_pos[keep],
            )
        )
    if dropped:
        log.debug("build_blocks: %d triples fall outside their relation's block", dropped)
    return blocks


def _block_data_term(A: np.ndarray, Rk: np.ndarray, blk: RelationBlock) -> float:
    """||X_hat_k - A[dom] R_k A[rng]^T||_F^2 without materializing the block."""
    if len(blk.dom) == 0 or len(blk.rng) == 0:
        return float(blk.nnz)
    Ad = A[blk.dom]
    Ar = A[blk.rng]
    Gd = Ad.T @ Ad
    Gr = Ar.T @ Ar
    quad = float((Rk * (Gd @ Rk @ Gr)).sum())
    if blk.nnz:
        cross = float(
            np.einsum("ti,ij,tj->t", A[blk.s_global], Rk, A[blk.o_global]).sum()
        )
    else:
        cross = 0.0
    return blk.nnz - 2.0 * cross + quad


def relation_data_terms(
    params: RescalParams, store: TripleStore, semantics: RelationSemantics
) -> np.ndarray:
    """Per-relation squared reconstruction error over the constraint blocks."""
    blocks = build_blocks(store, semantics)
    return np.array([_block_data_term(params.A, params.R[b.relation], b) for b in blocks])


def rescal_loss(
    params: RescalParams,
    store: TripleStore,
    semantics: RelationSemantics,
    hp: Hyperparams,
    blocks: list[RelationBlock] | None = None,
) -> float:
    """Block-restricted squared error plus embedding and relation regularizers."""
    if blocks is None:
        blocks = build_blocks(store, semantics)
    A, R = params.A, params.R
    total = hp.lambda_a * float((A * A).sum()) + hp.lambda_r * float((R * R).sum())
    for blk in blocks:
        total += _block_data_term(A, R[blk.relation], blk)
    return total


def _update_relations(A: np.ndarray, R: np.ndarray, blocks: list[RelationBlock], lam_r: float) -> None:
    """Exact per-relation least-squares solve via SVD of the block embeddings.

    With lam_r = 0 rank-deficient directions take the minimum-norm solution.
    Each candidate is accepted only if the relation's objective term does not
    increase (silent ridge repair could otherwise break monotonicity).
    """
    for blk in blocks:
        k = blk.relation
        if len(blk.dom) == 0 or len(blk.rng) == 0:
            R[k] = 0.0  # empty block: data term vanishes, minimum-norm solution
            continue
        Ad = A[blk.dom]
        Ar = A[blk.rng]
        Ud, sd, Vdt = np.linalg.svd(Ad, full_matrices=False)
        Ur, sr, Vrt = np.linalg.svd(Ar, full_matrices=False)
        if blk.nnz:
            Xt = Ud[blk.s_local].T @ Ur[blk.o_local]
        else:
            Xt = np.zeros((len(sd), len(sr)))
        num = np.outer(sd, sr) * Xt
        denom = np.outer(sd**2, sr**2) + lam_r
        if lam_r == 0.0:
            singular = denom <= 1e-30
            if np.any(singular):
                log.debug("relation %d: %d singular directions pinned to zero", k, int(singular.sum()))
            Rt = np.where(singular, 0.0, num / np.where(singular, 1.0, denom))
        else:
            Rt = num / denom
        cand = Vdt.T @ Rt @ Vrt
        old_term = _block_data_term(A, R[k], blk) + lam_r * float((R[k] * R[k]).sum())
        new_term = _block_data_term(A, cand, blk) + lam_r * float((cand * cand).sum())
        if np.all(np.isfinite(cand)) and new_term <= old_term + _GUARD_TOL:
            R[k] = cand
        else:
            log.warning("relation %d: rejected non-improving relation update", k)


def _candidate_A(A: np.ndarray, R: np.ndarray, blocks: list[RelationBlock], lam_a: float) -> np.ndarray:
    """Fixed-point embedding update from per-entity normal equations.

    Each entity row solves the least-squares subproblem of all blocks it
    participates in (domain and range roles), treating the other side of the
    bilinear form as fixed. Entities in no block keep their row when lam_a=0
    and shrink to zero otherwise.
    """
    n, d = A.shape
    M = np.broadcast_to(lam_a * np.eye(d), (n, d, d)).copy()
    rhs = np.zeros((n, d))
    member = np.zeros(n, dtype=bool)
    for blk in blocks:
        Rk = R[blk.relation]
        if len(blk.dom) == 0 or len(blk.rng) == 0:
            continue
        Ad = A[blk.dom]
        Ar = A[blk.rng]
        Gd = Ad.T @ Ad
        Gr = Ar.T @ Ar
        M[blk.dom] += Rk @ Gr @ Rk.T
        M[blk.rng] += Rk.T @ Gd @ Rk
        member[blk.dom] = True
        member[blk.rng] = True
        if blk.nnz:
            np.add.at(rhs, blk.s_global, A[blk.o_global] @ Rk.T)
            np.add.at(rhs, blk.o_global, A[blk.s_global] @ Rk)
    if lam_a == 0.0:
        # Rows outside every block have a zero system; pin them to their
        # current value so the batched solve stays non-singular.
        idle = ~member
        M[idle] = np.eye(d)
        rhs[idle] = A[idle]
    try:
        cand = np.linalg.solve(M, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        ridge = max(lam_a, 1e-8)
        log.warning("embedding update: singular normal equations, retrying with ridge %.1e", ridge)
        M[np.arange(n)[:, None], np.arange(d), np.arange(d)] += ridge
        cand = np.linalg.solve(M, rhs[:, :, None])[:, :, 0]
    return cand


def _grad_A(A: np.ndarray, R: np.ndarray, blocks: list[RelationBlock], lam_a: float) -> np.ndarray:
    """Exact gradient of the full loss with respect to the embedding matrix."""
    n, d = A.shape
    G = 2.0 * lam_a * A.copy()
    for blk in blocks:
        Rk = R[blk.relation]
        if len(blk.dom) == 0 or len(blk.rng) == 0:
            continue
        Ad = A[blk.dom]
        Ar = A[blk.rng]
        Gr = Ar.T @ Ar
        Gd = Ad.T @ Ad
        XAr = np.zeros((len(blk.dom), d))
        XtAd = np.zeros((len(blk.rng), d))
        if blk.nnz:
            np.add.at(XAr, blk.s_local, A[blk.o_global])
            np.add.at(XtAd, blk.o_local, A[blk.s_global])
        G[blk.dom] += -2.0 * (XAr @ Rk.T) + 2.0 * (Ad @ (Rk @ Gr @ Rk.T))
        G[blk.rng] += -2.0 * (XtAd @ Rk) + 2.0 * (Ar @ (Rk.T @ Gd @ Rk))
    return G


def _update_A(
    params: RescalParams,
    store: TripleStore,
    semantics: RelationSemantics,
    hp: Hyperparams,
    blocks: list[RelationBlock],
) -> float:
    """Monotone embedding update; returns the loss after the update."""

    def loss_of(Amat: np.ndarray) -> float:
        return rescal_loss(RescalParams(A=Amat, R=params.R), store, semantics, hp, blocks)

    A = params.A
    l_cur = loss_of(A)
    cand = _candidate_A(A, params.R, blocks, hp.lambda_a)
    if np.all(np.isfinite(cand)):
        l_cand = loss_of(cand)
        if l_cand <= l_cur + _GUARD_TOL:
            params.A = cand
            return l_cand
        # Damped step toward the candidate often restores descent.
        delta = cand - A
        t = 0.5
        for _ in range(10):
            trial = A + t * delta
            l_trial = loss_of(trial)
            if l_trial <= l_cur + _GUARD_TOL:
                params.A = trial
                return l_trial
            t *= 0.5
    g = _grad_A(A, params.R, blocks, hp.lambda_a)
    g_norm2 = float((g * g).sum())
    if g_norm2 == 0.0:
        return l_cur
    t = (np.abs(A).mean() + 1.0) / (np.sqrt(g_norm2) + 1e-12) * 1e-2
    for _ in range(40):
        trial = A - t * g
        l_trial = loss_of(trial)
        if l_trial <= l_cur - 1e-4 * t * g_norm2:
            params.A = trial
            log.debug("embedding update fell back to a gradient step (t=%.2e)", t)
            return l_trial
        t *= 0.5
    log.warning("embedding update made no progress; keeping previous embeddings")
    return l_cur


@dataclass
class AlsState:
    """Mutable sweep state: parameters plus loss and probe histories."""

    params: RescalParams
    sweep: int = 0
    loss: float = float("nan")
    loss_history: list[float] = field(default_factory=list)
    probe_history: list[float] = field(default_factory=list)


def als_sweep(
    state: AlsState,
    store: TripleStore,
    semantics: RelationSemantics,
    hp: Hyperparams,
) -> AlsState:
    """One full alternating pass: all relation solves, then the embedding solve.

    The loss after the sweep never exceeds the loss before it by more than
    float tolerance.
    """
    blocks = build_blocks(store, semantics)
    _update_relations(state.params.A, state.params.R, blocks, hp.lambda_r)
    loss = _update_A(state.params, store, semantics, hp, blocks)
    state.sweep += 1
    state.loss = loss
    state.loss_history.append(loss)
    return state


def fit_rescal(
    store: TripleStore,
    semantics: RelationSemantics,
    split: SplitBundle,
    hp: Hyperparams,
    patience: int = 3,
    tolerance: float = 1e-4,
) -> tuple[RescalParams, list[dict]]:
    """Run guarded ALS sweeps over the training split with probe early stopping.

    After each sweep the probe positives and probe negatives are scored and
    their average precision recorded; training stops once no improvement of
    at least ``tolerance`` over the running best occurs for ``patience``
    consecutive sweeps. Returns the parameters with the best probe score.
    """
    train_store = store.subset(split.train)
    params = init_params(RESCAL, store.n_entities, store.n_relations, hp)
    state = AlsState(params=params)
    probe = list(split.early_stop_probe)
    probe_negs = list(split.probe_negatives)
    can_probe = bool(probe) and bool(probe_negs)
    if not can_probe:
        log.warning("fit_rescal: empty probe pools, early stopping disabled")
    probe_labels = np.concatenate([np.ones(len(probe)), np.zeros(len(probe_negs))])
    best = copy_params(params)
    best_auprc = -np.inf
    stall = 0
    rows: list[dict] = []
    for epoch in range(1, hp.max_epochs + 1):
        t0 = time.perf_counter()
        state = als_sweep(state, train_store, semantics, hp)
        probe_auprc = float("nan")
        if can_probe:
            scores = np.concatenate(
                [score_all(params, probe), score_all(params, probe_negs)]
            )
            probe_auprc = average_precision(probe_labels, scores)
            state.probe_history.append(probe_auprc)
        rows.append(
            {
                "epoch": epoch,
                "loss": state.loss,
                "probe_auprc": probe_auprc,
                "wall_time_s": time.perf_counter() - t0,
            }
        )
        if can_probe:
            significant = probe_auprc > best_auprc + tolerance
            if probe_auprc > best_auprc:
                best_auprc = probe_auprc
                best = copy_params(params)
            stall = 0 if significant else stall + 1
            if stall >= patience:
                break
    if not can_probe or best_auprc == -np.inf:
        best = copy_params(params)
    return best, rows
