"""Pure-numpy batch-step kernels (fallback path for the jit backend).

Both backends implement the same arithmetic on the same inputs; only the
accumulation order differs, so results agree to float rounding.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _unit(diff: np.ndarray, use_l1: bool) -> np.ndarray:
    """Distance subgradient: sign for L1, normalized difference for L2 (0 at kinks)."""
    if use_l1:
        return np.sign(diff)
    dist = np.sqrt((diff * diff).sum(axis=1))
    safe = np.where(dist > 0.0, dist, 1.0)
    return np.where((dist > 0.0)[:, None], diff / safe[:, None], 0.0)


def _dist(diff: np.ndarray, use_l1: bool) -> np.ndarray:
    if use_l1:
        return np.abs(diff).sum(axis=1)
    return np.sqrt((diff * diff).sum(axis=1))


def transe_pass(A, R, ps, pp, po, ns, no, gamma, use_l1):
    """Margin-ranking batch loss and subgradients with frozen corruptions.

    ns/no hold one corrupted subject and object id per positive; -1 marks a
    skipped slot. Returns (loss, grad_A, grad_r, touched) where touched flags
    entity rows that received a nonzero hinge contribution.
    """
    n = A.shape[0]
    gA = np.zeros_like(A)
    gR = np.zeros_like(R)
    touched = np.zeros(n, dtype=bool)
    diff_pos = A[ps] + R[pp] - A[po]
    dist_pos = _dist(diff_pos, use_l1)
    u_pos = _unit(diff_pos, use_l1)
    loss = 0.0
    # Subject-corrupted hinge: [gamma + dist_pos - dist((a_s' + r_p) - a_o)]_+
    valid = ns >= 0
    if np.any(valid):
        rows = np.flatnonzero(valid)
        diff_n = A[ns[rows]] + R[pp[rows]] - A[po[rows]]
        hinge = gamma + dist_pos[rows] - _dist(diff_n, use_l1)
        act = hinge > 0.0
        rows = rows[act]
        if rows.size:
            loss += float(hinge[act].sum())
            u_n = _unit(diff_n[act], use_l1)
            np.add.at(gA, ps[rows], u_pos[rows])
            np.add.at(gA, po[rows], -u_pos[rows] + u_n)
            np.add.at(gA, ns[rows], -u_n)
            np.add.at(gR, pp[rows], u_pos[rows] - u_n)
            touched[ps[rows]] = True
            touched[po[rows]] = True
            touched[ns[rows]] = True
    # Object-corrupted hinge: [gamma + dist_pos - dist(a_s + r_p - a_o')]_+
    valid = no >= 0
    if np.any(valid):
        rows = np.flatnonzero(valid)
        diff_n = A[ps[rows]] + R[pp[rows]] - A[no[rows]]
        hinge = gamma + dist_pos[rows] - _dist(diff_n, use_l1)
        act = hinge > 0.0
        rows = rows[act]
        if rows.size:
            loss += float(hinge[act].sum())
            u_n = _unit(diff_n[act], use_l1)
            np.add.at(gA, ps[rows], u_pos[rows] - u_n)
            np.add.at(gA, po[rows], -u_pos[rows])
            np.add.at(gA, no[rows], u_n)
            np.add.at(gR, pp[rows], u_pos[rows] - u_n)
            touched[ps[rows]] = True
            touched[po[rows]] = True
            touched[no[rows]] = True
    return loss, gA, gR, touched


def mwnn_pass(A, Rv, W, beta, mask, ps, pp, po, negs, lam1, lam2):
    """Bernoulli batch loss and gradients for the neural scorer.

    negs is (B, c) of corrupted object ids (-1 = skipped slot); mask is the
    DropConnect mask applied to W for this step. Elastic-net terms on W and
    beta are included in the loss and gradients.
    """
    B = len(ps)
    d = A.shape[1]
    We = W * mask
    c = negs.shape[1]
    flat = negs.ravel()
    keep = flat >= 0
    S = np.concatenate([ps, np.repeat(ps, c)[keep]])
    P = np.concatenate([pp, np.repeat(pp, c)[keep]])
    O = np.concatenate([po, flat[keep]])
    y = np.concatenate([np.ones(B), np.zeros(int(keep.sum()))])
    Z = np.concatenate([A[S], Rv[P], A[O]], axis=1)
    U = Z @ We.T
    T = np.tanh(U)
    theta = 1.0 / (1.0 + np.exp(-(T @ beta)))
    th = np.clip(theta, 1e-12, 1.0 - 1e-12)
    loss = float(-(y * np.log(th) + (1.0 - y) * np.log(1.0 - th)).sum())
    loss += lam1 * (np.abs(W).sum() + np.abs(beta).sum())
    loss += lam2 * (float((W * W).sum()) + float(beta @ beta))
    rho = theta - y
    gbeta = T.T @ rho + lam1 * np.sign(beta) + 2.0 * lam2 * beta
    dU = (rho[:, None] * beta[None, :]) * (1.0 - T * T)
    gW = (dU.T @ Z) * mask + lam1 * np.sign(W) + 2.0 * lam2 * W
    dZ = dU @ We
    gA = np.zeros_like(A)
    gR = np.zeros_like(Rv)
    np.add.at(gA, S, dZ[:, :d])
    np.add.at(gR, P, dZ[:, d : 2 * d])
    np.add.at(gA, O, dZ[:, 2 * d :])
    return loss, gA, gR, gW, gbeta
