"""Numba-jitted batch-step kernels (default path when numba imports).

Mirrors numpy_backend operation for operation; per-example loops make the
hot SGD inner loops allocation-free and cache-friendly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(inline="always")
def _sign(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def _transe_pass(A, R, ps, pp, po, ns, no, gamma, use_l1):
    n, d = A.shape
    gA = np.zeros_like(A)
    gR = np.zeros_like(R)
    touched = np.zeros(n, dtype=np.bool_)
    diff_p = np.empty(d)
    diff_n = np.empty(d)
    u_p = np.empty(d)
    u_n = np.empty(d)
    loss = 0.0
    for i in range(ps.shape[0]):
        s = ps[i]
        p = pp[i]
        o = po[i]
        dist_p = 0.0
        if use_l1:
            for j in range(d):
                diff_p[j] = A[s, j] + R[p, j] - A[o, j]
                dist_p += abs(diff_p[j])
                u_p[j] = _sign(diff_p[j])
        else:
            for j in range(d):
                diff_p[j] = A[s, j] + R[p, j] - A[o, j]
                dist_p += diff_p[j] * diff_p[j]
            dist_p = np.sqrt(dist_p)
            for j in range(d):
                u_p[j] = diff_p[j] / dist_p if dist_p > 0.0 else 0.0
        for term in range(2):
            if term == 0:
                corrupt = ns[i]
            else:
                corrupt = no[i]
            if corrupt < 0:
                continue
            dist_n = 0.0
            if term == 0:
                for j in range(d):
                    diff_n[j] = A[corrupt, j] + R[p, j] - A[o, j]
            else:
                for j in range(d):
                    diff_n[j] = A[s, j] + R[p, j] - A[corrupt, j]
            if use_l1:
                for j in range(d):
                    dist_n += abs(diff_n[j])
                    u_n[j] = _sign(diff_n[j])
            else:
                for j in range(d):
                    dist_n += diff_n[j] * diff_n[j]
                dist_n = np.sqrt(dist_n)
                for j in range(d):
                    u_n[j] = diff_n[j] / dist_n if dist_n > 0.0 else 0.0
            hinge = gamma + dist_p - dist_n
            if hinge <= 0.0:
                continue
            loss += hinge
            if term == 0:
                for j in range(d):
                    gA[s, j] += u_p[j]
                    gA[o, j] += u_n[j] - u_p[j]
                    gA[corrupt, j] -= u_n[j]
                    gR[p, j] += u_p[j] - u_n[j]
            else:
                for j in range(d):
                    gA[s, j] += u_p[j] - u_n[j]
                    gA[o, j] -= u_p[j]
                    gA[corrupt, j] += u_n[j]
                    gR[p, j] += u_p[j] - u_n[j]
            touched[s] = True
            touched[o] = True
            touched[corrupt] = True
    return loss, gA, gR, touched


def transe_pass(A, R, ps, pp, po, ns, no, gamma, use_l1):
    return _transe_pass(A, R, ps, pp, po, ns, no, float(gamma), bool(use_l1))


@njit(cache=True)
def _mwnn_pass(A, Rv, W, beta, mask, ps, pp, po, negs, lam1, lam2):
    d = A.shape[1]
    h = W.shape[0]
    c = negs.shape[1]
    We = W * mask
    gA = np.zeros_like(A)
    gR = np.zeros_like(Rv)
    gW = np.zeros_like(W)
    gbeta = np.zeros_like(beta)
    z = np.empty(3 * d)
    t = np.empty(h)
    du = np.empty(h)
    dz = np.empty(3 * d)
    loss = 0.0
    for i in range(ps.shape[0]):
        s = ps[i]
        p = pp[i]
        for slot in range(c + 1):
            if slot == 0:
                o = po[i]
                y = 1.0
            else:
                o = negs[i, slot - 1]
                if o < 0:
                    continue
                y = 0.0
            for j in range(d):
                z[j] = A[s, j]
                z[d + j] = Rv[p, j]
                z[2 * d + j] = A[o, j]
            v = 0.0
            for k in range(h):
                u = 0.0
                for j in range(3 * d):
                    u += We[k, j] * z[j]
                tk = np.tanh(u)
                t[k] = tk
                v += beta[k] * tk
            theta = 1.0 / (1.0 + np.exp(-v))
            th = theta
            if th < 1e-12:
                th = 1e-12
            elif th > 1.0 - 1e-12:
                th = 1.0 - 1e-12
            if y == 1.0:
                loss += -np.log(th)
            else:
                loss += -np.log(1.0 - th)
            rho = theta - y
            for k in range(h):
                gbeta[k] += rho * t[k]
                du[k] = rho * beta[k] * (1.0 - t[k] * t[k])
            for j in range(3 * d):
                acc = 0.0
                for k in range(h):
                    acc += du[k] * We[k, j]
                dz[j] = acc
            for k in range(h):
                duk = du[k]
                for j in range(3 * d):
                    gW[k, j] += duk * z[j] * mask[k, j]
            for j in range(d):
                gA[s, j] += dz[j]
                gR[p, j] += dz[d + j]
                gA[o, j] += dz[2 * d + j]
    for k in range(h):
        b = beta[k]
        gbeta[k] += lam1 * _sign(b) + 2.0 * lam2 * b
        loss += lam1 * abs(b) + lam2 * b * b
        for j in range(3 * d):
            w = W[k, j]
            gW[k, j] += lam1 * _sign(w) + 2.0 * lam2 * w
            loss += lam1 * abs(w) + lam2 * w * w
    return loss, gA, gR, gW, gbeta


def mwnn_pass(A, Rv, W, beta, mask, ps, pp, po, negs, lam1, lam2):
    return _mwnn_pass(A, Rv, W, beta, mask, ps, pp, po, negs, float(lam1), float(lam2))
