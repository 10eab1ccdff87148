"""Model parameters and scoring for the bilinear, translational and neural scorers.

Scores are oriented so that higher means more confident for all three models:
the bilinear model returns the vector-matrix-vector reconstruction, the
translational model the negative L1/L2 distance, and the neural model a
logistic output in (0, 1).
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

log = logging.getLogger(__name__)

RESCAL = "rescal"
TRANSE = "transe"
MWNN = "mwnn"
MODEL_KINDS = (RESCAL, TRANSE, MWNN)

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class Hyperparams:
    """Training hyper-parameters shared across models.

    Fields not used by a model are ignored by its trainer: lambda_a/lambda_r
    are the least-squares regularizers, gamma the ranking margin, corruptions
    the number of object corruptions per positive for the neural model, l1/l2
    the elastic-net weights on network weights, dropconnect the drop
    probability, hidden the neural hidden width (defaults to d).
    """

    d: int = 10
    lambda_a: float = 0.0
    lambda_r: float = 0.0
    gamma: float = 1.0
    corruptions: int = 5
    learning_rate: float = 0.05
    batch_size: int = 128
    max_epochs: int = 50
    l1: float = 0.0
    l2: float = 0.0
    dropconnect: float = 0.0
    init_std: float = 0.1
    seed: int = 0
    hidden: int | None = None
    distance: str = "L1"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.lambda_a < 0 or self.lambda_r < 0:
            raise ValueError("lambda_a and lambda_r must be non-negative")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.corruptions < 1:
            raise ValueError("corruptions must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.l1 < 0 or self.l2 < 0:
            raise ValueError("elastic-net weights must be non-negative")
        if not 0.0 <= self.dropconnect <= 1.0:
            raise ValueError("dropconnect must be in [0, 1]")
        if self.init_std < 0:
            raise ValueError("init_std must be non-negative")
        if self.distance not in ("L1", "L2"):
            raise ValueError("distance must be 'L1' or 'L2'")

    @property
    def hidden_width(self) -> int:
        return self.d if self.hidden is None else self.hidden


@dataclass
class RescalParams:
    A: np.ndarray  # (n, d) entity embeddings
    R: np.ndarray  # (m, d, d) relation matrices

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]


@dataclass
class TransEParams:
    A: np.ndarray  # (n, d) entity embeddings, unit L2 rows after training steps
    r: np.ndarray  # (m, d) relation translations
    distance: str = "L1"

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.r.shape[0]


@dataclass
class MwnnParams:
    A: np.ndarray  # (n, d) entity embeddings
    r: np.ndarray  # (m, d) relation embeddings
    W: np.ndarray  # (h, 3d) first-layer weights
    beta: np.ndarray  # (h,) output weights
    activation: str = "tanh"
    # Deterministic scoring scales W by the DropConnect keep probability.
    keep_prob: float = 1.0

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.r.shape[0]

    @property
    def h(self) -> int:
        return self.W.shape[0]


ModelParams = Union[RescalParams, TransEParams, MwnnParams]


def params_kind(params: ModelParams) -> str:
    if isinstance(params, RescalParams):
        return RESCAL
    if isinstance(params, TransEParams):
        return TRANSE
    if isinstance(params, MwnnParams):
        return MWNN
    raise TypeError(f"unsupported parameter container {type(params).__name__}")


def copy_params(params: ModelParams) -> ModelParams:
    fields = {}
    for f in dataclasses.fields(params):
        v = getattr(params, f.name)
        fields[f.name] = v.copy() if isinstance(v, np.ndarray) else v
    return type(params)(**fields)


def normalize_rows(A: np.ndarray, rows: np.ndarray | None = None) -> None:
    """Project rows of A onto the unit L2 sphere in place; zero rows are left."""
    target = A if rows is None else A[rows]
    norms = np.linalg.norm(target, axis=1)
    zero = norms == 0.0
    if np.any(zero):
        log.warning("normalize_rows: %d zero-norm rows left unnormalized", int(zero.sum()))
        norms = np.where(zero, 1.0, norms)
    if rows is None:
        A /= norms[:, None]
    else:
        A[rows] = target / norms[:, None]


def init_params(kind: str, n: int, m: int, hp: Hyperparams) -> ModelParams:
    """Draw all parameter tensors i.i.d. from N(0, init_std^2) under hp.seed.

    Translational entity rows are projected to unit L2 norm afterwards.
    Deterministic: two calls with equal arguments yield identical tensors.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    rng = np.random.default_rng(hp.seed)
    d = hp.d
    std = hp.init_std
    if kind == RESCAL:
        A = rng.normal(0.0, std, size=(n, d))
        R = rng.normal(0.0, std, size=(m, d, d))
        return RescalParams(A=A, R=R)
    if kind == TRANSE:
        A = rng.normal(0.0, std, size=(n, d))
        r = rng.normal(0.0, std, size=(m, d))
        normalize_rows(A)
        return TransEParams(A=A, r=r, distance=hp.distance)
    if kind == MWNN:
        h = hp.hidden_width
        A = rng.normal(0.0, std, size=(n, d))
        r = rng.normal(0.0, std, size=(m, d))
        W = rng.normal(0.0, std, size=(h, 3 * d))
        beta = rng.normal(0.0, std, size=h)
        return MwnnParams(A=A, r=r, W=W, beta=beta, keep_prob=1.0 - hp.dropconnect)
    raise ValueError(f"unknown model kind {kind!r}")


def rescal_score(params: RescalParams, s, p, o):
    """Bilinear score a_s^T R_p a_o; accepts scalars or parallel index arrays."""
    scalar = np.isscalar(s)
    s = np.atleast_1d(np.asarray(s, dtype=np.int64))
    p = np.atleast_1d(np.asarray(p, dtype=np.int64))
    o = np.atleast_1d(np.asarray(o, dtype=np.int64))
    out = np.einsum("ti,tij,tj->t", params.A[s], params.R[p], params.A[o])
    return float(out[0]) if scalar else out


def transe_score(params: TransEParams, s, p, o):
    """Negative L1/L2 distance between a_s + r_p and a_o (higher = better)."""
    scalar = np.isscalar(s)
    s = np.atleast_1d(np.asarray(s, dtype=np.int64))
    p = np.atleast_1d(np.asarray(p, dtype=np.int64))
    o = np.atleast_1d(np.asarray(o, dtype=np.int64))
    diff = params.A[s] + params.r[p] - params.A[o]
    if params.distance == "L1":
        out = -np.abs(diff).sum(axis=1)
    else:
        out = -np.sqrt((diff * diff).sum(axis=1))
    return float(out[0]) if scalar else out


def mwnn_score(params: MwnnParams, s, p, o, weight_mask: np.ndarray | None = None):
    """Logistic score sigma(beta^T tanh(W [a_s, r_p, a_o])) in (0, 1).

    Without a mask the stored weights are scaled by the keep probability,
    making scoring deterministic; a DropConnect mask is supplied only by
    training steps and is applied to the raw weights.
    """
    scalar = np.isscalar(s)
    s = np.atleast_1d(np.asarray(s, dtype=np.int64))
    p = np.atleast_1d(np.asarray(p, dtype=np.int64))
    o = np.atleast_1d(np.asarray(o, dtype=np.int64))
    if weight_mask is None:
        W = params.W * params.keep_prob
    else:
        W = params.W * weight_mask
    z = np.concatenate([params.A[s], params.r[p], params.A[o]], axis=1)
    hidden = np.tanh(z @ W.T)
    logits = hidden @ params.beta
    out = 1.0 / (1.0 + np.exp(-logits))
    return float(out[0]) if scalar else out


def save_checkpoint(path, params: ModelParams, hp: Hyperparams, meta: dict | None = None) -> None:
    """Persist parameters, hyper-parameters and run metadata to one file.

    The container is an np.load-compatible zip with pinned timestamps, so
    identical contents give identical bytes (rerun-equality contract).
    """
    from .io import write_npz_deterministic

    kind = params_kind(params)
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "model": kind,
        "hyperparams": dataclasses.asdict(hp),
        "meta": meta or {},
    }
    if kind == TRANSE:
        header["distance"] = params.distance
    if kind == MWNN:
        header["activation"] = params.activation
        header["keep_prob"] = params.keep_prob
    arrays = {"header": np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)}
    for f in dataclasses.fields(params):
        v = getattr(params, f.name)
        if isinstance(v, np.ndarray):
            arrays[f.name] = v
    write_npz_deterministic(path, arrays)


def load_checkpoint(path) -> tuple[ModelParams, Hyperparams, dict]:
    """Inverse of save_checkpoint; round-trips arrays bit-exactly."""
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        if header.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('format_version')}")
        kind = header["model"]
        hp = Hyperparams(**header["hyperparams"])
        if kind == RESCAL:
            params: ModelParams = RescalParams(A=data["A"], R=data["R"])
        elif kind == TRANSE:
            params = TransEParams(A=data["A"], r=data["r"], distance=header["distance"])
        elif kind == MWNN:
            params = MwnnParams(
                A=data["A"],
                r=data["r"],
                W=data["W"],
                beta=data["beta"],
                activation=header["activation"],
                keep_prob=header["keep_prob"],
            )
        else:
            raise ValueError(f"unknown model kind {kind!r} in checkpoint")
    return params, hp, header["meta"]
