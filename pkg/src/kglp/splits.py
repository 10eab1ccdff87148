"""Train/validation/holdout splitting with constraint-respecting negative pools."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .graph import Triple, TripleStore
from .sampling import sample_negatives
from .semantics import RelationSemantics

log = logging.getLogger(__name__)

HOLDOUT_FRACTION = 0.2
VALIDATION_FRACTION = 0.1
PROBE_FRACTION = 0.05
NEGATIVES_PER_POSITIVE = 10


@dataclass(frozen=True)
class SplitBundle:
    """Positive splits plus disjoint negative pools and the early-stop probe.

    train/validation/holdout partition the input positives. Negative pools
    respect the active RelationSemantics, contain no observed positive, and
    are pairwise disjoint across validation, holdout and probe.
    """

    train: tuple[Triple, ...]
    validation: tuple[Triple, ...]
    holdout: tuple[Triple, ...]
    validation_negatives: tuple[Triple, ...]
    holdout_negatives: tuple[Triple, ...]
    early_stop_probe: tuple[Triple, ...]
    probe_negatives: tuple[Triple, ...]
    split_seed: int


def _partition(store: TripleStore, rng: np.random.Generator):
    if len(store) == 0:
        raise ValueError("cannot split an empty store")
    order = rng.permutation(len(store))
    shuffled = [store.triples[i] for i in order]
    n = len(shuffled)
    n_holdout = int(math.floor(HOLDOUT_FRACTION * n))
    n_validation = int(math.floor(VALIDATION_FRACTION * n))
    holdout = tuple(shuffled[:n_holdout])
    validation = tuple(shuffled[n_holdout : n_holdout + n_validation])
    train = tuple(shuffled[n_holdout + n_validation :])
    n_probe = int(math.ceil(PROBE_FRACTION * len(train)))
    probe_idx = rng.choice(len(train), size=n_probe, replace=False)
    probe = tuple(train[i] for i in probe_idx)
    return train, validation, holdout, probe


def partition_positives(
    store: TripleStore, seed: int
) -> tuple[tuple[Triple, ...], tuple[Triple, ...], tuple[Triple, ...], tuple[Triple, ...]]:
    """Shuffle-split positives into (train, validation, holdout, probe).

    holdout = floor(0.2 N), validation = floor(0.1 N), train = remainder,
    probe = ceil(0.05 |train|) drawn from train. Depends only on (store, seed),
    not on any RelationSemantics, so regimes with the same seed share it.
    """
    return _partition(store, np.random.default_rng(seed))


def split_dataset(
    store: TripleStore, semantics: RelationSemantics, seed: int
) -> SplitBundle:
    """Build the full 70/10/20 SplitBundle with 10x negative pools.

    Negatives for validation, holdout and the early-stop probe are sampled
    under the supplied semantics, exclude every observed positive, and do not
    overlap each other. Deterministic given (store, semantics, seed).
    """
    rng = np.random.default_rng(seed)
    train, validation, holdout, probe = _partition(store, rng)
    for p in range(store.n_relations):
        if len(store.relation_pairs(p)) and not any(t.p == p for t in train):
            log.warning("split_dataset: relation %d has no training triples", p)
    all_pos = frozenset(store.triples)
    val_negs = tuple(
        sample_negatives(
            validation,
            semantics,
            NEGATIVES_PER_POSITIVE,
            all_pos,
            seed=int(rng.integers(2**63)),
        )
    )
    hold_negs = tuple(
        sample_negatives(
            holdout,
            semantics,
            NEGATIVES_PER_POSITIVE,
            all_pos | set(val_negs),
            seed=int(rng.integers(2**63)),
        )
    )
    probe_negs = tuple(
        sample_negatives(
            probe,
            semantics,
            NEGATIVES_PER_POSITIVE,
            all_pos | set(val_negs) | set(hold_negs),
            seed=int(rng.integers(2**63)),
        )
    )
    return SplitBundle(
        train=train,
        validation=validation,
        holdout=holdout,
        validation_negatives=val_negs,
        holdout_negatives=hold_negs,
        early_stop_probe=probe,
        probe_negatives=probe_negs,
        split_seed=seed,
    )
