"""Constraint-respecting negative sampling and training-time corruption.

Evaluation negatives exclude all observed positives and previously emitted
negatives; training corruptions deliberately do not filter observed triples.
All draws are pure functions of (inputs, seed / generator state).
"""

from __future__ import annotations

import logging
from typing import Iterable, Sequence

import numpy as np

from .graph import Triple
from .semantics import RelationSemantics

log = logging.getLogger(__name__)

SUBJECT_AND_OBJECT = "subject-and-object"
OBJECT_ONLY = "object-only"

# Candidate pools no larger than this are enumerated exactly when rejection
# sampling falls short, so feasible requests are always fully served.
_ENUMERATION_LIMIT = 200_000


def sample_negatives(
    positives: Sequence[Triple],
    semantics: RelationSemantics,
    count_per_positive: int,
    forbidden: Iterable[Triple],
    seed: int,
) -> list[Triple]:
    """Draw up to ``count_per_positive`` corrupted triples per positive.

    Each emitted triple keeps the positive's predicate p, with subject drawn
    from domain_p and object from range_p, never colliding with ``forbidden``
    (observed positives plus negatives from earlier pools) nor with another
    emitted negative. Undersized admissible pools produce a logged shortfall,
    not an error.
    """
    if count_per_positive < 1:
        raise ValueError("count_per_positive must be >= 1")
    rng = np.random.default_rng(seed)
    taken: set[Triple] = set(forbidden)
    out: list[Triple] = []
    shortfall = 0
    for t in positives:
        dom = semantics.domain(t.p)
        ran = semantics.range(t.p)
        pool = len(dom) * len(ran)
        got = 0
        if pool > 4 * count_per_positive:
            budget = max(200, 40 * count_per_positive)
            for _ in range(budget):
                if got == count_per_positive:
                    break
                cand = Triple(
                    int(dom[rng.integers(len(dom))]),
                    t.p,
                    int(ran[rng.integers(len(ran))]),
                )
                if cand in taken:
                    continue
                taken.add(cand)
                out.append(cand)
                got += 1
        if got < count_per_positive and pool <= _ENUMERATION_LIMIT:
            admissible = [
                Triple(int(s), t.p, int(o))
                for s in dom
                for o in ran
                if Triple(int(s), t.p, int(o)) not in taken
            ]
            order = rng.permutation(len(admissible))
            for idx in order[: count_per_positive - got]:
                cand = admissible[idx]
                taken.add(cand)
                out.append(cand)
                got += 1
        shortfall += count_per_positive - got
    if shortfall:
        log.warning(
            "sample_negatives: admissible pools exhausted, %d of %d negatives not emitted",
            shortfall,
            count_per_positive * len(positives),
        )
    return out


def corrupt_for_training(
    subjects: np.ndarray,
    predicates: np.ndarray,
    objects: np.ndarray,
    semantics: RelationSemantics,
    mode: str,
    count: int,
    rng: np.random.Generator,
):
    """Sample corrupted entity ids for a training batch.

    mode 'subject-and-object' returns (neg_subjects, neg_objects), one of each
    per positive; mode 'object-only' returns an (B, count) array of corrupted
    objects. Corrupted subjects are uniform over domain_p and objects uniform
    over range_p. Corruptions may collide with observed positives. A slot is
    -1 when the admissible pool is empty (logged).
    """
    predicates = np.asarray(predicates, dtype=np.int64)
    batch = len(predicates)
    if mode == SUBJECT_AND_OBJECT:
        neg_s = np.full(batch, -1, dtype=np.int64)
        neg_o = np.full(batch, -1, dtype=np.int64)
    elif mode == OBJECT_ONLY:
        if count < 1:
            raise ValueError("count must be >= 1 for object-only corruption")
        neg_s = None
        neg_o = np.full((batch, count), -1, dtype=np.int64)
    else:
        raise ValueError(f"unknown corruption mode {mode!r}")

    # Group rows by relation so pool draws vectorize; ascending relation order
    # keeps the generator stream deterministic.
    for p in np.unique(predicates):
        rows = np.flatnonzero(predicates == p)
        dom = semantics.domain(int(p))
        ran = semantics.range(int(p))
        if mode == SUBJECT_AND_OBJECT:
            if len(dom) == 0:
                log.warning("corrupt_for_training: empty domain for relation %d", p)
            else:
                neg_s[rows] = dom[rng.integers(0, len(dom), size=len(rows))]
            if len(ran) == 0:
                log.warning("corrupt_for_training: empty range for relation %d", p)
            else:
                neg_o[rows] = ran[rng.integers(0, len(ran), size=len(rows))]
        else:
            if len(ran) == 0:
                log.warning("corrupt_for_training: empty range for relation %d", p)
            else:
                neg_o[rows] = ran[rng.integers(0, len(ran), size=(len(rows), count))]
    if mode == SUBJECT_AND_OBJECT:
        return neg_s, neg_o
    return neg_o
