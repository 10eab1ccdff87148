"""Synthetic typed-KG generator: desk-scale corpora with planted semantics.

Entities are partitioned into classes; every relation gets a planted
(domain-class, range-class) signature. Within a signature block, true links
follow a bipartite group pattern: each class is split into ``groups_per_class``
groups and a per-relation group bijection decides which subject group links to
which object group. That leaves structure for a model to generalize from while
keeping every clean triple consistent with its signature. A noise fraction is
drawn uniformly over all entity pairs, ignoring signatures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SyntheticSpec:
    n_classes: int = 3
    entities_per_class: int = 50
    n_relations: int = 6
    triples_per_relation: int = 500
    noise_rate: float = 0.05
    groups_per_class: int = 1
    seed: int = 0
    # Optional explicit (domain-class, range-class) index pairs per relation.
    signatures: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.n_classes < 1 or self.entities_per_class < 1:
            raise ValueError("need at least one class and one entity per class")
        if self.n_relations < 1 or self.triples_per_relation < 1:
            raise ValueError("need at least one relation and one triple per relation")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError("noise_rate must be in [0, 1)")
        if self.groups_per_class < 1:
            raise ValueError("groups_per_class must be >= 1")
        if self.signatures is not None and len(self.signatures) != self.n_relations:
            raise ValueError("signatures must list one (domain, range) pair per relation")


@dataclass(frozen=True)
class SyntheticCorpus:
    triples: tuple[tuple[str, str, str], ...]
    types: tuple[tuple[str, str], ...]  # (entity label, class label)
    constraints: tuple[tuple[str, str, str], ...]  # (relation, domain class, range class)
    signatures: tuple[tuple[int, int], ...]


def class_label(c: int) -> str:
    return f"c{c}"


def entity_label(c: int, j: int) -> str:
    return f"e{c}_{j}"


def relation_label(r: int) -> str:
    return f"r{r}"


def generate(spec: SyntheticSpec) -> SyntheticCorpus:
    """Deterministically generate a corpus for the given spec."""
    rng = np.random.default_rng(spec.seed)
    n_per = spec.entities_per_class
    n_entities = spec.n_classes * n_per
    entity_class = np.repeat(np.arange(spec.n_classes), n_per)
    labels = [entity_label(int(entity_class[e]), e % n_per) for e in range(n_entities)]

    # Per-class group assignment: shuffled entities chunked into equal groups.
    groups = np.empty(n_entities, dtype=np.int64)
    for c in range(spec.n_classes):
        members = np.flatnonzero(entity_class == c)
        shuffled = rng.permutation(members)
        for g, chunk in enumerate(np.array_split(shuffled, spec.groups_per_class)):
            groups[chunk] = g

    if spec.signatures is not None:
        signatures = [tuple(sig) for sig in spec.signatures]
        for dom_c, rng_c in signatures:
            if not (0 <= dom_c < spec.n_classes and 0 <= rng_c < spec.n_classes):
                raise ValueError("signature class index out of range")
    else:
        signatures = [
            (int(rng.integers(spec.n_classes)), int(rng.integers(spec.n_classes)))
            for _ in range(spec.n_relations)
        ]

    n_noise = int(round(spec.noise_rate * spec.triples_per_relation))
    n_clean = spec.triples_per_relation - n_noise
    records: list[tuple[str, str, str]] = []
    for r in range(spec.n_relations):
        dom_c, rng_c = signatures[r]
        dom_ids = np.flatnonzero(entity_class == dom_c)
        rng_ids = np.flatnonzero(entity_class == rng_c)
        bijection = rng.permutation(spec.groups_per_class)
        support = [
            (int(s), int(o))
            for s in dom_ids
            for o in rng_ids
            if bijection[groups[s]] == groups[o]
        ]
        if n_clean > len(support):
            raise ValueError(
                f"relation {r}: {n_clean} clean triples requested but the "
                f"group pattern only admits {len(support)} pairs"
            )
        chosen_idx = rng.choice(len(support), size=n_clean, replace=False)
        chosen = {support[i] for i in chosen_idx}
        # Noise ignores signatures: uniform over all entity pairs, deduplicated
        # against this relation's already chosen pairs.
        while len(chosen) < n_clean + n_noise:
            pair = (int(rng.integers(n_entities)), int(rng.integers(n_entities)))
            chosen.add(pair)
        for s, o in sorted(chosen):
            records.append((labels[s], relation_label(r), labels[o]))

    order = rng.permutation(len(records))
    triples = tuple(records[i] for i in order)
    types = tuple((labels[e], class_label(int(entity_class[e]))) for e in range(n_entities))
    constraints = tuple(
        (relation_label(r), class_label(signatures[r][0]), class_label(signatures[r][1]))
        for r in range(spec.n_relations)
    )
    return SyntheticCorpus(
        triples=triples, types=types, constraints=constraints, signatures=tuple(signatures)
    )
