"""Relation semantics: schema type-constraints and the local closed-world assumption.

Every relation carries an admissible subject set (domain) and object set
(range). Three provenances exist: ``schema`` (resolved from declared
domain/range classes), ``lcwa`` (observed subjects/objects of the relation in
a training store), and ``unconstrained`` (all entities).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, NamedTuple

import numpy as np

from .graph import Triple, TripleStore, TypeAssignment, Vocabulary

log = logging.getLogger(__name__)

PROVENANCES = ("schema", "lcwa", "unconstrained")


class LcwaDomainRange(NamedTuple):
    domain: np.ndarray
    range: np.ndarray
    empty: bool


@dataclass(frozen=True)
class RelationSemantics:
    """Per-relation admissible subject/object id sets, ascending order."""

    domains: tuple[np.ndarray, ...]
    ranges: tuple[np.ndarray, ...]
    provenance: tuple[str, ...]
    n_entities: int

    def __post_init__(self):
        if not (len(self.domains) == len(self.ranges) == len(self.provenance)):
            raise ValueError("per-relation fields must have equal length")
        for p, prov in enumerate(self.provenance):
            if prov not in PROVENANCES:
                raise ValueError(f"unknown provenance {prov!r} for relation {p}")
            if prov == "unconstrained":
                if len(self.domains[p]) != self.n_entities or len(self.ranges[p]) != self.n_entities:
                    raise ValueError(
                        f"relation {p}: unconstrained semantics must cover all entities"
                    )

    @property
    def n_relations(self) -> int:
        return len(self.domains)

    def domain(self, p: int) -> np.ndarray:
        return self.domains[p]

    def range(self, p: int) -> np.ndarray:
        return self.ranges[p]

    @cached_property
    def _domain_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(d.tolist()) for d in self.domains)

    @cached_property
    def _range_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(r.tolist()) for r in self.ranges)

    def in_domain(self, p: int, entity: int) -> bool:
        return entity in self._domain_sets[p]

    def in_range(self, p: int, entity: int) -> bool:
        return entity in self._range_sets[p]

    def violates(self, triple: Triple) -> bool:
        return not (self.in_domain(triple.p, triple.s) and self.in_range(triple.p, triple.o))

    def is_unconstrained(self, p: int) -> bool:
        return self.provenance[p] == "unconstrained"

    @classmethod
    def unconstrained(cls, n_entities: int, n_relations: int) -> "RelationSemantics":
        every = np.arange(n_entities, dtype=np.int64)
        return cls(
            domains=tuple(every for _ in range(n_relations)),
            ranges=tuple(every for _ in range(n_relations)),
            provenance=tuple("unconstrained" for _ in range(n_relations)),
            n_entities=n_entities,
        )


def resolve_schema_constraints(
    vocab: Vocabulary,
    types: TypeAssignment,
    declarations: Mapping[int, tuple[frozenset[str], frozenset[str]]],
    store: TripleStore,
) -> RelationSemantics:
    """Resolve declared domain/range classes into entity id sets.

    domain_p collects every entity carrying at least one declared domain class
    of p; range_p analogously. Entities observed as subject (object) of p in
    the store are unioned in, repairing triples that disagree with the declared
    classes. Relations without a declaration are unconstrained.
    """
    n = vocab.n_entities
    every = np.arange(n, dtype=np.int64)
    class_index = types.class_index
    for e in types.classes_by_entity:
        if not 0 <= e < n:
            raise ValueError(f"typed entity id {e} outside vocabulary")
    domains: list[np.ndarray] = []
    ranges: list[np.ndarray] = []
    provenance: list[str] = []
    for p in range(vocab.n_relations):
        decl = declarations.get(p)
        if decl is None:
            domains.append(every)
            ranges.append(every)
            provenance.append("unconstrained")
            continue
        dom_classes, rng_classes = decl
        dom: set[int] = set()
        for c in dom_classes:
            if c in class_index:
                dom.update(class_index[c].tolist())
        rng: set[int] = set()
        for c in rng_classes:
            if c in class_index:
                rng.update(class_index[c].tolist())
        pairs = store.relation_pairs(p)
        dom.update(pairs[:, 0].tolist())
        rng.update(pairs[:, 1].tolist())
        domains.append(np.array(sorted(dom), dtype=np.int64))
        ranges.append(np.array(sorted(rng), dtype=np.int64))
        provenance.append("schema")
    return RelationSemantics(
        domains=tuple(domains),
        ranges=tuple(ranges),
        provenance=tuple(provenance),
        n_entities=n,
    )


def derive_lcwa(store: TripleStore, relation: int) -> LcwaDomainRange:
    """Domain/range of a relation under the local closed-world assumption.

    The store MUST be the training split only; domain is exactly the observed
    subjects and range exactly the observed objects. A relation with no
    triples yields empty sets, flagged via ``empty``.
    """
    if not 0 <= relation < store.n_relations:
        raise ValueError(f"relation {relation} out of range")
    domain = store.subjects_of(relation)
    rng = store.objects_of(relation)
    empty = len(domain) == 0 and len(rng) == 0
    if empty:
        log.warning("derive_lcwa: relation %d has no triples in the store", relation)
    return LcwaDomainRange(domain=domain, range=rng, empty=empty)


def lcwa_semantics(store: TripleStore) -> RelationSemantics:
    """RelationSemantics with lcwa provenance for every relation in the store."""
    domains = []
    ranges = []
    for p in range(store.n_relations):
        res = derive_lcwa(store, p)
        domains.append(res.domain)
        ranges.append(res.range)
    return RelationSemantics(
        domains=tuple(domains),
        ranges=tuple(ranges),
        provenance=tuple("lcwa" for _ in range(store.n_relations)),
        n_entities=store.n_entities,
    )
