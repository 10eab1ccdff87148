"""Core knowledge-graph data model: vocabulary, triples, typed entities."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

log = logging.getLogger(__name__)


class Triple(NamedTuple):
    """One (subject, predicate, object) fact over dense integer ids."""

    s: int
    p: int
    o: int


@dataclass(frozen=True)
class Vocabulary:
    """Bijection between surface labels and dense integer ids.

    Entity ids are 0..n-1 and relation ids 0..m-1, assigned in first-appearance
    order of the input records, so the mapping is reproducible for identical
    input order.
    """

    entity_labels: tuple[str, ...]
    relation_labels: tuple[str, ...]

    @cached_property
    def entity_ids(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.entity_labels)}

    @cached_property
    def relation_ids(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.relation_labels)}

    @property
    def n_entities(self) -> int:
        return len(self.entity_labels)

    @property
    def n_relations(self) -> int:
        return len(self.relation_labels)

    def entity_id(self, label: str) -> int:
        return self.entity_ids[label]

    def relation_id(self, label: str) -> int:
        return self.relation_ids[label]


@dataclass(frozen=True)
class TypeAssignment:
    """Entity id -> set of class names. Entities may be untyped (absent)."""

    classes_by_entity: Mapping[int, frozenset[str]]

    def classes_of(self, entity: int) -> frozenset[str]:
        return self.classes_by_entity.get(entity, frozenset())

    @cached_property
    def class_index(self) -> dict[str, np.ndarray]:
        """Class name -> ascending array of entity ids carrying that class."""
        members: dict[str, list[int]] = {}
        for e, classes in self.classes_by_entity.items():
            for c in classes:
                members.setdefault(c, []).append(e)
        return {c: np.array(sorted(ids), dtype=np.int64) for c, ids in members.items()}


class TripleStore:
    """Deduplicated set of triples with per-relation adjacency indexes.

    Immutable after construction; membership queries are O(1) via a hash set,
    and per-relation subject/object pairs are kept as int64 arrays.
    """

    def __init__(self, triples: Iterable[Triple], n_entities: int, n_relations: int):
        self.n_entities = int(n_entities)
        self.n_relations = int(n_relations)
        seen: set[Triple] = set()
        ordered: list[Triple] = []
        for t in triples:
            t = Triple(int(t[0]), int(t[1]), int(t[2]))
            if not (0 <= t.s < n_entities and 0 <= t.o < n_entities):
                raise ValueError(f"entity id out of range in triple {t}")
            if not (0 <= t.p < n_relations):
                raise ValueError(f"relation id out of range in triple {t}")
            if t not in seen:
                seen.add(t)
                ordered.append(t)
        self.triples: tuple[Triple, ...] = tuple(ordered)
        self._members = frozenset(seen)
        by_rel: dict[int, list[tuple[int, int]]] = {}
        for t in ordered:
            by_rel.setdefault(t.p, []).append((t.s, t.o))
        self._by_relation = {
            p: np.array(pairs, dtype=np.int64) for p, pairs in by_rel.items()
        }
        counts = np.zeros(n_entities, dtype=np.int64)
        for t in ordered:
            counts[t.s] += 1
            counts[t.o] += 1
        self.entity_incidence = counts

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._members

    def __iter__(self):
        return iter(self.triples)

    def relation_pairs(self, p: int) -> np.ndarray:
        """(t_p, 2) array of (subject, object) pairs for relation p."""
        pairs = self._by_relation.get(p)
        if pairs is None:
            return np.empty((0, 2), dtype=np.int64)
        return pairs

    def subjects_of(self, p: int) -> np.ndarray:
        return np.unique(self.relation_pairs(p)[:, 0])

    def objects_of(self, p: int) -> np.ndarray:
        return np.unique(self.relation_pairs(p)[:, 1])

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All triples as parallel (s, p, o) int64 arrays, in store order."""
        if not self.triples:
            z = np.empty(0, dtype=np.int64)
            return z, z.copy(), z.copy()
        a = np.array(self.triples, dtype=np.int64)
        return a[:, 0], a[:, 1], a[:, 2]

    def subset(self, triples: Sequence[Triple]) -> "TripleStore":
        """Store over the same id space restricted to the given triples."""
        return TripleStore(triples, self.n_entities, self.n_relations)


def load_graph(
    triple_records: Sequence[tuple[str, str, str]],
) -> tuple[Vocabulary, TripleStore]:
    """Index labeled triples into a Vocabulary and a deduplicated TripleStore.

    Ids follow first appearance (subject before object within a record).
    Duplicate records are dropped; the count is reported on the run log.
    Raises ValueError for records of wrong arity or with empty labels,
    naming the 1-based record number.
    """
    if not triple_records:
        raise ValueError("no triple records supplied")
    entity_ids: dict[str, int] = {}
    relation_ids: dict[str, int] = {}
    triples: list[Triple] = []
    for lineno, rec in enumerate(triple_records, start=1):
        if len(rec) != 3:
            raise ValueError(f"record {lineno}: expected 3 fields, got {len(rec)}")
        s_label, p_label, o_label = rec
        for field in (s_label, p_label, o_label):
            if not isinstance(field, str) or not field:
                raise ValueError(f"record {lineno}: empty or non-string label")
        s = entity_ids.setdefault(s_label, len(entity_ids))
        o = entity_ids.setdefault(o_label, len(entity_ids))
        p = relation_ids.setdefault(p_label, len(relation_ids))
        triples.append(Triple(s, p, o))
    vocab = Vocabulary(
        entity_labels=tuple(entity_ids),
        relation_labels=tuple(relation_ids),
    )
    store = TripleStore(triples, vocab.n_entities, vocab.n_relations)
    dropped = len(triples) - len(store)
    if dropped:
        log.info("load_graph: dropped %d duplicate triples", dropped)
    return vocab, store
