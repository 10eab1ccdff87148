"""File formats and artifact persistence.

Text formats (all TAB-separated, UTF-8, '#' comment lines ignored):
  triples:     subject  predicate  object
  types:       entity   class [class ...]
  constraints: relation  domain-classes(comma-sep)  range-classes(comma-sep)

Binary artifacts (splits, semantics) are np.load-compatible zips written with
pinned timestamps so byte-identical reruns stay byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import zipfile
from io import BytesIO
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import Triple, TypeAssignment, Vocabulary
from .semantics import RelationSemantics
from .splits import SplitBundle

log = logging.getLogger(__name__)


class StaleArtifactError(RuntimeError):
    """Prepared artifacts no longer match their recorded checksums."""


def _data_lines(path) -> Iterable[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def read_triples_file(path) -> list[tuple[str, str, str]]:
    records = []
    for lineno, fields in _data_lines(path):
        if len(fields) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 TAB-separated fields, got {len(fields)}")
        records.append((fields[0], fields[1], fields[2]))
    return records


def read_types_file(path, vocab: Vocabulary) -> TypeAssignment:
    """Entity label then one or more class labels; unknown entities are skipped."""
    mapping: dict[int, set[str]] = {}
    skipped = 0
    for lineno, fields in _data_lines(path):
        if len(fields) < 2:
            raise ValueError(f"{path}:{lineno}: expected entity and at least one class")
        label, classes = fields[0], fields[1:]
        if label not in vocab.entity_ids:
            skipped += 1
            continue
        mapping.setdefault(vocab.entity_id(label), set()).update(classes)
    if skipped:
        log.warning("read_types_file: skipped %d rows for entities absent from the graph", skipped)
    return TypeAssignment({e: frozenset(cs) for e, cs in mapping.items()})


def read_constraints_file(path, vocab: Vocabulary) -> dict[int, tuple[frozenset[str], frozenset[str]]]:
    """Relation label, comma-separated domain classes, comma-separated range classes."""
    declarations: dict[int, tuple[frozenset[str], frozenset[str]]] = {}
    skipped = 0
    for lineno, fields in _data_lines(path):
        if len(fields) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 TAB-separated fields, got {len(fields)}")
        label, dom, rng = fields
        if label not in vocab.relation_ids:
            skipped += 1
            continue
        declarations[vocab.relation_id(label)] = (
            frozenset(c for c in dom.split(",") if c),
            frozenset(c for c in rng.split(",") if c),
        )
    if skipped:
        log.warning("read_constraints_file: skipped %d rows for unknown relations", skipped)
    return declarations


def write_tsv(path, rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write("\t".join(row) + "\n")


def write_npz_deterministic(path, arrays: Mapping[str, np.ndarray]) -> None:
    """np.load-compatible zip with pinned entry order and timestamps."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            buf = BytesIO()
            np.lib.format.write_array(buf, np.asarray(arr))
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def save_vocabulary(path, vocab: Vocabulary) -> None:
    payload = {
        "entities": list(vocab.entity_labels),
        "relations": list(vocab.relation_labels),
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")


def load_vocabulary(path) -> Vocabulary:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return Vocabulary(
        entity_labels=tuple(payload["entities"]),
        relation_labels=tuple(payload["relations"]),
    )


def save_semantics(path, semantics: RelationSemantics) -> None:
    arrays: dict[str, np.ndarray] = {
        "n_entities": np.array(semantics.n_entities, dtype=np.int64),
        "n_relations": np.array(semantics.n_relations, dtype=np.int64),
        "provenance": np.array(semantics.provenance),
    }
    for p in range(semantics.n_relations):
        arrays[f"domain_{p}"] = semantics.domain(p)
        arrays[f"range_{p}"] = semantics.range(p)
    write_npz_deterministic(path, arrays)


def load_semantics(path) -> RelationSemantics:
    with np.load(path) as data:
        m = int(data["n_relations"])
        return RelationSemantics(
            domains=tuple(data[f"domain_{p}"].astype(np.int64) for p in range(m)),
            ranges=tuple(data[f"range_{p}"].astype(np.int64) for p in range(m)),
            provenance=tuple(str(x) for x in data["provenance"]),
            n_entities=int(data["n_entities"]),
        )


def _triples_array(triples: Sequence[Triple]) -> np.ndarray:
    if not triples:
        return np.empty((0, 3), dtype=np.int64)
    return np.array(triples, dtype=np.int64)


def _triples_tuple(arr: np.ndarray) -> tuple[Triple, ...]:
    return tuple(Triple(int(r[0]), int(r[1]), int(r[2])) for r in arr)


def save_split(path, bundle: SplitBundle) -> None:
    write_npz_deterministic(
        path,
        {
            "train": _triples_array(bundle.train),
            "validation": _triples_array(bundle.validation),
            "holdout": _triples_array(bundle.holdout),
            "validation_negatives": _triples_array(bundle.validation_negatives),
            "holdout_negatives": _triples_array(bundle.holdout_negatives),
            "early_stop_probe": _triples_array(bundle.early_stop_probe),
            "probe_negatives": _triples_array(bundle.probe_negatives),
            "split_seed": np.array(bundle.split_seed, dtype=np.int64),
        },
    )


def load_split(path) -> SplitBundle:
    with np.load(path) as data:
        return SplitBundle(
            train=_triples_tuple(data["train"]),
            validation=_triples_tuple(data["validation"]),
            holdout=_triples_tuple(data["holdout"]),
            validation_negatives=_triples_tuple(data["validation_negatives"]),
            holdout_negatives=_triples_tuple(data["holdout_negatives"]),
            early_stop_probe=_triples_tuple(data["early_stop_probe"]),
            probe_negatives=_triples_tuple(data["probe_negatives"]),
            split_seed=int(data["split_seed"]),
        )


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_flat_config(path, config: Mapping[str, object]) -> None:
    """One key=value line per entry, keys sorted; the run's audit record."""
    lines = [f"{k}={config[k]}" for k in sorted(config)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_flat_config(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw or raw.startswith("#"):
            continue
        key, _, value = raw.partition("=")
        out[key] = value
    return out


def config_hash(config: Mapping[str, object]) -> str:
    canonical = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_manifest(path, checksums: Mapping[str, str], config: Mapping[str, object]) -> None:
    payload = {"checksums": dict(checksums), "config": {k: str(v) for k, v in config.items()}}
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True), encoding="utf-8")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def verify_manifest(manifest: dict, base_dir) -> None:
    """Raise StaleArtifactError when any recorded artifact checksum mismatches."""
    base = Path(base_dir)
    for name, expected in manifest["checksums"].items():
        target = base / name
        if not target.exists():
            raise StaleArtifactError(f"missing prepared artifact {target}")
        actual = sha256_file(target)
        if actual != expected:
            raise StaleArtifactError(
                f"artifact {target} checksum {actual[:12]} != recorded {expected[:12]}"
            )


TRAINING_LOG_FIELDS = ("epoch", "loss", "probe_auprc", "wall_time_s")


def write_training_log(path, rows: Sequence[Mapping[str, object]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRAINING_LOG_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in TRAINING_LOG_FIELDS})


RESULTS_FIELDS = ("model", "dataset", "regime", "d", "auprc", "auroc")


def append_results_row(path, row: Mapping[str, object]) -> None:
    """Append one comparison row, writing the header on first use."""
    path = Path(path)
    fresh = not path.exists()
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULTS_FIELDS)
        if fresh:
            writer.writeheader()
        writer.writerow({k: row[k] for k in RESULTS_FIELDS})


def write_report_json(path, report: Mapping[str, object]) -> None:
    Path(path).write_text(json.dumps(dict(report), indent=1, sort_keys=True), encoding="utf-8")
