"""Concept snapshots, IS-A transitive closure, root classes and site resolution.

The concept graph is loaded from TSV snapshot files, closed under the IS-A
relation, and queried for root-class membership and anatomical scope
(organ/system). All structures are immutable after construction.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    AmbiguousRootError,
    CycleError,
    SnapshotFormatError,
    UnclassifiedConceptError,
)
from .kernels import closure_reach

log = logging.getLogger(__name__)

DEFAULT_ISA_TYPE_ID = 116680003


class RootClass(Enum):
    """The twelve top-level hierarchies a concept can belong to."""

    BodyStructure = "BodyStructure"
    Disorder = "Disorder"
    ObservableEntity = "ObservableEntity"
    Finding = "Finding"
    PhysicalForce = "PhysicalForce"
    PhysicalObject = "PhysicalObject"
    Organism = "Organism"
    Procedure = "Procedure"
    Product = "Product"
    Situation = "Situation"
    Substance = "Substance"
    Value = "Value"


class CoextensionClass(Enum):
    """Shared anatomical scope between two site assignments."""

    SameSystemAndOrgan = "SameSystemAndOrgan"
    SameSystemDifferentOrgan = "SameSystemDifferentOrgan"
    DifferentSystem = "DifferentSystem"


@dataclass(frozen=True)
class Concept:
    id: int
    preferred_term: str
    active: bool = True
    synonyms: tuple[str, ...] = ()


@dataclass(frozen=True)
class SiteAssignment:
    """Resolved anatomical scope of a concept; both fields may be absent."""

    organ: int | None = None
    system: int | None = None

    def is_empty(self) -> bool:
        return self.organ is None and self.system is None


class Ontology:
    """Active concepts plus the retained IS-A edge list (child, parent)."""

    def __init__(self, concepts: dict[int, Concept], edges: list[tuple[int, int]],
                 ignored_relation_rows: int = 0, dropped_edges: int = 0):
        self.concepts = dict(concepts)
        self.edges = list(edges)
        self.ignored_relation_rows = ignored_relation_rows
        self.dropped_edges = dropped_edges

    def __contains__(self, concept_id: int) -> bool:
        return concept_id in self.concepts

    def __len__(self) -> int:
        return len(self.concepts)

    def term(self, concept_id: int) -> str:
        return self.concepts[concept_id].preferred_term


def _split_row(line: str, path, line_no: int, n_cols: int) -> list[str]:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != n_cols:
        raise SnapshotFormatError(
            path, line_no, f"expected {n_cols} tab-separated columns, got {len(parts)}"
        )
    return parts


def _parse_id(text: str, path, line_no: int, label: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise SnapshotFormatError(path, line_no, f"non-numeric {label} {text!r}") from None
    if value <= 0:
        raise SnapshotFormatError(path, line_no, f"{label} must be positive, got {value}")
    return value


def load_snapshot(concepts_path: str | Path, relations_path: str | Path,
                  descriptions_path: str | Path | None = None,
                  isa_type_id: int = DEFAULT_ISA_TYPE_ID) -> Ontology:
    """Load an ontology from concept/relation (and optional description) TSVs.

    Only active concept rows are retained and only active rows whose type
    column equals ``isa_type_id`` become IS-A edges. Edges that reference an
    inactive or unknown concept are dropped with a warning rather than
    rejected; real snapshots contain such rows.
    """
    concepts: dict[int, Concept] = {}
    synonyms: dict[int, list[str]] = {}

    with open(concepts_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            row = _split_row(line, concepts_path, line_no, 3)
            concept_id = _parse_id(row[0], concepts_path, line_no, "concept id")
            if row[1] not in ("0", "1"):
                raise SnapshotFormatError(
                    concepts_path, line_no, f"active flag must be 0 or 1, got {row[1]!r}"
                )
            active = row[1] == "1"
            term = row[2].strip()
            if not active:
                continue
            if concept_id in concepts:
                raise SnapshotFormatError(
                    concepts_path, line_no, f"duplicate concept id {concept_id}"
                )
            if not term:
                raise SnapshotFormatError(
                    concepts_path, line_no, f"active concept {concept_id} has empty term"
                )
            concepts[concept_id] = Concept(concept_id, term, True)

    if descriptions_path is not None:
        with open(descriptions_path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                row = _split_row(line, descriptions_path, line_no, 2)
                concept_id = _parse_id(row[0], descriptions_path, line_no, "concept id")
                term = row[1].strip()
                if concept_id in concepts and term:
                    synonyms.setdefault(concept_id, []).append(term)

    edges: list[tuple[int, int]] = []
    ignored = 0
    dropped = 0
    with open(relations_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            row = _split_row(line, relations_path, line_no, 4)
            child = _parse_id(row[0], relations_path, line_no, "child id")
            parent = _parse_id(row[1], relations_path, line_no, "parent id")
            type_id = _parse_id(row[2], relations_path, line_no, "type id")
            if row[3] not in ("0", "1"):
                raise SnapshotFormatError(
                    relations_path, line_no, f"active flag must be 0 or 1, got {row[3]!r}"
                )
            if row[3] == "0":
                continue
            if type_id != isa_type_id:
                ignored += 1
                continue
            if child not in concepts or parent not in concepts:
                dropped += 1
                log.warning(
                    "%s:%d: IS-A edge %d -> %d references an inactive or unknown "
                    "concept; edge dropped", relations_path, line_no, child, parent,
                )
                continue
            edges.append((child, parent))

    for concept_id, terms in synonyms.items():
        base = concepts[concept_id]
        seen: set[str] = set()
        unique = []
        for t in terms:
            key = t.lower()
            if key not in seen and key != base.preferred_term.lower():
                seen.add(key)
                unique.append(t)
        concepts[concept_id] = Concept(base.id, base.preferred_term, True, tuple(unique))

    return Ontology(concepts, edges, ignored_relation_rows=ignored, dropped_edges=dropped)


@dataclass(frozen=True)
class ClosureTable:
    """Reflexive-free transitive closure of the IS-A graph plus node depths.

    ``pairs`` holds (descendant, ancestor) for every strict ancestor; ``depth``
    maps each concept to its shortest distance from a parentless concept.
    """

    pairs: frozenset[tuple[int, int]]
    depth: dict[int, int]
    _ancestors: dict[int, frozenset[int]] = field(repr=False, default_factory=dict)

    def ancestors(self, concept_id: int) -> frozenset[int]:
        return self._ancestors.get(concept_id, frozenset())

    def is_ancestor(self, descendant: int, ancestor: int) -> bool:
        return ancestor in self.ancestors(descendant)

    def __len__(self) -> int:
        return len(self.pairs)


def _toposort(node_ids: list[int], parents: dict[int, list[int]]) -> list[int]:
    """Order nodes so every parent precedes its children; raise on cycles."""
    children: dict[int, list[int]] = {c: [] for c in node_ids}
    pending = {c: len(parents.get(c, ())) for c in node_ids}
    for child, ps in parents.items():
        for p in ps:
            children[p].append(child)
    ready = deque(sorted(c for c, n in pending.items() if n == 0))
    order: list[int] = []
    while ready:
        node = ready.popleft()
        order.append(node)
        for ch in children[node]:
            pending[ch] -= 1
            if pending[ch] == 0:
                ready.append(ch)
    if len(order) != len(node_ids):
        stuck = {c for c, n in pending.items() if n > 0}
        # Walk parent links inside the stuck set until a node repeats; that
        # node is guaranteed to lie on a cycle.
        node = min(stuck)
        seen = set()
        while node not in seen:
            seen.add(node)
            node = next(p for p in parents[node] if p in stuck)
        raise CycleError(node)
    return order


def transitive_closure(ontology: Ontology) -> ClosureTable:
    """Compute the reflexive-free reachability relation of the IS-A DAG.

    Depth is the length of the shortest chain from any parentless concept,
    computed by multi-source BFS along parent-to-child edges.
    """
    node_ids = sorted(ontology.concepts)
    index = {cid: i for i, cid in enumerate(node_ids)}
    parents: dict[int, list[int]] = {cid: [] for cid in node_ids}
    for child, parent in ontology.edges:
        parents[child].append(parent)

    order = _toposort(node_ids, parents)

    n = len(node_ids)
    indptr = np.zeros(n + 1, dtype=np.int64)
    flat: list[int] = []
    for i, cid in enumerate(node_ids):
        flat.extend(index[p] for p in parents[cid])
        indptr[i + 1] = len(flat)
    desc, anc = closure_reach(
        n, indptr, np.asarray(flat, dtype=np.int64),
        np.asarray([index[cid] for cid in order], dtype=np.int64),
    )
    pairs = frozenset(
        (node_ids[d], node_ids[a]) for d, a in zip(desc.tolist(), anc.tolist())
    )

    ancestor_map: dict[int, frozenset[int]] = {}
    acc: dict[int, set[int]] = {cid: set() for cid in node_ids}
    for d, a in pairs:
        acc[d].add(a)
    for cid in node_ids:
        ancestor_map[cid] = frozenset(acc[cid])

    depth: dict[int, int] = {}
    frontier = deque()
    for cid in order:
        if not parents[cid]:
            depth[cid] = 0
            frontier.append(cid)
    children: dict[int, list[int]] = {cid: [] for cid in node_ids}
    for child, parent in ontology.edges:
        children[parent].append(child)
    while frontier:
        node = frontier.popleft()
        for ch in children[node]:
            if ch not in depth:
                depth[ch] = depth[node] + 1
                frontier.append(ch)

    return ClosureTable(pairs=pairs, depth=depth, _ancestors=ancestor_map)


def root_class(closure: ClosureTable, concept_id: int,
               roots: dict[int, RootClass]) -> RootClass:
    """Return the unique configured root class above (or at) the concept."""
    candidates = ({concept_id} | set(closure.ancestors(concept_id))) & roots.keys()
    if not candidates:
        raise UnclassifiedConceptError(concept_id)
    if len(candidates) > 1:
        raise AmbiguousRootError(concept_id, candidates)
    return roots[candidates.pop()]


class SiteIndex:
    """Which body-structure concepts are organs or systems.

    Every organ row carries its owning system; system rows stand alone.
    """

    def __init__(self, organs: dict[int, int], systems: set[int]):
        self.organs = dict(organs)   # organ id -> owning system id
        self.systems = set(systems)

    def __contains__(self, concept_id: int) -> bool:
        return concept_id in self.organs or concept_id in self.systems


def load_sites(path: str | Path) -> SiteIndex:
    """Parse the sites TSV: ``concept_id  kind(organ|system)  system_id``."""
    organs: dict[int, int] = {}
    systems: set[int] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            row = _split_row(line, path, line_no, 3)
            concept_id = _parse_id(row[0], path, line_no, "concept id")
            kind = row[1].strip().lower()
            if kind == "system":
                if row[2].strip():
                    raise SnapshotFormatError(
                        path, line_no, "system rows must leave system_id blank"
                    )
                systems.add(concept_id)
            elif kind == "organ":
                organs[concept_id] = _parse_id(row[2], path, line_no, "system id")
            else:
                raise SnapshotFormatError(
                    path, line_no, f"kind must be 'organ' or 'system', got {kind!r}"
                )
    for organ, system in organs.items():
        if system not in systems:
            raise SnapshotFormatError(
                path, 0, f"organ {organ} names unknown system {system}"
            )
    return SiteIndex(organs, systems)


def resolve_site(closure: ClosureTable, concept_id: int,
                 site_index: SiteIndex) -> SiteAssignment:
    """Pick the most specific organ (greatest depth) reachable from the concept.

    Candidates are the concept itself plus its ancestors, restricted to the
    site index. The chosen organ brings its owning system; with no organ in
    reach the deepest reachable system is used; with neither the assignment
    is empty. Equal depths are broken by smallest concept id.
    """
    candidates = {concept_id} | set(closure.ancestors(concept_id))

    def deepest(ids):
        return max(ids, key=lambda c: (closure.depth.get(c, 0), -c), default=None)

    organ = deepest([c for c in candidates if c in site_index.organs])
    if organ is not None:
        return SiteAssignment(organ=organ, system=site_index.organs[organ])
    system = deepest([c for c in candidates if c in site_index.systems])
    if system is not None:
        return SiteAssignment(organ=None, system=system)
    return SiteAssignment()


def coextension_class(a: SiteAssignment, b: SiteAssignment) -> CoextensionClass:
    """Classify how much anatomical scope two assignments share."""
    if a.organ is not None and a.organ == b.organ:
        return CoextensionClass.SameSystemAndOrgan
    if a.system is not None and a.system == b.system:
        return CoextensionClass.SameSystemDifferentOrgan
    return CoextensionClass.DifferentSystem
