"""Token vector store, phrase vectors, and link distance tiers.

Vectors are consumed from the standard text format (`V D` header, then one
token plus D decimals per line). Phrase vectors are unweighted means of the
in-vocabulary token vectors; links are binned into Close/Medium/Far by the
empirical tertiles of their cosine distances.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SnapshotFormatError, TierAssignmentError
from .kb import KnowledgeBase, VectorTier

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class VectorStore:
    """Immutable token -> vector map with a single shared dimension."""

    def __init__(self, dimension: int, entries: dict[str, np.ndarray]):
        self.dimension = dimension
        self.entries = entries

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, token: str) -> np.ndarray | None:
        return self.entries.get(token)


def load_vectors(path: str | Path) -> VectorStore:
    """Parse a text vector file, enforcing the header dimension on every row."""
    entries: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise SnapshotFormatError(path, 1, "empty vector file")
        head_parts = header.split()
        if len(head_parts) != 2:
            raise SnapshotFormatError(path, 1, "header must be '<vocab> <dimension>'")
        try:
            vocab, dimension = int(head_parts[0]), int(head_parts[1])
        except ValueError:
            raise SnapshotFormatError(path, 1, "non-numeric header fields") from None
        if dimension <= 0:
            raise SnapshotFormatError(path, 1, f"dimension must be positive, got {dimension}")
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != dimension + 1:
                raise SnapshotFormatError(
                    path, line_no,
                    f"expected {dimension} components, got {len(parts) - 1}",
                )
            token = parts[0].lower()
            try:
                vec = np.asarray([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise SnapshotFormatError(path, line_no, "non-numeric vector component") from None
            entries[token] = vec
    if not entries:
        raise SnapshotFormatError(path, 1, "vector file holds no token rows")
    if len(entries) != vocab:
        # Header counts are advisory in practice; duplicates collapse.
        pass
    return VectorStore(dimension, entries)


def tokenize(phrase: str) -> list[str]:
    return _TOKEN_RE.findall(phrase.lower())


def phrase_vector(store: VectorStore, phrase: str) -> np.ndarray | None:
    """Mean of in-vocabulary token vectors; None when none are known."""
    vectors = [store.entries[t] for t in tokenize(phrase) if t in store.entries]
    if not vectors:
        return None
    return np.mean(vectors, axis=0)


@dataclass(frozen=True)
class LinkDistance:
    disorder_id: int
    finding_id: int
    distance: float | None  # 1 - cosine similarity, in [0, 2]; None if missing

    @property
    def key(self) -> tuple[int, int]:
        return (self.disorder_id, self.finding_id)


def cosine_distance(v: np.ndarray, w: np.ndarray) -> float | None:
    """1 - cos(v, w); None when either vector has zero norm."""
    nv = float(np.linalg.norm(v))
    nw = float(np.linalg.norm(w))
    if nv == 0.0 or nw == 0.0:
        return None
    sim = float(np.dot(v, w)) / (nv * nw)
    return min(max(1.0 - sim, 0.0), 2.0)


def link_distances(store: VectorStore, kb: KnowledgeBase) -> list[LinkDistance]:
    """Cosine distance between disorder-name and finding-name phrase vectors."""
    phrase_cache: dict[str, np.ndarray | None] = {}

    def vec(name: str):
        if name not in phrase_cache:
            phrase_cache[name] = phrase_vector(store, name)
        return phrase_cache[name]

    out = []
    for link in kb.links:
        dv = vec(kb.disorders[link.disorder_id].name)
        fv = vec(kb.findings[link.finding_id].name)
        distance = None if dv is None or fv is None else cosine_distance(dv, fv)
        out.append(LinkDistance(link.disorder_id, link.finding_id, distance))
    return out


def assign_vector_tiers(distances: list[LinkDistance]) -> dict[tuple[int, int], VectorTier]:
    """Tertile split of the non-missing distances; missing links get Medium.

    Sorting uses (distance, disorder id, finding id) so boundary ties break
    deterministically. The lowest third is Close, the highest Far.
    """
    known = [d for d in distances if d.distance is not None]
    if not known:
        raise TierAssignmentError("every link distance is missing")
    known.sort(key=lambda d: (d.distance, d.disorder_id, d.finding_id))
    n = len(known)
    close_end = n // 3
    medium_end = (2 * n) // 3

    tiers: dict[tuple[int, int], VectorTier] = {}
    for rank, item in enumerate(known):
        if rank < close_end:
            tiers[item.key] = VectorTier.Close
        elif rank < medium_end:
            tiers[item.key] = VectorTier.Medium
        else:
            tiers[item.key] = VectorTier.Far
    for item in distances:
        if item.distance is None:
            tiers[item.key] = VectorTier.Medium
    return tiers
