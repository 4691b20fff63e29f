"""Compile concomitance, co-extension and vector tier into the 9-value grid.

Band membership comes from an additive preference score (concomitance 2/1
plus co-extension 2/1/0); the vector tier then picks the value inside the
band. The grid holds exactly the nine values 0.09 through 0.81.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import replace
from enum import Enum

from .errors import CompileError
from .kb import Concomitance, DiseaseFeatureLink, KnowledgeBase, VectorTier
from .ontology import CoextensionClass


class Band(Enum):
    High = "High"
    Mid = "Mid"
    Low = "Low"


CONCOMITANCE_POINTS = {
    Concomitance.BothAssertNegate: 2,
    Concomitance.AssertOnly: 1,
    Concomitance.NegateOnly: 1,
}

COEXTENSION_POINTS = {
    CoextensionClass.SameSystemAndOrgan: 2,
    CoextensionClass.SameSystemDifferentOrgan: 1,
    CoextensionClass.DifferentSystem: 0,
}

WEIGHT_GRID: dict[tuple[Band, VectorTier], float] = {
    (Band.High, VectorTier.Close): 0.81,
    (Band.High, VectorTier.Medium): 0.72,
    (Band.High, VectorTier.Far): 0.63,
    (Band.Mid, VectorTier.Close): 0.54,
    (Band.Mid, VectorTier.Medium): 0.45,
    (Band.Mid, VectorTier.Far): 0.36,
    (Band.Low, VectorTier.Close): 0.27,
    (Band.Low, VectorTier.Medium): 0.18,
    (Band.Low, VectorTier.Far): 0.09,
}

GRID_VALUES = tuple(sorted(set(WEIGHT_GRID.values())))


def band_score(concomitance: Concomitance, coextension: CoextensionClass) -> int:
    return CONCOMITANCE_POINTS[concomitance] + COEXTENSION_POINTS[coextension]


def band(link: DiseaseFeatureLink) -> Band:
    """High needs top marks on both attributes; Mid one step down; else Low."""
    if link.coextension is None:
        raise CompileError(f"link {link.key} has no coextension class")
    total = band_score(link.concomitance, link.coextension)
    if total == 4:
        return Band.High
    if total == 3:
        return Band.Mid
    return Band.Low


def compile_weight(band_value: Band, tier: VectorTier) -> float:
    return WEIGHT_GRID[(band_value, tier)]


def band_of_weight(weight: float) -> Band:
    if weight >= 0.63 - 1e-9:
        return Band.High
    if weight >= 0.36 - 1e-9:
        return Band.Mid
    return Band.Low


def compile_all(kb: KnowledgeBase,
                tiers: dict[tuple[int, int], VectorTier]) -> tuple[KnowledgeBase, dict[float, int]]:
    """Weight every link and return the new KB plus the 9-value histogram."""
    links = []
    for link in kb.links:
        if link.coextension is None:
            raise CompileError(f"link {link.key} has no coextension class")
        tier = tiers.get(link.key)
        if tier is None:
            raise CompileError(f"link {link.key} has no vector tier")
        weight = compile_weight(band(link), tier)
        links.append(replace(link, vector_tier=tier, weight=weight))
    histogram = Counter(l.weight for l in links)
    return kb.with_links(links), {w: histogram.get(w, 0) for w in GRID_VALUES}


def write_histogram_csv(histogram: dict[float, int], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("weight,count\n")
        for w in GRID_VALUES:
            fh.write(f"{w:.2f},{histogram.get(w, 0)}\n")
