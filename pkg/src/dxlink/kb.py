"""Disorder/finding/link knowledge base: loading, validation, statistics.

The knowledge base is immutable after load. Compilation steps (coextension,
vector tiers, weights) return fresh instances so the service layer can swap
snapshots atomically.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import KbValidationError, SnapshotFormatError
from .ontology import (
    ClosureTable,
    CoextensionClass,
    Ontology,
    RootClass,
    SiteIndex,
    coextension_class,
    resolve_site,
)


class DisorderCategory(Enum):
    Infection = "Infection"
    Neoplasia = "Neoplasia"
    ConnectiveTissue = "ConnectiveTissue"
    Other = "Other"


class Concomitance(Enum):
    """Whether presence confirms and/or absence refutes the disorder."""

    BothAssertNegate = "B"
    AssertOnly = "A"
    NegateOnly = "N"


class VectorTier(Enum):
    Close = "Close"
    Medium = "Medium"
    Far = "Far"


@dataclass(frozen=True)
class Disorder:
    id: int
    name: str
    category: DisorderCategory
    incidence: float
    processes: tuple[int, ...] = ()


@dataclass(frozen=True)
class FindingDef:
    id: int
    name: str
    synonyms: tuple[str, ...] = ()
    root: RootClass | None = None


@dataclass(frozen=True)
class DiseaseFeatureLink:
    disorder_id: int
    finding_id: int
    concomitance: Concomitance
    coextension: CoextensionClass | None = None
    vector_tier: VectorTier | None = None
    weight: float | None = None

    @property
    def key(self) -> tuple[int, int]:
        return (self.disorder_id, self.finding_id)


class KnowledgeBase:
    """Immutable container of disorders, findings and their links."""

    def __init__(self, disorders: dict[int, Disorder],
                 findings: dict[int, FindingDef],
                 links: list[DiseaseFeatureLink]):
        self.disorders = dict(disorders)
        self.findings = dict(findings)
        # Duplicate pairs are tolerated here so validate_kb can report them;
        # load_kb rejects them at parse time.
        self.links = sorted(links, key=lambda l: l.key)
        self.link_index = {l.key: l for l in self.links}
        self.links_by_disorder: dict[int, list[DiseaseFeatureLink]] = {}
        self.links_by_finding: dict[int, list[DiseaseFeatureLink]] = {}
        for link in self.links:
            self.links_by_disorder.setdefault(link.disorder_id, []).append(link)
            self.links_by_finding.setdefault(link.finding_id, []).append(link)

    @property
    def is_compiled(self) -> bool:
        return bool(self.links) and all(l.weight is not None for l in self.links)

    def with_links(self, links: list[DiseaseFeatureLink]) -> "KnowledgeBase":
        return KnowledgeBase(self.disorders, self.findings, links)


def _rows(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip():
                yield line_no, line.rstrip("\n")


def _need_cols(parts, path, line_no, allowed):
    if len(parts) not in allowed:
        raise SnapshotFormatError(
            path, line_no,
            f"expected {' or '.join(map(str, sorted(allowed)))} columns, got {len(parts)}",
        )


def _int_field(text, path, line_no, label):
    try:
        return int(text)
    except ValueError:
        raise SnapshotFormatError(path, line_no, f"non-numeric {label} {text!r}") from None


_COEXT_CODES = {c.value: c for c in CoextensionClass}
_TIER_CODES = {t.value: t for t in VectorTier}


def load_kb(disorders_path: str | Path, findings_path: str | Path,
            links_path: str | Path, ontology: Ontology | None = None) -> KnowledgeBase:
    """Load the KB TSVs, resolving every id against the ontology when given.

    The links file may be the raw 3-column form or the compiled 6-column form
    (with coextension, weight and vector tier appended).
    """
    disorders: dict[int, Disorder] = {}
    for line_no, line in _rows(disorders_path):
        parts = line.split("\t")
        _need_cols(parts, disorders_path, line_no, {5})
        did = _int_field(parts[0], disorders_path, line_no, "disorder id")
        if did in disorders:
            raise KbValidationError(f"{disorders_path}:{line_no}: duplicate disorder id {did}")
        name = parts[1].strip()
        try:
            category = DisorderCategory(parts[2].strip())
        except ValueError:
            raise SnapshotFormatError(
                disorders_path, line_no, f"unknown category {parts[2]!r}"
            ) from None
        try:
            incidence = float(parts[3])
        except ValueError:
            raise SnapshotFormatError(
                disorders_path, line_no, f"non-numeric incidence {parts[3]!r}"
            ) from None
        if not 0.0 < incidence < 1.0:
            raise KbValidationError(
                f"{disorders_path}:{line_no}: incidence must lie in (0, 1), got {incidence}"
            )
        processes = tuple(
            _int_field(p, disorders_path, line_no, "process id")
            for p in parts[4].split(",") if p.strip()
        )
        if ontology is not None and did not in ontology:
            raise KbValidationError(
                f"{disorders_path}:{line_no}: disorder id {did} not in ontology"
            )
        disorders[did] = Disorder(did, name, category, incidence, processes)

    findings: dict[int, FindingDef] = {}
    for line_no, line in _rows(findings_path):
        parts = line.split("\t")
        _need_cols(parts, findings_path, line_no, {2, 3})
        fid = _int_field(parts[0], findings_path, line_no, "finding id")
        if fid in findings:
            raise KbValidationError(f"{findings_path}:{line_no}: duplicate finding id {fid}")
        name = parts[1].strip()
        if not name:
            raise KbValidationError(f"{findings_path}:{line_no}: finding {fid} has empty name")
        raw_syn = parts[2] if len(parts) > 2 else ""
        synonyms: list[str] = []
        seen = set()
        for s in raw_syn.split("|"):
            s = s.strip()
            if not s:
                continue
            if s.lower() in seen:
                raise KbValidationError(
                    f"{findings_path}:{line_no}: duplicate synonym {s!r} for finding {fid}"
                )
            seen.add(s.lower())
            synonyms.append(s)
        if ontology is not None and fid not in ontology:
            raise KbValidationError(
                f"{findings_path}:{line_no}: finding id {fid} not in ontology"
            )
        findings[fid] = FindingDef(fid, name, tuple(synonyms))

    links: list[DiseaseFeatureLink] = []
    seen_pairs: set[tuple[int, int]] = set()
    for line_no, line in _rows(links_path):
        parts = line.split("\t")
        _need_cols(parts, links_path, line_no, {3, 6})
        did = _int_field(parts[0], links_path, line_no, "disorder id")
        fid = _int_field(parts[1], links_path, line_no, "finding id")
        try:
            conc = Concomitance(parts[2].strip())
        except ValueError:
            raise SnapshotFormatError(
                links_path, line_no, f"concomitance must be B, A or N, got {parts[2]!r}"
            ) from None
        if did not in disorders:
            raise KbValidationError(
                f"{links_path}:{line_no}: link references unknown disorder {did}"
            )
        if fid not in findings:
            raise KbValidationError(
                f"{links_path}:{line_no}: link references unknown finding {fid}"
            )
        if (did, fid) in seen_pairs:
            raise KbValidationError(
                f"{links_path}:{line_no}: duplicate link ({did}, {fid})"
            )
        seen_pairs.add((did, fid))
        coext = tier = weight = None
        if len(parts) == 6:
            if parts[3] not in _COEXT_CODES:
                raise SnapshotFormatError(
                    links_path, line_no, f"unknown coextension {parts[3]!r}"
                )
            coext = _COEXT_CODES[parts[3]]
            try:
                weight = float(parts[4])
            except ValueError:
                raise SnapshotFormatError(
                    links_path, line_no, f"non-numeric weight {parts[4]!r}"
                ) from None
            if not 0.09 <= weight <= 0.81:
                raise KbValidationError(
                    f"{links_path}:{line_no}: weight {weight} outside [0.09, 0.81]"
                )
            if parts[5] not in _TIER_CODES:
                raise SnapshotFormatError(
                    links_path, line_no, f"unknown vector tier {parts[5]!r}"
                )
            tier = _TIER_CODES[parts[5]]
        links.append(DiseaseFeatureLink(did, fid, conc, coext, tier, weight))

    return KnowledgeBase(disorders, findings, links)


def save_kb(kb: KnowledgeBase, disorders_path: str | Path, findings_path: str | Path,
            links_path: str | Path) -> None:
    """Write the KB back out in canonical order (byte-stable)."""
    with open(disorders_path, "w", encoding="utf-8") as fh:
        for did in sorted(kb.disorders):
            d = kb.disorders[did]
            procs = ",".join(str(p) for p in d.processes)
            fh.write(f"{d.id}\t{d.name}\t{d.category.value}\t{d.incidence:g}\t{procs}\n")
    with open(findings_path, "w", encoding="utf-8") as fh:
        for fid in sorted(kb.findings):
            f = kb.findings[fid]
            fh.write(f"{f.id}\t{f.name}\t{'|'.join(f.synonyms)}\n")
    with open(links_path, "w", encoding="utf-8") as fh:
        for link in kb.links:
            row = f"{link.disorder_id}\t{link.finding_id}\t{link.concomitance.value}"
            if link.weight is not None:
                row += f"\t{link.coextension.value}\t{link.weight:.2f}\t{link.vector_tier.value}"
            fh.write(row + "\n")


def assign_coextension(kb: KnowledgeBase, closure: ClosureTable,
                       site_index: SiteIndex) -> KnowledgeBase:
    """Classify every link by the anatomical scope its endpoints share."""
    site_cache: dict[int, object] = {}

    def site(concept_id):
        if concept_id not in site_cache:
            site_cache[concept_id] = resolve_site(closure, concept_id, site_index)
        return site_cache[concept_id]

    links = [
        replace(link, coextension=coextension_class(site(link.disorder_id),
                                                    site(link.finding_id)))
        for link in kb.links
    ]
    return kb.with_links(links)


@dataclass
class StatsReport:
    """Link-count breakdowns; every breakdown partitions the link total."""

    total: int
    by_concomitance: dict[str, int]
    by_coextension: dict[str, int] = field(default_factory=dict)
    by_weight: dict[float, int] = field(default_factory=dict)
    by_band: dict[str, int] = field(default_factory=dict)
    compiled: bool = False

    def proportions(self, breakdown: dict) -> dict:
        if not self.total:
            return {k: 0.0 for k in breakdown}
        return {k: v / self.total for k, v in breakdown.items()}

    def to_dict(self) -> dict:
        def fmt(counts):
            return {
                str(k): {"count": v, "proportion": self.proportions(counts)[k]}
                for k, v in counts.items()
            }

        out = {
            "total_links": self.total,
            "compiled": self.compiled,
            "concomitance": fmt(self.by_concomitance),
        }
        if self.compiled:
            out["coextension"] = fmt(self.by_coextension)
            out["weights"] = fmt(self.by_weight)
            out["bands"] = fmt(self.by_band)
        return out


_BAND_EDGES = (
    ("Low", 0.09, 0.27),
    ("Mid", 0.36, 0.54),
    ("High", 0.63, 0.81),
)


def kb_statistics(kb: KnowledgeBase) -> StatsReport:
    """Tally links by concomitance and, when compiled, by scope and weight."""
    by_conc = Counter(l.concomitance.name for l in kb.links)
    report = StatsReport(
        total=len(kb.links),
        by_concomitance={c.name: by_conc.get(c.name, 0) for c in Concomitance},
    )
    if kb.is_compiled:
        by_coext = Counter(l.coextension.name for l in kb.links)
        by_weight = Counter(round(l.weight, 2) for l in kb.links)
        by_band = Counter()
        for l in kb.links:
            for name, lo, hi in _BAND_EDGES:
                if lo - 1e-9 <= l.weight <= hi + 1e-9:
                    by_band[name] += 1
                    break
        report.by_coextension = {c.name: by_coext.get(c.name, 0) for c in CoextensionClass}
        report.by_weight = {w: by_weight.get(w, 0)
                            for w in (0.09, 0.18, 0.27, 0.36, 0.45, 0.54, 0.63, 0.72, 0.81)}
        report.by_band = {name: by_band.get(name, 0) for name, _, _ in _BAND_EDGES}
        report.compiled = True
    return report


@dataclass
class ValidationReport:
    dangling_ids: list[str] = field(default_factory=list)
    duplicate_links: list[tuple[int, int]] = field(default_factory=list)
    weight_violations: list[str] = field(default_factory=list)
    unlinked_disorders: list[int] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not (self.dangling_ids or self.duplicate_links
                    or self.weight_violations or self.unlinked_disorders)

    def to_dict(self) -> dict:
        return {
            "clean": self.clean,
            "dangling_ids": self.dangling_ids,
            "duplicate_links": [list(k) for k in self.duplicate_links],
            "weight_violations": self.weight_violations,
            "unlinked_disorders": self.unlinked_disorders,
        }


def validate_kb(kb: KnowledgeBase, ontology: Ontology | None = None) -> ValidationReport:
    """Report structural problems without raising (report-only)."""
    report = ValidationReport()
    for link in kb.links:
        if link.disorder_id not in kb.disorders:
            report.dangling_ids.append(f"link {link.key}: unknown disorder {link.disorder_id}")
        if link.finding_id not in kb.findings:
            report.dangling_ids.append(f"link {link.key}: unknown finding {link.finding_id}")
        if link.weight is not None and not 0.09 - 1e-9 <= link.weight <= 0.81 + 1e-9:
            report.weight_violations.append(
                f"link {link.key}: weight {link.weight} outside [0.09, 0.81]"
            )
    if ontology is not None:
        for did in kb.disorders:
            if did not in ontology:
                report.dangling_ids.append(f"disorder {did} not in ontology")
        for fid in kb.findings:
            if fid not in ontology:
                report.dangling_ids.append(f"finding {fid} not in ontology")
    pair_counts = Counter(l.key for l in kb.links)
    report.duplicate_links = sorted(k for k, n in pair_counts.items() if n > 1)
    report.unlinked_disorders = sorted(
        d for d in kb.disorders if d not in kb.links_by_disorder
    )
    return report
