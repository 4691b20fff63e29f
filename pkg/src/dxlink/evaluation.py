"""Evaluation harness: synthetic KBs, generated case corpora, hit-rate runs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DxLinkError
from .inference import NoisyOrNetwork, variational_posteriors
from .kb import (
    Concomitance,
    DiseaseFeatureLink,
    Disorder,
    DisorderCategory,
    FindingDef,
    KnowledgeBase,
    VectorTier,
)
from .nlp import Case
from .ontology import CoextensionClass
from .weights import band_score, Band, compile_weight

log = logging.getLogger(__name__)


def synthetic_kb(n_disorders: int = 100, n_findings: int = 300,
                 min_links: int = 6, max_links: int = 18,
                 seed: int = 7) -> KnowledgeBase:
    """Random compiled KB for evaluation runs and stress tests.

    Link attributes are drawn uniformly and compiled through the real weight
    grid, so weight values and their monotonicity match production output.
    """
    rng = np.random.default_rng(seed)
    categories = list(DisorderCategory)
    concs = list(Concomitance)
    coexts = list(CoextensionClass)
    tiers = list(VectorTier)

    disorders = {}
    for i in range(n_disorders):
        did = 1000 + i
        incidence = float(10 ** rng.uniform(-4, -1.3))
        processes = tuple(int(p) for p in rng.choice(
            np.arange(9000, 9030), size=rng.integers(0, 3), replace=False))
        disorders[did] = Disorder(
            did, f"disorder {i:03d}", categories[i % len(categories)],
            incidence, processes,
        )

    findings = {
        5000 + i: FindingDef(5000 + i, f"finding {i:03d}")
        for i in range(n_findings)
    }
    finding_ids = sorted(findings)

    links = []
    for did in sorted(disorders):
        count = int(rng.integers(min_links, max_links + 1))
        chosen = rng.choice(finding_ids, size=count, replace=False)
        for fid in sorted(int(f) for f in chosen):
            conc = concs[rng.integers(0, len(concs))]
            coext = coexts[rng.integers(0, len(coexts))]
            tier = tiers[rng.integers(0, len(tiers))]
            total = band_score(conc, coext)
            band = Band.High if total == 4 else Band.Mid if total == 3 else Band.Low
            links.append(DiseaseFeatureLink(
                did, fid, conc, coext, tier, compile_weight(band, tier),
            ))
    return KnowledgeBase(disorders, findings, links)


def _case_xml(truth: int, positive: list[int], negative: list[int]) -> bytes:
    lines = [f'<case truth="{truth}">']
    for fid in sorted(positive):
        lines.append(f'  <finding id="{fid}" polarity="present"/>')
    for fid in sorted(negative):
        lines.append(f'  <finding id="{fid}" polarity="absent"/>')
    lines.append("</case>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def generate_synthetic_cases(kb: KnowledgeBase, net: NoisyOrNetwork, out_dir: str | Path,
                             count: int = 200, findings_per_case: int = 5,
                             seed: int = 11) -> list[Path]:
    """Sample cases from the KB's own generative story.

    A disorder is drawn by prior; each of its links fires with probability
    equal to the link weight; high-band links that stayed silent are emitted
    as negatives. Cases are padded with the disorder's highest-weight unused
    links until they carry at least ``findings_per_case`` positives. Output
    is byte-deterministic under the seed.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    disorder_ids = np.array(net.disorder_ids)
    weights = net.priors / net.priors.sum()

    paths = []
    for case_no in range(count):
        while True:
            truth = int(rng.choice(disorder_ids, p=weights))
            links = kb.links_by_disorder.get(truth, [])
            if links:
                break
        positive = [l.finding_id for l in links if rng.random() < l.weight]
        if len(positive) < findings_per_case:
            extras = sorted(
                (l for l in links if l.finding_id not in positive),
                key=lambda l: (-l.weight, l.finding_id),
            )
            for link in extras[:findings_per_case - len(positive)]:
                positive.append(link.finding_id)
        negative = [
            l.finding_id for l in links
            if l.weight >= 0.63 and l.finding_id not in positive
        ]
        path = out_dir / f"case_{case_no:04d}.xml"
        path.write_bytes(_case_xml(truth, positive, negative))
        paths.append(path)
    return paths


@dataclass
class EvalResult:
    cases: int = 0
    skipped: int = 0
    top1: int = 0
    top5: int = 0
    top20: int = 0
    ranks: list[tuple[str, int, int]] = field(default_factory=list)

    def hit_rate(self, top_n: int) -> float:
        hits = {1: self.top1, 5: self.top5, 20: self.top20}[top_n]
        return hits / self.cases if self.cases else 0.0

    def to_dict(self) -> dict:
        return {
            "cases": self.cases,
            "skipped": self.skipped,
            "top1": self.top1,
            "top5": self.top5,
            "top20": self.top20,
            "top1_rate": self.hit_rate(1),
            "top5_rate": self.hit_rate(5),
            "top20_rate": self.hit_rate(20),
            "ranks": [
                {"case": name, "truth": truth, "rank": rank}
                for name, truth, rank in self.ranks
            ],
        }


def rank_of(marginals: dict[int, float], disorder_id: int) -> int:
    """1-based rank under the (-marginal, id) ordering used everywhere."""
    target = (-marginals[disorder_id], disorder_id)
    return 1 + sum(1 for d, m in marginals.items() if (-m, d) < target)


def eval_run(corpus_dir: str | Path, net: NoisyOrNetwork, case_loader,
             k: int | None = None) -> EvalResult:
    """Diagnose every XML case in the corpus and score the truth's rank.

    ``case_loader`` turns raw XML bytes into a Case (it carries the lexicon).
    Cases without a truth attribute are skipped with a warning.
    """
    corpus_dir = Path(corpus_dir)
    files = sorted(corpus_dir.glob("*.xml"))
    if not files:
        raise DxLinkError(f"no case files found in {corpus_dir}")

    result = EvalResult()
    for path in files:
        case: Case = case_loader(path.read_bytes())
        if case.truth is None:
            log.warning("%s: no truth attribute; case skipped", path.name)
            result.skipped += 1
            continue
        marginals, _state = variational_posteriors(net, case.evidence, k=k)
        rank = rank_of(marginals, case.truth)
        result.cases += 1
        result.ranks.append((path.name, case.truth, rank))
        if rank <= 1:
            result.top1 += 1
        if rank <= 5:
            result.top5 += 1
        if rank <= 20:
            result.top20 += 1
    return result
