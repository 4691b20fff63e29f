import csv
from collections import Counter

import pytest

from dxlink.errors import KbValidationError, SnapshotFormatError
from dxlink.kb import (
    Concomitance,
    DiseaseFeatureLink,
    Disorder,
    DisorderCategory,
    FindingDef,
    KnowledgeBase,
    VectorTier,
    kb_statistics,
    load_kb,
    save_kb,
    validate_kb,
)
from dxlink.ontology import CoextensionClass

FIXTURE_FILES = ("disorders.tsv", "findings.tsv", "links.tsv")


def write_kb(tmp_path, disorders, findings, links):
    (tmp_path / "d.tsv").write_text("".join(disorders))
    (tmp_path / "f.tsv").write_text("".join(findings))
    (tmp_path / "l.tsv").write_text("".join(links))
    return tmp_path / "d.tsv", tmp_path / "f.tsv", tmp_path / "l.tsv"


BASE_DISORDERS = [
    "10\talpha\tInfection\t0.01\t\n",
    "11\tbeta\tOther\t0.002\t77,78\n",
]
BASE_FINDINGS = [
    "20\tspots\t\n",
    "21\titching\tpruritus\n",
    "22\tswelling\t\n",
]
BASE_LINKS = [
    "10\t20\tB\n",
    "10\t21\tA\n",
    "11\t21\tN\n",
    "11\t22\tA\n",
]


class TestLoadKb:
    def test_counts_preserved(self, tmp_path):
        kb = load_kb(*write_kb(tmp_path, BASE_DISORDERS, BASE_FINDINGS, BASE_LINKS))
        assert (len(kb.disorders), len(kb.findings), len(kb.links)) == (2, 3, 4)
        assert kb.disorders[11].processes == (77, 78)

    def test_unknown_finding_is_dangling(self, tmp_path):
        links = BASE_LINKS + ["10\t99\tA\n"]
        with pytest.raises(KbValidationError, match="unknown finding 99"):
            load_kb(*write_kb(tmp_path, BASE_DISORDERS, BASE_FINDINGS, links))

    def test_duplicate_link_rejected(self, tmp_path):
        links = BASE_LINKS + ["10\t20\tA\n"]
        with pytest.raises(KbValidationError, match="duplicate link"):
            load_kb(*write_kb(tmp_path, BASE_DISORDERS, BASE_FINDINGS, links))

    def test_incidence_range_enforced(self, tmp_path):
        bad = ["10\talpha\tInfection\t1.5\t\n"]
        with pytest.raises(KbValidationError, match="incidence"):
            load_kb(*write_kb(tmp_path, bad, BASE_FINDINGS, []))
        bad = ["10\talpha\tInfection\t0\t\n"]
        with pytest.raises(KbValidationError, match="incidence"):
            load_kb(*write_kb(tmp_path, bad, BASE_FINDINGS, []))

    def test_bad_concomitance_code(self, tmp_path):
        links = ["10\t20\tX\n"]
        with pytest.raises(SnapshotFormatError, match="concomitance"):
            load_kb(*write_kb(tmp_path, BASE_DISORDERS, BASE_FINDINGS, links))

    def test_ids_resolve_against_ontology(self, tmp_path, snapshot):
        disorders = ["444\tghost\tOther\t0.01\t\n"]
        with pytest.raises(KbValidationError, match="not in ontology"):
            load_kb(*write_kb(tmp_path, disorders, BASE_FINDINGS, []),
                    ontology=snapshot.ontology)


class TestRoundTrip:
    def test_save_load_round_trip(self, tmp_path, snapshot):
        out = (tmp_path / "d.tsv", tmp_path / "f.tsv", tmp_path / "l.tsv")
        save_kb(snapshot.kb, *out)
        again = load_kb(*out)
        assert again.links == snapshot.kb.links
        assert again.disorders == snapshot.kb.disorders
        assert again.findings == snapshot.kb.findings
        # Byte stability: a second save emits identical files.
        out2 = (tmp_path / "d2.tsv", tmp_path / "f2.tsv", tmp_path / "l2.tsv")
        save_kb(again, *out2)
        for a, b in zip(out, out2):
            assert a.read_bytes() == b.read_bytes()

    def test_statistics_invariant_under_reordering(self, tmp_path):
        shuffled = list(reversed(BASE_LINKS))
        kb1 = load_kb(*write_kb(tmp_path, BASE_DISORDERS, BASE_FINDINGS, BASE_LINKS))
        tmp2 = tmp_path / "again"
        tmp2.mkdir()
        kb2 = load_kb(*write_kb(tmp2, BASE_DISORDERS, BASE_FINDINGS, shuffled))
        assert kb_statistics(kb1).by_concomitance == kb_statistics(kb2).by_concomitance


class TestStatistics:
    def test_direct_tally(self, tmp_path):
        kb = load_kb(*write_kb(tmp_path, BASE_DISORDERS, BASE_FINDINGS, BASE_LINKS))
        report = kb_statistics(kb)
        assert report.total == 4
        assert report.by_concomitance == {
            "BothAssertNegate": 1, "AssertOnly": 2, "NegateOnly": 1,
        }

    def test_fixture_tally_matches_file_scan(self, snapshot, fixtures_dir):
        # Oracle: independent scan of the raw links file.
        with open(fixtures_dir / "links.tsv") as fh:
            codes = Counter(row[2] for row in csv.reader(fh, delimiter="\t"))
        report = kb_statistics(snapshot.kb)
        assert report.by_concomitance["BothAssertNegate"] == codes["B"]
        assert report.by_concomitance["AssertOnly"] == codes["A"]
        assert report.by_concomitance["NegateOnly"] == codes["N"]

    def test_breakdowns_partition_total(self, snapshot):
        report = kb_statistics(snapshot.kb)
        assert report.compiled
        assert sum(report.by_concomitance.values()) == report.total
        assert sum(report.by_coextension.values()) == report.total
        assert sum(report.by_weight.values()) == report.total
        assert sum(report.by_band.values()) == report.total

    def test_proportions_sum_to_one(self, snapshot):
        report = kb_statistics(snapshot.kb)
        props = report.proportions(report.by_weight)
        assert abs(sum(props.values()) - 1.0) < 1e-12


class TestValidate:
    def test_clean_fixture(self, snapshot):
        report = validate_kb(snapshot.kb, snapshot.ontology)
        assert report.clean

    def test_duplicate_listed(self):
        disorders = {1: Disorder(1, "d", DisorderCategory.Other, 0.01)}
        findings = {2: FindingDef(2, "f")}
        links = [
            DiseaseFeatureLink(1, 2, Concomitance.AssertOnly),
            DiseaseFeatureLink(1, 2, Concomitance.BothAssertNegate),
        ]
        report = validate_kb(KnowledgeBase(disorders, findings, links))
        assert report.duplicate_links == [(1, 2)]

    def test_weight_range_violation_listed(self):
        disorders = {1: Disorder(1, "d", DisorderCategory.Other, 0.01)}
        findings = {2: FindingDef(2, "f")}
        links = [DiseaseFeatureLink(
            1, 2, Concomitance.AssertOnly,
            CoextensionClass.DifferentSystem, VectorTier.Close, 0.9,
        )]
        report = validate_kb(KnowledgeBase(disorders, findings, links))
        assert len(report.weight_violations) == 1

    def test_unlinked_disorder_listed(self):
        disorders = {
            1: Disorder(1, "d", DisorderCategory.Other, 0.01),
            2: Disorder(2, "e", DisorderCategory.Other, 0.01),
        }
        findings = {3: FindingDef(3, "f")}
        links = [DiseaseFeatureLink(1, 3, Concomitance.AssertOnly)]
        report = validate_kb(KnowledgeBase(disorders, findings, links))
        assert report.unlinked_disorders == [2]
