import numpy as np
import pytest

from dxlink.errors import (
    AmbiguousRootError,
    CycleError,
    SnapshotFormatError,
    UnclassifiedConceptError,
)
from dxlink.ontology import (
    ClosureTable,
    CoextensionClass,
    Concept,
    Ontology,
    RootClass,
    SiteAssignment,
    SiteIndex,
    coextension_class,
    load_snapshot,
    resolve_site,
    root_class,
    transitive_closure,
)

from oracles import dfs_reachability


def make_ontology(n, edges):
    concepts = {i: Concept(i, f"concept {i}") for i in n}
    return Ontology(concepts, edges)


class TestLoadSnapshot:
    def test_minimal_chain(self, tmp_path):
        (tmp_path / "c.tsv").write_text("1\t1\ta\n2\t1\tb\n3\t1\tc\n")
        (tmp_path / "r.tsv").write_text(
            "1\t2\t116680003\t1\n2\t3\t116680003\t1\n")
        onto = load_snapshot(tmp_path / "c.tsv", tmp_path / "r.tsv")
        assert len(onto) == 3
        assert onto.edges == [(1, 2), (2, 3)]

    def test_inactive_concept_excluded(self, tmp_path):
        (tmp_path / "c.tsv").write_text("1\t1\ta\n2\t0\tgone\n")
        (tmp_path / "r.tsv").write_text("")
        onto = load_snapshot(tmp_path / "c.tsv", tmp_path / "r.tsv")
        assert 2 not in onto
        assert len(onto) == 1

    def test_non_isa_rows_ignored_and_counted(self, tmp_path):
        # Oracle: scan the file for active rows whose type differs from IS-A.
        rows = [
            "1\t2\t116680003\t1",
            "1\t2\t363698007\t1",
            "2\t3\t999999\t1",
            "2\t3\t116680003\t1",
            "3\t1\t363698007\t0",  # inactive: excluded, not "ignored"
        ]
        expected_ignored = sum(
            1 for r in rows
            if r.split("\t")[3] == "1" and r.split("\t")[2] != "116680003"
        )
        (tmp_path / "c.tsv").write_text("1\t1\ta\n2\t1\tb\n3\t1\tc\n")
        (tmp_path / "r.tsv").write_text("\n".join(rows) + "\n")
        onto = load_snapshot(tmp_path / "c.tsv", tmp_path / "r.tsv")
        assert onto.ignored_relation_rows == expected_ignored == 2
        assert onto.edges == [(1, 2), (2, 3)]

    def test_malformed_row_rejected_with_line(self, tmp_path):
        (tmp_path / "c.tsv").write_text("1\t1\ta\nbogus line without tabs\n")
        (tmp_path / "r.tsv").write_text("")
        with pytest.raises(SnapshotFormatError) as err:
            load_snapshot(tmp_path / "c.tsv", tmp_path / "r.tsv")
        assert err.value.line_no == 2

    def test_non_numeric_id_rejected(self, tmp_path):
        (tmp_path / "c.tsv").write_text("x1\t1\ta\n")
        (tmp_path / "r.tsv").write_text("")
        with pytest.raises(SnapshotFormatError):
            load_snapshot(tmp_path / "c.tsv", tmp_path / "r.tsv")

    def test_duplicate_concept_id_rejected(self, tmp_path):
        (tmp_path / "c.tsv").write_text("1\t1\ta\n1\t1\tb\n")
        (tmp_path / "r.tsv").write_text("")
        with pytest.raises(SnapshotFormatError, match="duplicate"):
            load_snapshot(tmp_path / "c.tsv", tmp_path / "r.tsv")

    def test_edge_to_inactive_concept_dropped(self, tmp_path):
        (tmp_path / "c.tsv").write_text("1\t1\ta\n2\t0\tgone\n")
        (tmp_path / "r.tsv").write_text("1\t2\t116680003\t1\n")
        onto = load_snapshot(tmp_path / "c.tsv", tmp_path / "r.tsv")
        assert onto.edges == []
        assert onto.dropped_edges == 1

    def test_synonyms_attach(self, tmp_path):
        (tmp_path / "c.tsv").write_text("1\t1\tfever\n")
        (tmp_path / "r.tsv").write_text("")
        (tmp_path / "d.tsv").write_text("1\tpyrexia\n1\tth e\n")
        onto = load_snapshot(tmp_path / "c.tsv", tmp_path / "r.tsv", tmp_path / "d.tsv")
        assert "pyrexia" in onto.concepts[1].synonyms


class TestTransitiveClosure:
    def test_three_chain(self):
        onto = make_ontology([1, 2, 3], [(1, 2), (2, 3)])
        table = transitive_closure(onto)
        assert table.pairs == {(1, 2), (1, 3), (2, 3)}

    def test_diamond(self):
        # IS-A child->parent: d below b and c, both below a.
        onto = make_ontology([1, 2, 3, 4], [(4, 2), (4, 3), (2, 1), (3, 1)])
        table = transitive_closure(onto)
        expected = dfs_reachability([1, 2, 3, 4], onto.edges)
        assert table.pairs == expected
        assert len(table.pairs) == 5

    def test_self_edge_is_cycle(self):
        onto = make_ontology([5], [(5, 5)])
        with pytest.raises(CycleError) as err:
            transitive_closure(onto)
        assert err.value.concept_id == 5

    def test_cycle_error_names_member(self):
        onto = make_ontology([1, 2, 3], [(1, 2), (2, 3), (3, 1)])
        with pytest.raises(CycleError) as err:
            transitive_closure(onto)
        assert err.value.concept_id in (1, 2, 3)

    def test_matches_dfs_oracle_on_random_dags(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            n = int(rng.integers(2, 60))
            ids = list(range(1, n + 1))
            edges = set()
            for _ in range(int(rng.integers(0, 3 * n))):
                a, b = rng.integers(1, n + 1, 2)
                if a < b:
                    edges.add((int(a), int(b)))  # child -> parent keeps it acyclic
            onto = make_ontology(ids, sorted(edges))
            table = transitive_closure(onto)
            assert table.pairs == dfs_reachability(ids, onto.edges)

    def test_closure_is_idempotent(self):
        rng = np.random.default_rng(7)
        ids = list(range(1, 40))
        edges = sorted({(int(a), int(b)) for a, b in rng.integers(1, 40, (80, 2)) if a < b})
        table = transitive_closure(make_ontology(ids, edges))
        again = transitive_closure(make_ontology(ids, sorted(table.pairs)))
        assert again.pairs == table.pairs

    def test_depth_shortest_path_property(self):
        rng = np.random.default_rng(3)
        ids = list(range(1, 50))
        edges = sorted({(int(a), int(b)) for a, b in rng.integers(1, 50, (120, 2)) if a < b})
        table = transitive_closure(make_ontology(ids, edges))
        for child, parent in edges:
            assert table.depth[child] <= table.depth[parent] + 1


ROOTS = {1: RootClass.BodyStructure, 4: RootClass.Finding}


class TestRootClass:
    def make_table(self):
        # 1 and 4 are roots; 10 below 1; 20 below 4; 30 below both; 99 orphan.
        onto = make_ontology([1, 4, 10, 20, 30, 99],
                             [(10, 1), (20, 4), (30, 10), (30, 20)])
        return transitive_closure(onto)

    def test_root_queried_on_itself(self):
        table = self.make_table()
        assert root_class(table, 1, ROOTS) is RootClass.BodyStructure

    def test_descendant_maps_to_root(self):
        table = self.make_table()
        # Oracle: closure membership says 20's ancestor set holds root 4 only.
        assert {a for a in table.ancestors(20) if a in ROOTS} == {4}
        assert root_class(table, 20, ROOTS) is RootClass.Finding

    def test_orphan_unclassified(self):
        table = self.make_table()
        with pytest.raises(UnclassifiedConceptError):
            root_class(table, 99, ROOTS)

    def test_two_roots_ambiguous(self):
        table = self.make_table()
        with pytest.raises(AmbiguousRootError) as err:
            root_class(table, 30, ROOTS)
        assert err.value.root_ids == (1, 4)

    def test_constant_along_chain(self):
        table = self.make_table()
        assert root_class(table, 10, ROOTS) is root_class(table, 1, ROOTS)


class TestResolveSite:
    def build(self):
        # system 50; organs 60 (depth 2) and 61->62 chain (62 at depth 4);
        # finding 80 reaches both organs via intermediates.
        edges = [
            (50, 1), (60, 50), (61, 50), (62, 61), (63, 62),
            (80, 60), (80, 63),
        ]
        onto = make_ontology([1, 50, 60, 61, 62, 63, 80], edges)
        table = transitive_closure(onto)
        sites = SiteIndex(organs={60: 50, 62: 50, 63: 50}, systems={50})
        return table, sites

    def test_organ_concept_resolves_to_itself(self):
        table, sites = self.build()
        assert resolve_site(table, 60, sites) == SiteAssignment(organ=60, system=50)

    def test_deeper_organ_wins(self):
        table, sites = self.build()
        # Oracle: depths straight from the closure table.
        assert table.depth[60] < table.depth[63]
        assert resolve_site(table, 80, sites).organ == 63

    def test_equal_depth_tie_breaks_to_smaller_id(self):
        onto = make_ontology([1, 50, 60, 61, 80], [(50, 1), (60, 50), (61, 50),
                                                   (80, 60), (80, 61)])
        table = transitive_closure(onto)
        sites = SiteIndex(organs={60: 50, 61: 50}, systems={50})
        assert table.depth[60] == table.depth[61]
        assert resolve_site(table, 80, sites).organ == 60

    def test_no_body_structure_ancestor(self):
        table, sites = self.build()
        assert resolve_site(table, 1, sites) == SiteAssignment()

    def test_system_only_fallback(self):
        onto = make_ontology([1, 50, 80], [(50, 1), (80, 50)])
        table = transitive_closure(onto)
        sites = SiteIndex(organs={}, systems={50})
        assert resolve_site(table, 80, sites) == SiteAssignment(organ=None, system=50)


class TestCoextension:
    def test_identical_assignments(self):
        a = SiteAssignment(organ=7, system=3)
        assert coextension_class(a, a) is CoextensionClass.SameSystemAndOrgan

    def test_same_system_different_organ(self):
        a = SiteAssignment(organ=7, system=3)
        b = SiteAssignment(organ=8, system=3)
        assert coextension_class(a, b) is CoextensionClass.SameSystemDifferentOrgan

    def test_missing_organ_same_system(self):
        a = SiteAssignment(organ=7, system=3)
        b = SiteAssignment(organ=None, system=3)
        assert coextension_class(a, b) is CoextensionClass.SameSystemDifferentOrgan

    def test_empty_side_is_different_system(self):
        a = SiteAssignment(organ=7, system=3)
        assert coextension_class(a, SiteAssignment()) is CoextensionClass.DifferentSystem
        assert coextension_class(SiteAssignment(), SiteAssignment()) is CoextensionClass.DifferentSystem

    def test_symmetry(self):
        cases = [
            SiteAssignment(), SiteAssignment(organ=1, system=2),
            SiteAssignment(organ=3, system=2), SiteAssignment(organ=None, system=2),
            SiteAssignment(organ=None, system=9),
        ]
        for a in cases:
            for b in cases:
                assert coextension_class(a, b) is coextension_class(b, a)


class TestFixtureOntology(object):
    def test_fixture_loads(self, snapshot):
        assert len(snapshot.ontology) == 55  # 56 rows minus one inactive
        assert snapshot.ontology.ignored_relation_rows == 2
        assert snapshot.ontology.dropped_edges == 1

    def test_fixture_sites(self, snapshot):
        # Myocardial infarction reaches both heart (depth 2) and myocardium
        # (depth 3); the deeper organ wins.
        site = resolve_site(snapshot.closure, 200, snapshot.site_index)
        assert site == SiteAssignment(organ=115, system=100)

    def test_fixture_root_classes(self, snapshot):
        roots = snapshot.config.roots
        assert root_class(snapshot.closure, 115, roots) is RootClass.BodyStructure
        assert root_class(snapshot.closure, 301, roots) is RootClass.Finding
        with pytest.raises(AmbiguousRootError):
            root_class(snapshot.closure, 300, roots)  # finding with anatomy parent
        with pytest.raises(UnclassifiedConceptError):
            root_class(snapshot.closure, 998, roots)
