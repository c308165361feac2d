from __future__ import annotations

from datetime import date

import pytest

from threatrank.enrich import GroupAttribution
from threatrank.feeds import (
    AttackGroupRaw,
    AttackTactic,
    AttackTechnique,
    AttackVector,
    CapecEntry,
    CpeEntry,
    CveRecord,
    CweEntry,
    SkillLevel,
    SnapshotBundle,
)
from threatrank.kgraph import (
    EDGE_ENDPOINTS,
    EdgeType,
    GraphFrozenError,
    NodeLabel,
    PropertyGraph,
    audit_edge_conformance,
    build_graph,
    cves_affecting,
    graph_signature,
    groups_threatening,
    load_graph,
    save_graph,
    techniques_for_cve,
)
from threatrank.vocab import Vocabulary
from tests.randdata import random_attributions, random_bundle

TINY_VOCAB = Vocabulary(countries=("United States", "China"),
                        sectors=("Education",))


def _cve(cve_id="CVE-2021-38000", cwe_ids=(), cpes=()):
    return CveRecord(cve_id=cve_id, description="d", published=date(2021, 1, 1),
                     modified=date(2021, 2, 1), cvss_base=6.1,
                     attack_vector=AttackVector.NETWORK,
                     cwe_ids=tuple(cwe_ids), affected_cpes=tuple(cpes))


def test_minimal_build_one_affects_edge():
    cpe_id = "cpe:2.3:a:google:chrome:-:*:*:*:*:*:*:*"
    bundle = SnapshotBundle(
        cves=[_cve(cpes=[cpe_id])],
        cpes=[CpeEntry(cpe_id=cpe_id, vendor="google", product="chrome")],
    )
    graph = build_graph(bundle, vocab=TINY_VOCAB)
    record_nodes = [n for n in graph.nodes()
                    if n.label in (NodeLabel.NVD_CVE, NodeLabel.CPE)]
    assert len(record_nodes) == 2
    affects = [e for e in graph.edges() if e[1] is EdgeType.AFFECTS]
    assert len(affects) == 1
    assert graph.edge_count == 1


def test_upsert_is_idempotent():
    g = PropertyGraph()
    first = g.upsert_node(NodeLabel.NVD_CVE, "CVE-2021-38000", {"cvss_base": 6.1})
    second = g.upsert_node(NodeLabel.NVD_CVE, "CVE-2021-38000", {"modified": "2021-11-23"})
    assert first == second
    assert g.node_count == 1
    # later properties merge over earlier ones
    assert g.node(first).props == {"cvss_base": 6.1, "modified": "2021-11-23"}


def test_add_edge_rejects_schema_violation():
    g = PropertyGraph()
    cve = g.upsert_node(NodeLabel.NVD_CVE, "CVE-2021-38000")
    country = g.upsert_node(NodeLabel.COUNTRY, "China")
    assert g.add_edge(cve, EdgeType.AFFECTS, country) is False
    assert g.stats.schema_rejected == 1
    assert g.edge_count == 0


def test_neighbors_unknown_and_isolated_nodes():
    g = PropertyGraph()
    node = g.upsert_node(NodeLabel.NVD_CVE, "CVE-2021-38000")
    assert g.neighbors(node, EdgeType.AFFECTS, "out") == set()
    assert g.neighbors(4242, EdgeType.AFFECTS, "out") == set()
    assert g.neighbor_keys(NodeLabel.NVD_CVE, "CVE-0000-0000", EdgeType.AFFECTS) == set()


def test_neighbors_direction_validation():
    g = PropertyGraph()
    node = g.upsert_node(NodeLabel.NVD_CVE, "CVE-2021-38000")
    with pytest.raises(ValueError):
        g.neighbors(node, EdgeType.AFFECTS, "sideways")


def test_dangling_references_are_dropped_and_counted():
    bundle = SnapshotBundle(cves=[_cve(cwe_ids=["CWE-9999"])])
    graph = build_graph(bundle, vocab=TINY_VOCAB)
    assert graph.stats.dangling_dropped[EdgeType.WEAKENED_BY] == 1
    assert graph.find(NodeLabel.CWE, "CWE-9999") is None  # no stub node
    assert graph.edge_count == 0


def test_frozen_graph_rejects_writes():
    g = PropertyGraph().freeze()
    with pytest.raises(GraphFrozenError):
        g.upsert_node(NodeLabel.NVD_CVE, "CVE-2021-38000")


def test_in_out_adjacency_consistency():
    graph = build_graph(random_bundle(seed=7, scale=1) , vocab=None)
    for src, edge_type, dst in graph.edges():
        assert dst in graph.neighbors(src, edge_type, "out")
        assert src in graph.neighbors(dst, edge_type, "in")


def test_rebuild_is_isomorphic():
    bundle = random_bundle(seed=11)
    attributions = random_attributions(5, bundle)
    first = build_graph(bundle, attributions)
    second = build_graph(bundle, attributions)
    assert graph_signature(first) == graph_signature(second)


def test_snapshot_round_trip(tmp_path):
    bundle = random_bundle(seed=13)
    graph = build_graph(bundle, random_attributions(3, bundle))
    path = tmp_path / "graph.jsonl"
    save_graph(graph, path)
    reloaded = load_graph(path)
    assert reloaded.frozen
    assert graph_signature(reloaded) == graph_signature(graph)
    # deterministic bytes
    again = tmp_path / "graph2.jsonl"
    save_graph(reloaded, again)
    assert path.read_bytes() == again.read_bytes()


# ---------------------------------------------------------------------------
# Case-study fixture queries
# ---------------------------------------------------------------------------


def test_case_graph_has_three_kev_edges(case_graph):
    kev_edges = [e for e in case_graph.edges() if e[1] is EdgeType.EXPLOITS_KNOWN]
    assert len(kev_edges) == 3


def test_case_graph_kev_neighbor(case_graph):
    keys = case_graph.neighbor_keys(NodeLabel.NVD_CVE, "CVE-2021-38000",
                                    EdgeType.EXPLOITS_KNOWN, "out")
    assert keys == {"CVE-2021-38000"}  # catalog entries are keyed by CVE id


def test_case_graph_candidate_pool(case_graph, case_org):
    assert len(cves_affecting(case_graph, case_org.cpe_ids)) == 39


def test_cves_affecting_empty_and_shared():
    cpe_a = "cpe:2.3:a:v:a:-:*:*:*:*:*:*:*"
    cpe_b = "cpe:2.3:a:v:b:-:*:*:*:*:*:*:*"
    bundle = SnapshotBundle(
        cves=[_cve(cpes=[cpe_a, cpe_b])],
        cpes=[CpeEntry(cpe_id=cpe_a, vendor="v", product="a"),
              CpeEntry(cpe_id=cpe_b, vendor="v", product="b")],
    )
    graph = build_graph(bundle, vocab=TINY_VOCAB)
    assert cves_affecting(graph, []) == set()
    assert cves_affecting(graph, [cpe_a, cpe_b]) == {"CVE-2021-38000"}


def test_techniques_for_cve_chain(case_graph):
    assert techniques_for_cve(case_graph, "CVE-2021-38000") == \
        {("T1566", "CAPEC-194", "CWE-601")}


def test_techniques_for_cve_without_cwe():
    graph = build_graph(SnapshotBundle(cves=[_cve()]), vocab=TINY_VOCAB)
    assert techniques_for_cve(graph, "CVE-2021-38000") == set()


def test_techniques_for_cve_diamond():
    bundle = SnapshotBundle(
        cves=[_cve(cwe_ids=["CWE-79"])],
        cwes=[CweEntry("CWE-79", "xss", (), ("CAPEC-63", "CAPEC-591"))],
        capecs=[CapecEntry("CAPEC-63", "a", SkillLevel.LOW, ("T1059",)),
                CapecEntry("CAPEC-591", "b", SkillLevel.LOW, ("T1059",))],
        techniques=[AttackTechnique("T1059", "t", ("TA0002",))],
        tactics=[AttackTactic("TA0002", "execution")],
    )
    graph = build_graph(bundle, vocab=TINY_VOCAB)
    paths = techniques_for_cve(graph, "CVE-2021-38000")
    assert len(paths) == 2
    assert {t for t, _c, _w in paths} == {"T1059"}


def test_groups_threatening_fixture(case_graph):
    assert groups_threatening(case_graph, "Education", "United States",
                              {"China"}) == {"G0901"}
    assert groups_threatening(case_graph, "Education", "United States",
                              {"Iran"}) == set()
    assert groups_threatening(case_graph, "Education", "United States") == {"G0901"}
    assert groups_threatening(case_graph, "Nonexistent Sector",
                              "United States", set()) == set()


def test_us_filter_excludes_non_us_group(case_graph):
    # Grey Heron targets only South Korea; the build filters its
    # attribution edges out, so it threatens no sector.
    node = case_graph.find(NodeLabel.ATTACK_GROUP, "G0903")
    assert node is not None  # the group node itself is kept
    assert case_graph.neighbors(node.node_id, EdgeType.FOCUS_ON, "out") == set()


def test_case_graph_conformance_audit(case_graph):
    assert audit_edge_conformance(case_graph) == []


def test_epss_becomes_cve_properties(case_graph):
    node = case_graph.find(NodeLabel.NVD_CVE, "CVE-2021-38000")
    assert node.props["epss_probability"] == 0.876
    assert node.props["epss_percentile"] == 0.94


def test_schema_table_is_complete():
    assert set(EDGE_ENDPOINTS) == set(EdgeType)
    assert len(EdgeType) == 16
    assert len(NodeLabel) == 14


def test_attribution_for_unknown_group_counts_as_dangling():
    attribution = GroupAttribution(
        group_id="G9999", origin_countries=("China",), origin_year=2000,
        targeted_countries=("United States",), targeted_sectors=("Education",),
        evidence=())
    graph = build_graph(SnapshotBundle(), [attribution], vocab=TINY_VOCAB)
    assert graph.stats.dangling_dropped["attribution"] == 1


def test_group_achieves_goal_edges():
    bundle = SnapshotBundle(
        techniques=[AttackTechnique("T1059", "t", ("TA0002",))],
        tactics=[AttackTactic("TA0002", "execution")],
        groups=[AttackGroupRaw("G0001", "g", "d", date(2018, 1, 1), ("T1059", "T9999"))],
    )
    graph = build_graph(bundle, vocab=TINY_VOCAB)
    achieved = [e for e in graph.edges() if e[1] is EdgeType.ACHIEVES_GOAL]
    assert len(achieved) == 1
    assert graph.stats.dangling_dropped[EdgeType.ACHIEVES_GOAL] == 1
    tactics = [e for e in graph.edges() if e[1] is EdgeType.ACHIEVED_THROUGH]
    assert len(tactics) == 1
