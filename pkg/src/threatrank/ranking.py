"""Weekly candidate cohorts and the four vulnerability ranking policies.

Candidates are the intersection of CVEs affecting an organization's
resolved CPEs with a date range, grouped by the ISO week of the CVE
modification date (the date that simulates when a vulnerability presents
itself for analysis).

The threat policies score each candidate by summing six binary features
and flooring at 1, so every applicable CVE stays a candidate:

* APT threat: network attack vector; a weakness->attack-pattern->technique
  path reaching a group focused on the organization's sector; such a group
  targeting the organization's country; such a group originating from a
  configured country of interest; the EPSS gate; software affected.
* General threat: network vector; a CWE->CAPEC path whose attacker skill
  matches the configured level; such a CAPEC employing at least one
  technique; a CWE failure-class impact (code execution, privilege gain,
  data modification, protection bypass); the EPSS gate; software affected.
* Ideal: the same features as either threat policy, with the EPSS gate
  replaced by observed exploit evidence (KEV or ExploitDB); it serves as
  the nDCG ground truth.

Scoring is pure given a frozen graph; output order never depends on
evaluation order (ties break on ascending CVE id).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum
from typing import Iterable, Mapping

from .feeds import AttackVector, SkillLevel, TechnicalImpact
from .kgraph import EdgeType, NodeLabel, PropertyGraph, techniques_for_cve
from .profiles import OrganizationProfile, resolved_cpe_ids

log = logging.getLogger(__name__)

# CWE technical impacts treated as failure-class ("high impact") for the
# general-threat policy.
FAILURE_IMPACTS = frozenset({
    TechnicalImpact.EXECUTE_UNAUTHORIZED_CODE.value,
    TechnicalImpact.GAIN_PRIVILEGES.value,
    TechnicalImpact.MODIFY_DATA.value,
    TechnicalImpact.BYPASS_PROTECTION.value,
})

DEFAULT_ORIGIN_COUNTRIES = frozenset({"China", "Russia", "Iran"})
DEFAULT_EPSS_THRESHOLD = 0.876


class Policy(Enum):
    CVSS_BASE = "cvss_base"
    APT_THREAT = "apt_threat"
    GENERAL_THREAT = "general_threat"
    IDEAL = "ideal"


class IdealMode(Enum):
    """Which threat policy's features the ideal ranking mirrors."""

    APT = "apt"
    GENERAL = "general"


@dataclass(frozen=True)
class PolicyConfig:
    policy: Policy
    origin_countries: frozenset[str] = DEFAULT_ORIGIN_COUNTRIES
    skill_level: SkillLevel = SkillLevel.HIGH
    epss_threshold: float = DEFAULT_EPSS_THRESHOLD
    risk_appetite: int = 100
    k: int = 20
    ideal_mode: IdealMode = IdealMode.APT

    def __post_init__(self):
        if not 0.0 <= self.epss_threshold <= 1.0:
            raise ValueError(f"epss_threshold outside [0,1]: {self.epss_threshold}")
        if not 0 <= self.risk_appetite <= 100:
            raise ValueError(f"risk_appetite outside [0,100]: {self.risk_appetite}")
        if self.k < 1:
            raise ValueError(f"k must be positive: {self.k}")
        if self.skill_level not in (SkillLevel.LOW, SkillLevel.HIGH):
            raise ValueError("skill_level must be Low or High")


@dataclass(frozen=True)
class OrgContext:
    """The slice of an organization the scoring functions need."""

    org_id: str
    sector: str
    country: str
    cpe_ids: frozenset[str]

    @classmethod
    def from_profile(cls, profile: OrganizationProfile) -> "OrgContext":
        return cls(
            org_id=profile.org_id,
            sector=profile.sector,
            country=profile.country,
            cpe_ids=resolved_cpe_ids(profile),
        )

    @classmethod
    def from_graph(cls, graph: PropertyGraph, org_id: str) -> "OrgContext":
        """Reconstruct the context from Organization/Software/Cpe nodes."""
        node = graph.find(NodeLabel.ORGANIZATION, org_id)
        if node is None:
            raise KeyError(f"organization {org_id!r} not present in the graph")
        cpes: set[str] = set()
        for software_id in graph.neighbors(node.node_id, EdgeType.INSTALLS, "out"):
            for cpe_id in graph.neighbors(software_id, EdgeType.HAS_VERSION, "out"):
                cpes.add(graph.node(cpe_id).key)
        return cls(
            org_id=org_id,
            sector=node.props.get("sector", ""),
            country=node.props.get("country", ""),
            cpe_ids=frozenset(cpes),
        )


@dataclass(frozen=True)
class WeeklyCohort:
    org_id: str
    iso_week: tuple[int, int]  # (ISO year, ISO week number)
    cve_ids: tuple[str, ...]


@dataclass(frozen=True)
class RankedItem:
    cve_id: str
    score: float
    rank: int
    feature_bits: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class RankedList:
    org_id: str
    policy: Policy
    iso_week: tuple[int, int]
    items: tuple[RankedItem, ...]

    def score_of(self) -> dict[str, float]:
        return {item.cve_id: item.score for item in self.items}

    def rank_of(self) -> dict[str, int]:
        return {item.cve_id: item.rank for item in self.items}


def iso_week_of(day: date) -> tuple[int, int]:
    cal = day.isocalendar()
    return (cal[0], cal[1])


def iter_iso_weeks(start: date, end: date) -> Iterable[tuple[int, int]]:
    """ISO weeks intersecting [start, end], in chronological order."""
    day = start - timedelta(days=start.weekday())
    while day <= end:
        yield iso_week_of(day)
        day += timedelta(days=7)


def generate_candidates(
    org: OrgContext,
    graph: PropertyGraph,
    date_range: tuple[date, date],
) -> list[WeeklyCohort]:
    """Weekly candidate cohorts for one organization.

    A CVE is a candidate when it affects at least one of the organization's
    resolved CPEs and its modification date falls inside the (inclusive)
    range.  Each CVE lands in the ISO week of its modification date; since
    snapshot parsing keeps the latest record per CVE id, a CVE modified
    twice appears only in the week of its latest modification.
    """
    start, end = date_range
    if start > end:
        raise ValueError(f"empty date range: {start} > {end}")
    weeks: dict[tuple[int, int], set[str]] = {}
    for cpe_id in org.cpe_ids:
        cpe_node = graph.find(NodeLabel.CPE, cpe_id)
        if cpe_node is None:
            continue
        for cve_nid in graph.neighbors(cpe_node.node_id, EdgeType.AFFECTS, "in"):
            cve = graph.node(cve_nid)
            modified = date.fromisoformat(cve.props["modified"])
            if start <= modified <= end:
                weeks.setdefault(iso_week_of(modified), set()).add(cve.key)
    return [
        WeeklyCohort(org_id=org.org_id, iso_week=week, cve_ids=tuple(sorted(cve_ids)))
        for week, cve_ids in sorted(weeks.items())
    ]


# ---------------------------------------------------------------------------
# Per-policy feature bits
# ---------------------------------------------------------------------------


def _cve_node(graph: PropertyGraph, cve_id: str):
    node = graph.find(NodeLabel.NVD_CVE, cve_id)
    if node is None:
        raise KeyError(f"CVE {cve_id!r} not present in the graph")
    return node


def _threat_groups(graph: PropertyGraph, cve_id: str) -> set[int]:
    """Node ids of groups reachable from the CVE via its technique paths."""
    groups: set[int] = set()
    for technique_id, _capec, _cwe in techniques_for_cve(graph, cve_id):
        tech = graph.find(NodeLabel.ATTACK_ENTERPRISE_TECHNIQUE, technique_id)
        if tech is not None:
            groups |= graph.neighbors(tech.node_id, EdgeType.ACHIEVES_GOAL, "in")
    return groups


def _epss_bit(node, config: PolicyConfig) -> int:
    """EPSS gate: probability at threshold and percentile within appetite."""
    probability = node.props.get("epss_probability")
    percentile = node.props.get("epss_percentile")
    if probability is None or percentile is None:
        return 0
    passed = (probability >= config.epss_threshold
              and percentile * 100.0 >= 100.0 - config.risk_appetite)
    return int(passed)


def _exploit_bit(graph: PropertyGraph, node) -> int:
    in_kev = bool(graph.neighbors(node.node_id, EdgeType.EXPLOITS_KNOWN, "out"))
    in_exploitdb = bool(graph.neighbors(node.node_id, EdgeType.REFERENCE_EXPLOIT, "out"))
    return int(in_kev or in_exploitdb)


def _affects_bit(graph: PropertyGraph, node, org: OrgContext) -> int:
    affected = {graph.node(i).key for i in graph.neighbors(node.node_id, EdgeType.AFFECTS, "out")}
    return int(bool(affected & org.cpe_ids))


def apt_threat_bits(
    graph: PropertyGraph,
    cve_id: str,
    org: OrgContext,
    config: PolicyConfig,
    exploit_evidence: bool = False,
) -> dict[str, int]:
    """The six APT-threat feature bits for one candidate.

    The sector/country/origin bits are witnessed by groups reachable from
    the CVE through its weakness->attack-pattern->technique paths; the
    country and origin bits are witnessed by groups that also satisfy the
    sector bit.
    """
    node = _cve_node(graph, cve_id)
    focused_groups = set()
    for group_nid in _threat_groups(graph, cve_id):
        sectors = {graph.node(i).key
                   for i in graph.neighbors(group_nid, EdgeType.FOCUS_ON, "out")}
        if org.sector in sectors:
            focused_groups.add(group_nid)
    targets_country = False
    origin_match = False
    for group_nid in focused_groups:
        targeted = {graph.node(i).key
                    for i in graph.neighbors(group_nid, EdgeType.TARGETS, "out")}
        if org.country in targeted:
            targets_country = True
        origins = {graph.node(i).key
                   for i in graph.neighbors(group_nid, EdgeType.ORIGINATES, "out")}
        if origins & config.origin_countries:
            origin_match = True
    bits = {
        "av_network": int(node.props.get("attack_vector") == AttackVector.NETWORK.value),
        "sector_focus": int(bool(focused_groups)),
        "targets_country": int(targets_country),
        "origin_match": int(origin_match),
        "epss_gate": _epss_bit(node, config),
        "affects_software": _affects_bit(graph, node, org),
    }
    if exploit_evidence:
        del bits["epss_gate"]
        bits["exploit_known"] = _exploit_bit(graph, node)
    return bits


def general_threat_bits(
    graph: PropertyGraph,
    cve_id: str,
    org: OrgContext,
    config: PolicyConfig,
    exploit_evidence: bool = False,
) -> dict[str, int]:
    """The six general-threat feature bits for one candidate."""
    node = _cve_node(graph, cve_id)
    # Skill matching and the technique link are independent bits over the
    # CVE's attack patterns, so changing the configured skill level moves
    # the relevance by exactly the skill bit.
    skill_match = False
    capec_has_technique = False
    for cwe_nid in graph.neighbors(node.node_id, EdgeType.WEAKENED_BY, "out"):
        for capec_nid in graph.neighbors(cwe_nid, EdgeType.KNOWN_ATTACK, "out"):
            capec = graph.node(capec_nid)
            if capec.props.get("skill_level") == config.skill_level.value:
                skill_match = True
            if graph.neighbors(capec_nid, EdgeType.EMPLOYS, "out"):
                capec_has_technique = True
    failure_impact = False
    for cwe_nid in graph.neighbors(node.node_id, EdgeType.WEAKENED_BY, "out"):
        impacts = set(graph.node(cwe_nid).props.get("technical_impacts", ()))
        if impacts & FAILURE_IMPACTS:
            failure_impact = True
            break
    bits = {
        "av_network": int(node.props.get("attack_vector") == AttackVector.NETWORK.value),
        "skill_match": int(skill_match),
        "technique_link": int(capec_has_technique),
        "failure_impact": int(failure_impact),
        "epss_gate": _epss_bit(node, config),
        "affects_software": _affects_bit(graph, node, org),
    }
    if exploit_evidence:
        del bits["epss_gate"]
        bits["exploit_known"] = _exploit_bit(graph, node)
    return bits


def score_from_bits(bits: Mapping[str, int]) -> int:
    """Relevance is the bit sum floored at 1 so candidates stay relevant."""
    return max(1, sum(bits.values()))


def score_cvss_base(graph: PropertyGraph, cve_id: str) -> float:
    """CVSS base score; missing scores rank last with a warning."""
    node = _cve_node(graph, cve_id)
    score = node.props.get("cvss_base")
    if score is None:
        log.warning("%s has no CVSS base score; treating as 0.0", cve_id)
        return 0.0
    return float(score)


def score_apt_threat(graph, cve_id, org, config) -> int:
    return score_from_bits(apt_threat_bits(graph, cve_id, org, config))


def score_general_threat(graph, cve_id, org, config) -> int:
    return score_from_bits(general_threat_bits(graph, cve_id, org, config))


def score_ideal(graph, cve_id, org, config, mode: IdealMode | None = None) -> int:
    mode = mode or config.ideal_mode
    if mode is IdealMode.APT:
        bits = apt_threat_bits(graph, cve_id, org, config, exploit_evidence=True)
    else:
        bits = general_threat_bits(graph, cve_id, org, config, exploit_evidence=True)
    return score_from_bits(bits)


# ---------------------------------------------------------------------------
# The 16-feature record backing a CVE/organization pairing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureRecord:
    """Everything the policies examine for one (CVE, organization) pair.

    Fields are populated from the graph or explicitly None/empty when the
    graph holds no value.
    """

    cve_id: str
    cvss_base: float | None
    attack_vector: str | None
    published: date | None
    modified: date | None
    capec_ids: tuple[str, ...]
    capec_skills: tuple[str, ...]
    technique_names: tuple[str, ...]
    group_ids: tuple[str, ...]
    group_countries: tuple[str, ...]
    risk_appetite: int
    epss_probability: float | None
    epss_percentile: float | None
    in_kev: bool
    in_exploitdb: bool
    org_id: str
    sector: str
    org_country: str


def build_feature_record(
    graph: PropertyGraph,
    cve_id: str,
    org: OrgContext,
    config: PolicyConfig,
) -> FeatureRecord:
    node = _cve_node(graph, cve_id)
    paths = techniques_for_cve(graph, cve_id)
    capec_ids = sorted({capec for _t, capec, _c in paths})
    capec_skills = []
    for capec_id in capec_ids:
        capec = graph.find(NodeLabel.CAPEC, capec_id)
        if capec is not None:
            capec_skills.append(capec.props.get("skill_level", SkillLevel.UNKNOWN.value))
    technique_names = []
    for technique_id in sorted({t for t, _c, _w in paths}):
        tech = graph.find(NodeLabel.ATTACK_ENTERPRISE_TECHNIQUE, technique_id)
        if tech is not None:
            technique_names.append(tech.props.get("name") or technique_id)
    group_ids = sorted(graph.node(i).key for i in _threat_groups(graph, cve_id))
    group_countries: set[str] = set()
    for group_id in group_ids:
        group = graph.find(NodeLabel.ATTACK_GROUP, group_id)
        group_countries |= {graph.node(i).key
                            for i in graph.neighbors(group.node_id, EdgeType.ORIGINATES, "out")}
    return FeatureRecord(
        cve_id=cve_id,
        cvss_base=node.props.get("cvss_base"),
        attack_vector=node.props.get("attack_vector"),
        published=date.fromisoformat(node.props["published"]) if "published" in node.props else None,
        modified=date.fromisoformat(node.props["modified"]) if "modified" in node.props else None,
        capec_ids=tuple(capec_ids),
        capec_skills=tuple(capec_skills),
        technique_names=tuple(technique_names),
        group_ids=tuple(group_ids),
        group_countries=tuple(sorted(group_countries)),
        risk_appetite=config.risk_appetite,
        epss_probability=node.props.get("epss_probability"),
        epss_percentile=node.props.get("epss_percentile"),
        in_kev=bool(graph.neighbors(node.node_id, EdgeType.EXPLOITS_KNOWN, "out")),
        in_exploitdb=bool(graph.neighbors(node.node_id, EdgeType.REFERENCE_EXPLOIT, "out")),
        org_id=org.org_id,
        sector=org.sector,
        org_country=org.country,
    )


# ---------------------------------------------------------------------------
# Ranking
# ---------------------------------------------------------------------------


def order_scored(scored: Iterable[tuple[str, float]]) -> list[tuple[str, float, int]]:
    """Order (cve, score) pairs: descending score, ascending CVE id, ranks 1..n."""
    ordered = sorted(scored, key=lambda pair: (-pair[1], pair[0]))
    return [(cve, score, position) for position, (cve, score) in enumerate(ordered, start=1)]


def rank(
    cohort: WeeklyCohort,
    config: PolicyConfig,
    graph: PropertyGraph,
    org: OrgContext,
) -> RankedList:
    """Rank one weekly cohort under the configured policy."""
    scored: list[tuple[str, float]] = []
    bits_by_cve: dict[str, Mapping[str, int]] = {}
    for cve_id in cohort.cve_ids:
        if config.policy is Policy.CVSS_BASE:
            scored.append((cve_id, score_cvss_base(graph, cve_id)))
        elif config.policy is Policy.APT_THREAT:
            bits = apt_threat_bits(graph, cve_id, org, config)
            bits_by_cve[cve_id] = bits
            scored.append((cve_id, float(score_from_bits(bits))))
        elif config.policy is Policy.GENERAL_THREAT:
            bits = general_threat_bits(graph, cve_id, org, config)
            bits_by_cve[cve_id] = bits
            scored.append((cve_id, float(score_from_bits(bits))))
        elif config.policy is Policy.IDEAL:
            if config.ideal_mode is IdealMode.APT:
                bits = apt_threat_bits(graph, cve_id, org, config, exploit_evidence=True)
            else:
                bits = general_threat_bits(graph, cve_id, org, config, exploit_evidence=True)
            bits_by_cve[cve_id] = bits
            scored.append((cve_id, float(score_from_bits(bits))))
        else:  # pragma: no cover - enum is exhaustive
            raise ValueError(f"unknown policy {config.policy}")
    items = tuple(
        RankedItem(cve_id=cve, score=score, rank=position,
                   feature_bits=dict(bits_by_cve.get(cve, {})))
        for cve, score, position in order_scored(scored)
    )
    return RankedList(org_id=cohort.org_id, policy=config.policy,
                      iso_week=cohort.iso_week, items=items)
