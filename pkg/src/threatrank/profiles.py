"""Organization profiles and software-inventory-to-CPE resolution.

A profile names the organization's DHS sector, country of residence, and
installed software.  Software is matched against the CPE dictionary by
case-insensitive, punctuation-stripped token equality on vendor and
product; when a version is supplied, exact-version dictionary entries are
preferred over product-level matches.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import DataError
from .feeds import CpeEntry
from .vocab import Vocabulary, default_vocabulary

_NON_ALNUM_RE = re.compile(r"[^a-z0-9]+")

# Size-class thresholds by product count, aligned with the benchmark
# organizations' groupings (22/23 small, 31/33 medium, 49 large, 69 XL).
SMALL_MAX = 23
MEDIUM_MAX = 33
LARGE_MAX = 49


class SizeClass(Enum):
    S = "Small"
    M = "Medium"
    L = "Large"
    XL = "Extra Large"


class ProfileError(DataError):
    """Profile file is malformed or names unknown vocabulary values."""


@dataclass(frozen=True)
class SoftwareItem:
    vendor: str
    product: str
    version: str | None = None
    resolved_cpes: tuple[str, ...] = ()


@dataclass(frozen=True)
class OrganizationProfile:
    org_id: str
    name: str
    sector: str
    country: str
    software: tuple[SoftwareItem, ...] = ()


@dataclass
class CoverageReport:
    """Per-item CPE match counts for one resolved profile."""

    rows: list[tuple[str, str, int]] = field(default_factory=list)

    @property
    def resolved(self) -> int:
        return sum(1 for _, _, n in self.rows if n > 0)

    @property
    def unresolved(self) -> int:
        return sum(1 for _, _, n in self.rows if n == 0)

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["vendor", "product", "matched_cpe_count"])
            writer.writerows(self.rows)


def normalize_token(value: str) -> str:
    """Lowercase and strip punctuation: 'Acrobat Reader' == 'acrobat_reader'."""
    return _NON_ALNUM_RE.sub("", value.lower())


def software_key(vendor: str, product: str) -> str:
    """Graph node key for a software item, shared across organizations."""
    return f"{normalize_token(vendor)}:{normalize_token(product)}"


def load_profile(path: str | Path, vocab: Vocabulary | None = None) -> OrganizationProfile:
    """Load and validate one organization profile (JSON).

    Unknown sector or country names are fatal: downstream attribution
    queries silently return nothing for values outside the vocabularies.
    """
    vocab = vocab or default_vocabulary()
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProfileError(f"{path}: not valid JSON ({exc})") from None
    for key in ("org_id", "name", "sector", "country"):
        if not isinstance(obj.get(key), str) or not obj[key]:
            raise ProfileError(f"{path}: missing or empty field {key!r}")
    if not vocab.is_sector(obj["sector"]):
        raise ProfileError(f"{path}: {obj['sector']!r} is not a DHS sector")
    if not vocab.is_country(obj["country"]):
        raise ProfileError(f"{path}: {obj['country']!r} is not a known country")
    software = []
    for i, raw in enumerate(obj.get("software", [])):
        if not isinstance(raw, dict) or not raw.get("vendor") or not raw.get("product"):
            raise ProfileError(f"{path}: software[{i}] needs vendor and product")
        software.append(SoftwareItem(
            vendor=str(raw["vendor"]),
            product=str(raw["product"]),
            version=str(raw["version"]) if raw.get("version") else None,
        ))
    return OrganizationProfile(
        org_id=obj["org_id"],
        name=obj["name"],
        sector=obj["sector"],
        country=obj["country"],
        software=tuple(software),
    )


def _cpe_version(cpe_id: str) -> str | None:
    # cpe:2.3:part:vendor:product:version:... (escaped colons not handled;
    # dictionary snapshots normalize them out)
    parts = cpe_id.split(":")
    return parts[5] if len(parts) > 5 else None


def resolve_cpes(
    profile: OrganizationProfile,
    dictionary: Iterable[CpeEntry],
) -> tuple[OrganizationProfile, CoverageReport]:
    """Resolve each software item against the CPE dictionary.

    An item matches an entry when normalized vendor and product tokens are
    both equal.  Items remain in the profile when unresolved; the coverage
    report counts them.  Resolution is deterministic (dictionary order) and
    monotone at the item level: adding entries never unmatches an item.
    """
    index: dict[tuple[str, str], list[CpeEntry]] = {}
    for entry in dictionary:
        index.setdefault((normalize_token(entry.vendor), normalize_token(entry.product)),
                         []).append(entry)

    resolved_items = []
    report = CoverageReport()
    for item in profile.software:
        matches = index.get((normalize_token(item.vendor), normalize_token(item.product)), [])
        if item.version:
            exact = [e for e in matches if _cpe_version(e.cpe_id) == item.version]
            if exact:
                matches = exact
        cpe_ids = tuple(dict.fromkeys(e.cpe_id for e in matches))
        resolved_items.append(replace(item, resolved_cpes=cpe_ids))
        report.rows.append((item.vendor, item.product, len(cpe_ids)))
    return replace(profile, software=tuple(resolved_items)), report


def resolved_cpe_ids(profile: OrganizationProfile) -> frozenset[str]:
    """All CPE identifiers resolved across the profile's inventory."""
    return frozenset(cpe for item in profile.software for cpe in item.resolved_cpes)


def size_class(profile: OrganizationProfile) -> SizeClass:
    """Size class from the number of listed software products."""
    count = len(profile.software)
    if count <= SMALL_MAX:
        return SizeClass.S
    if count <= MEDIUM_MAX:
        return SizeClass.M
    if count <= LARGE_MAX:
        return SizeClass.L
    return SizeClass.XL
