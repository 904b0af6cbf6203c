"""CVE Record Format 5.x JSON -> CveRecord -> CVE-ontology triples."""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Optional, Union

from .namespaces import DEFAULT, Namespaces, slugify
from .ontology import RDF_TYPE, RDFS_LABEL
from .rdf import XSD_DATETIME, XSD_DECIMAL, Graph, Iri, Literal, Triple, DATETIME_RE

log = logging.getLogger(__name__)

CVE_ID_RE = re.compile(r"CVE-[0-9]{4}-[0-9]{4,}")
CWE_ID_RE = re.compile(r"CWE-[0-9]+")
_DATA_VERSION_RE = re.compile(r"5\.[01](\.[0-9]+)?")

ATTACK_VECTORS = {"NETWORK", "ADJACENT_NETWORK", "LOCAL", "PHYSICAL"}
IMPACTS = {"NONE", "LOW", "HIGH"}
SCOPES = {"UNCHANGED", "CHANGED"}
_ENUMS = {
    "attackVector": ATTACK_VECTORS,
    "attackComplexity": {"LOW", "HIGH"},
    "privilegesRequired": {"NONE", "LOW", "HIGH"},
    "userInteraction": {"NONE", "REQUIRED"},
    "scope": SCOPES,
    "confidentialityImpact": IMPACTS,
    "integrityImpact": IMPACTS,
    "availabilityImpact": IMPACTS,
}
# CVSS v3 vector abbreviations -> JSON field / enumerated value
_VECTOR_KEYS = {
    "AV": ("attackVector", {"N": "NETWORK", "A": "ADJACENT_NETWORK", "L": "LOCAL", "P": "PHYSICAL"}),
    "AC": ("attackComplexity", {"L": "LOW", "H": "HIGH"}),
    "PR": ("privilegesRequired", {"N": "NONE", "L": "LOW", "H": "HIGH"}),
    "UI": ("userInteraction", {"N": "NONE", "R": "REQUIRED"}),
    "S": ("scope", {"U": "UNCHANGED", "C": "CHANGED"}),
    "C": ("confidentialityImpact", {"N": "NONE", "L": "LOW", "H": "HIGH"}),
    "I": ("integrityImpact", {"N": "NONE", "L": "LOW", "H": "HIGH"}),
    "A": ("availabilityImpact", {"N": "NONE", "L": "LOW", "H": "HIGH"}),
}
VERSION_STATUSES = {"affected", "unaffected", "unknown"}


class CveParseError(ValueError):
    """A CVE document that cannot be turned into a CveRecord."""

    def __init__(self, message: str, offset: Optional[int] = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class AffectedProduct:
    vendor: str
    product: str
    platforms: tuple[str, ...] = ()
    versions: tuple[tuple[str, str], ...] = ()
    default_status: Optional[str] = None


@dataclass(frozen=True)
class CvssMetric:
    cvss_version: str
    base_score: Decimal
    attack_vector: str
    attack_complexity: str
    privileges_required: str
    user_interaction: str
    scope: str
    confidentiality_impact: str
    integrity_impact: str
    availability_impact: str
    vector_string: Optional[str] = None


@dataclass(frozen=True)
class WeaknessRef:
    cwe_id: str
    cwe_name: Optional[str] = None


@dataclass(frozen=True)
class CveRecord:
    cve_id: str
    state: str
    assigner_short_name: Optional[str] = None
    date_published: Optional[str] = None
    date_updated: Optional[str] = None
    descriptions: tuple[tuple[str, str], ...] = ()
    affected: tuple[AffectedProduct, ...] = ()
    metrics: tuple[CvssMetric, ...] = ()
    weaknesses: tuple[WeaknessRef, ...] = ()
    references: tuple[str, ...] = ()
    credits: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not CVE_ID_RE.fullmatch(self.cve_id):
            raise CveParseError(f"malformed cveId {self.cve_id!r}")
        if self.state not in ("PUBLISHED", "REJECTED"):
            raise CveParseError(f"unsupported record state {self.state!r}")
        if self.state == "REJECTED" and self.metrics:
            raise CveParseError("REJECTED records carry no metrics")

    @property
    def description(self) -> Optional[str]:
        """English description if there is one, else the first."""
        for lang, text in self.descriptions:
            if lang.lower() == "en" or lang.lower().startswith("en-"):
                return text
        return self.descriptions[0][1] if self.descriptions else None


# --------------------------------------------------------------------------
# JSON -> CveRecord
# --------------------------------------------------------------------------


def _get(obj: Any, key: str, typ: type, where: str, default=None):
    if not isinstance(obj, dict):
        raise CveParseError(f"{where}: expected an object")
    value = obj.get(key, default)
    if value is not default and not isinstance(value, typ):
        raise CveParseError(f"{where}.{key}: expected {typ.__name__}")
    return value


def _timestamp(value: Optional[str], where: str) -> Optional[str]:
    if value is None:
        return None
    if not DATETIME_RE.fullmatch(value):
        raise CveParseError(f"{where}: {value!r} is not an ISO-8601 timestamp")
    return value


def _parse_vector(vector: str) -> dict:
    parts = vector.split("/")
    out = {}
    for part in parts[1:] if parts and parts[0].startswith("CVSS:") else parts:
        key, _, val = part.partition(":")
        if key in _VECTOR_KEYS:
            name, values = _VECTOR_KEYS[key]
            if val in values:
                out[name] = values[val]
    return out


def _parse_cvss(raw: dict, version: str, where: str) -> CvssMetric:
    vector = raw.get("vectorString")
    if vector is not None and not isinstance(vector, str):
        raise CveParseError(f"{where}.vectorString: expected str")
    fields = _parse_vector(vector) if vector else {}
    for name in _ENUMS:
        if name in raw:
            fields[name] = raw[name]
    for name, allowed in _ENUMS.items():
        if name not in fields:
            raise CveParseError(f"{where}.{name}: missing")
        if fields[name] not in allowed:
            raise CveParseError(f"{where}.{name}: {fields[name]!r} not in {sorted(allowed)}")
    score_raw = raw.get("baseScore")
    if isinstance(score_raw, bool) or not isinstance(score_raw, (int, float, str)):
        raise CveParseError(f"{where}.baseScore: missing or not a number")
    try:
        score = Decimal(str(score_raw))
    except InvalidOperation:
        raise CveParseError(f"{where}.baseScore: {score_raw!r} is not a number") from None
    if not score.is_finite() or not Decimal("0") <= score <= Decimal("10"):
        raise CveParseError(f"{where}.baseScore: {score_raw!r} outside [0.0, 10.0]")
    return CvssMetric(
        cvss_version=version,
        base_score=score,
        attack_vector=fields["attackVector"],
        attack_complexity=fields["attackComplexity"],
        privileges_required=fields["privilegesRequired"],
        user_interaction=fields["userInteraction"],
        scope=fields["scope"],
        confidentiality_impact=fields["confidentialityImpact"],
        integrity_impact=fields["integrityImpact"],
        availability_impact=fields["availabilityImpact"],
        vector_string=vector,
    )


def _parse_affected(item: dict, where: str) -> AffectedProduct:
    product = _get(item, "product", str, where)
    if not product or not product.strip():
        # CPE-only entries carry no product name; nothing to link against
        raise CveParseError(f"{where}.product: missing")
    vendor = _get(item, "vendor", str, where) or "n/a"
    platforms = tuple(_get(item, "platforms", list, where, []))
    if not all(isinstance(p, str) for p in platforms):
        raise CveParseError(f"{where}.platforms: expected strings")
    versions = []
    for j, v in enumerate(_get(item, "versions", list, where, [])):
        vwhere = f"{where}.versions[{j}]"
        value = _get(v, "version", str, vwhere)
        status = _get(v, "status", str, vwhere)
        if value is None or status is None:
            raise CveParseError(f"{vwhere}: version and status are required")
        if status not in VERSION_STATUSES:
            raise CveParseError(f"{vwhere}.status: {status!r} not in {sorted(VERSION_STATUSES)}")
        if isinstance(v.get("lessThan"), str):
            value = f"{value} to <{v['lessThan']}"
        elif isinstance(v.get("lessThanOrEqual"), str):
            value = f"{value} to <={v['lessThanOrEqual']}"
        versions.append((value, status))
    default_status = _get(item, "defaultStatus", str, where)
    return AffectedProduct(vendor.strip(), product.strip(), platforms, tuple(versions), default_status)


def _parse_weaknesses(problem_types: list, where: str) -> list[WeaknessRef]:
    out: list[WeaknessRef] = []
    for i, pt in enumerate(problem_types):
        for j, d in enumerate(_get(pt, "descriptions", list, f"{where}[{i}]", [])):
            dwhere = f"{where}[{i}].descriptions[{j}]"
            cwe = _get(d, "cweId", str, dwhere)
            text = _get(d, "description", str, dwhere)
            if cwe is None and text:
                m = CWE_ID_RE.match(text)
                cwe = m.group() if m else None
            if cwe is None or not CWE_ID_RE.fullmatch(cwe):
                continue
            name = text
            if name and name.startswith(cwe):
                name = name[len(cwe) :].strip(" :-") or None
            ref = WeaknessRef(cwe, name)
            if all(w.cwe_id != cwe for w in out):
                out.append(ref)
    return out


def parse_cve_json(text: Union[str, bytes]) -> CveRecord:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CveParseError("input is not UTF-8", exc.start) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise CveParseError(f"malformed JSON: {exc.msg}", offset) from exc
    if not isinstance(doc, dict):
        raise CveParseError("top level is not a JSON object")
    if doc.get("dataType", "CVE_RECORD") != "CVE_RECORD":
        raise CveParseError(f"unsupported dataType {doc.get('dataType')!r}")
    version = doc.get("dataVersion")
    if not isinstance(version, str) or not _DATA_VERSION_RE.fullmatch(version):
        raise CveParseError(f"unsupported dataVersion {version!r}")

    meta = _get(doc, "cveMetadata", dict, "$")
    if meta is None:
        raise CveParseError("missing cveMetadata")
    cve_id = _get(meta, "cveId", str, "$.cveMetadata")
    if not cve_id:
        raise CveParseError("missing cveMetadata.cveId")
    state = _get(meta, "state", str, "$.cveMetadata") or "PUBLISHED"
    common = dict(
        cve_id=cve_id,
        state=state,
        assigner_short_name=_get(meta, "assignerShortName", str, "$.cveMetadata"),
        date_published=_timestamp(_get(meta, "datePublished", str, "$.cveMetadata"), "$.cveMetadata.datePublished"),
        date_updated=_timestamp(_get(meta, "dateUpdated", str, "$.cveMetadata"), "$.cveMetadata.dateUpdated"),
    )

    containers = _get(doc, "containers", dict, "$", {})
    cna = _get(containers, "cna", dict, "$.containers", {})
    if state == "REJECTED":
        reasons = _get(cna, "rejectedReasons", list, "$.containers.cna", [])
        descs = tuple((r.get("lang", "en"), r["value"]) for r in reasons if isinstance(r, dict) and isinstance(r.get("value"), str))
        return CveRecord(descriptions=descs, **common)

    descs = []
    for i, d in enumerate(_get(cna, "descriptions", list, "$.containers.cna", [])):
        value = _get(d, "value", str, f"$.containers.cna.descriptions[{i}]")
        if value is not None:
            descs.append((_get(d, "lang", str, f"$.containers.cna.descriptions[{i}]") or "en", value))

    affected = tuple(
        _parse_affected(a, f"$.containers.cna.affected[{i}]")
        for i, a in enumerate(_get(cna, "affected", list, "$.containers.cna", []))
    )

    metrics = []
    for i, m in enumerate(_get(cna, "metrics", list, "$.containers.cna", [])):
        where = f"$.containers.cna.metrics[{i}]"
        if isinstance(m, dict) and isinstance(m.get("cvssV3_1"), dict):
            metrics.append(_parse_cvss(m["cvssV3_1"], "3.1", where + ".cvssV3_1"))
        elif isinstance(m, dict) and isinstance(m.get("cvssV3_0"), dict):
            metrics.append(_parse_cvss(m["cvssV3_0"], "3.0", where + ".cvssV3_0"))

    weaknesses = _parse_weaknesses(_get(cna, "problemTypes", list, "$.containers.cna", []), "$.containers.cna.problemTypes")

    refs = []
    for i, r in enumerate(_get(cna, "references", list, "$.containers.cna", [])):
        url = _get(r, "url", str, f"$.containers.cna.references[{i}]")
        if url and url not in refs:
            refs.append(url)

    credits = []
    for i, c in enumerate(_get(cna, "credits", list, "$.containers.cna", [])):
        value = _get(c, "value", str, f"$.containers.cna.credits[{i}]")
        if value and value.strip():
            credits.append((value.strip(), _get(c, "type", str, f"$.containers.cna.credits[{i}]") or "finder"))

    return CveRecord(
        descriptions=tuple(descs),
        affected=affected,
        metrics=tuple(metrics),
        weaknesses=tuple(weaknesses),
        references=tuple(refs),
        credits=tuple(credits),
        **common,
    )


# --------------------------------------------------------------------------
# CveRecord -> triples
# --------------------------------------------------------------------------


def cve_iri(cve_id: str, ns: Namespaces = DEFAULT) -> Iri:
    return ns.ind("cve", cve_id)


def product_iri(vendor: str, product: str, ns: Namespaces = DEFAULT) -> Iri:
    return ns.ind("product", slugify(vendor), slugify(product))


def vendor_iri(vendor: str, ns: Namespaces = DEFAULT) -> Iri:
    return ns.ind("vendor", slugify(vendor))


def cwe_iri(cwe_id: str, ns: Namespaces = DEFAULT) -> Iri:
    return ns.ind("cwe", cwe_id)


def record_to_triples(record: CveRecord, ns: Namespaces = DEFAULT) -> Graph:
    t = ns.term
    g = Graph()
    cve = cve_iri(record.cve_id, ns)

    def lit(s, prop, value, datatype=None):
        g.add(Triple(s, t(prop), Literal(value) if datatype is None else Literal(value, datatype)))

    g.add(Triple(cve, RDF_TYPE, t("CVE")))
    lit(cve, "cveId", record.cve_id)
    lit(cve, "recordState", record.state)
    if record.state == "REJECTED":
        return g

    if record.description is not None:
        lit(cve, "description", record.description)
    if record.date_published:
        lit(cve, "datePublished", record.date_published, XSD_DATETIME)
    if record.date_updated:
        lit(cve, "dateUpdated", record.date_updated, XSD_DATETIME)
    for url in record.references:
        lit(cve, "referenceUrl", url)

    if record.assigner_short_name:
        name = record.assigner_short_name
        lit(cve, "assignerShortName", name)
        source = ns.ind("source", slugify(name))
        org = vendor_iri(name, ns)
        g.add(Triple(cve, t("hasInformationSource"), source))
        g.add(Triple(source, RDF_TYPE, t("CVEInformationSource")))
        g.add(Triple(source, RDFS_LABEL, Literal(name)))
        g.add(Triple(source, t("sourceOrganization"), org))
        g.add(Triple(org, RDF_TYPE, t("ProductVendor")))
        lit(org, "vendorName", name)

    for n, m in enumerate(record.metrics, start=1):
        metric = Iri(f"{cve.value}/metric/{n}")
        g.add(Triple(cve, t("hasMetric"), metric))
        g.add(Triple(metric, t("metricOfRecord"), cve))
        g.add(Triple(metric, RDF_TYPE, t("Metric")))
        lit(metric, "baseScore", str(m.base_score), XSD_DECIMAL)
        lit(metric, "cvssVersion", m.cvss_version)
        if m.vector_string:
            lit(metric, "vectorString", m.vector_string)
        lit(metric, "attackVector", m.attack_vector)
        lit(metric, "attackComplexity", m.attack_complexity)
        lit(metric, "privilegesRequired", m.privileges_required)
        lit(metric, "userInteraction", m.user_interaction)
        lit(metric, "scopeValue", m.scope)
        lit(metric, "confidentialityImpact", m.confidentiality_impact)
        lit(metric, "integrityImpact", m.integrity_impact)
        lit(metric, "availabilityImpact", m.availability_impact)

    for a in record.affected:
        prod = product_iri(a.vendor, a.product, ns)
        vend = vendor_iri(a.vendor, ns)
        g.add(Triple(cve, t("affectsProduct"), prod))
        g.add(Triple(prod, RDF_TYPE, t("Product")))
        lit(prod, "productName", a.product)
        if a.default_status:
            lit(prod, "defaultStatus", a.default_status)
        for value, status in a.versions:
            lit(prod, "versionValue", value)
            lit(prod, "versionStatus", status)
        g.add(Triple(prod, t("hasVendor"), vend))
        g.add(Triple(vend, RDF_TYPE, t("ProductVendor")))
        lit(vend, "vendorName", a.vendor)
        for platform in a.platforms:
            plat = ns.ind("platform", slugify(platform))
            g.add(Triple(cve, t("applicablePlatform"), plat))
            g.add(Triple(plat, RDF_TYPE, t("Platform")))
            lit(plat, "platformName", platform)

    for w in record.weaknesses:
        cwe = cwe_iri(w.cwe_id, ns)
        g.add(Triple(cve, t("hasWeakness"), cwe))
        g.add(Triple(cwe, t("weaknessObservedIn"), cve))
        g.add(Triple(cwe, RDF_TYPE, t("CWE")))
        lit(cwe, "cweId", w.cwe_id)
        if w.cwe_name:
            lit(cwe, "cweName", w.cwe_name)

    for name, _kind in record.credits:
        person = ns.ind("contributor", slugify(name))
        g.add(Triple(cve, t("hasContributor"), person))
        g.add(Triple(person, RDF_TYPE, t("Contributor")))
        lit(person, "contributorName", name)
    return g


# --------------------------------------------------------------------------
# directory ingestion
# --------------------------------------------------------------------------


@dataclass
class IngestStats:
    files_read: int = 0
    records_ok: int = 0
    records_skipped: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["failures"] = [{"file": f, "reason": r} for f, r in self.failures]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def summary(self) -> str:
        lines = [f"files read: {self.files_read}, records ok: {self.records_ok}, skipped: {self.records_skipped}"]
        lines += [f"  failed {f}: {r}" for f, r in self.failures]
        return "\n".join(lines)


def _load_file(path: Path, ns: Namespaces) -> Graph:
    return record_to_triples(parse_cve_json(path.read_bytes()), ns)


def ingest_directory(path, ns: Namespaces = DEFAULT, workers: int = 1) -> tuple[Graph, IngestStats]:
    """Parse every ``*.json`` under ``path`` (recursively) and merge the records.

    A file that fails to parse is recorded in the stats and skipped; only an
    unreadable directory raises.
    """
    root = Path(path)
    if not root.is_dir():
        raise OSError(f"not a readable directory: {root}")
    files = sorted(root.rglob("*.json"), key=lambda p: p.relative_to(root).as_posix())

    def work(p: Path):
        try:
            return _load_file(p, ns), None
        except (ValueError, OSError) as exc:
            return None, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, files))
    else:
        results = [work(p) for p in files]

    graph = Graph()
    stats = IngestStats()
    for p, (g, err) in zip(files, results):
        stats.files_read += 1
        rel = p.relative_to(root).as_posix()
        if err is not None:
            log.warning("skipping %s: %s", rel, err)
            stats.records_skipped += 1
            stats.failures.append((rel, err))
        else:
            stats.records_ok += 1
            graph.update(g)
    return graph, stats
