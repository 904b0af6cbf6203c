import json
from pathlib import Path

import pytest

from cckg.catalog import builtin_example_catalog, catalog_to_triples
from cckg.cve import ingest_directory
from cckg.linker import build_rules, link
from cckg.namespaces import DEFAULT

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

_acceptance_results: list[tuple[str, str]] = []


def make_cve(
    cve_id,
    *,
    state="PUBLISHED",
    affected=(),
    cwes=(),
    score=None,
    vector=None,
    description="fixture description",
    data_version="5.1",
    **cna_extra,
):
    """Build a CVE Record 5.x document as a dict."""
    cna = {"descriptions": [{"lang": "en", "value": description}]}
    if affected:
        cna["affected"] = [
            {"vendor": v, "product": p, "versions": [{"version": "1.0", "status": "affected"}]} for v, p in affected
        ]
    if cwes:
        cna["problemTypes"] = [
            {"descriptions": [{"lang": "en", "type": "CWE", "cweId": c, "description": f"{c} name"} for c in cwes]}
        ]
    if score is not None:
        metric = {
            "version": "3.1",
            "baseScore": score,
            "vectorString": vector or "CVSS:3.1/AV:P/AC:H/PR:N/UI:N/S:U/C:H/I:H/A:H",
        }
        cna["metrics"] = [{"format": "CVSS", "cvssV3_1": metric}]
    cna.update(cna_extra)
    if state == "REJECTED":
        cna = {"rejectedReasons": [{"lang": "en", "value": "rejected"}]}
    return {
        "dataType": "CVE_RECORD",
        "dataVersion": data_version,
        "cveMetadata": {"cveId": cve_id, "state": state},
        "containers": {"cna": cna},
    }


def write_cve(directory: Path, doc: dict, name=None) -> Path:
    path = directory / (name or f"{doc['cveMetadata']['cveId']}.json")
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


@pytest.fixture
def ns():
    return DEFAULT


@pytest.fixture
def example_catalog():
    return builtin_example_catalog()


@pytest.fixture
def seeded_graph():
    """Example catalog + the three on-disk CVE fixtures + links."""
    cat = builtin_example_catalog()
    g = catalog_to_triples(cat)
    cves, _ = ingest_directory(FIXTURES / "cves")
    g.update(cves)
    links, _ = link(g, build_rules(cat))
    g.update(links)
    return g


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.get_closest_marker("acceptance") and report.when == "call":
        doc = (item.obj.__doc__ or item.name).strip().splitlines()[0]
        _acceptance_results.append(("PASS" if report.passed else "FAIL", doc))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for status, doc in _acceptance_results:
        terminalreporter.write_line(f"[{status}] {doc}")
