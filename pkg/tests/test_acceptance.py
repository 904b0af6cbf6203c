"""One test per acceptance criterion; a PASS/FAIL line for each is printed at the end of the run."""

import json
import random
import shutil
import time

import pytest

from cckg.catalog import builtin_example_catalog, catalog_to_triples
from cckg.cli import main
from cckg.cve import cve_iri, ingest_directory, record_to_triples
from cckg.linker import build_rules, link
from cckg.ontology import (
    RDF_TYPE,
    OWL_CLASS,
    OWL_DATATYPE_PROPERTY,
    OWL_OBJECT_PROPERTY,
    ViolationKind,
    builtin_schema,
    validate,
)
from cckg.query import cves_by_cwe, cves_for_service, evaluate
from cckg.rdf import XSD_BOOLEAN, XSD_DATETIME, XSD_DECIMAL, Graph, Iri, Literal, Triple, parse_ntriples, serialize_ntriples

from conftest import FIXTURES, GOLDEN, make_cve, write_cve
from oracles import (
    brute_force_evaluate,
    double_loop_links,
    random_catalog,
    random_graph,
    random_product_graph,
    random_query,
)
from test_ontology import NAMED_CLASSES

pytestmark = pytest.mark.acceptance


def _cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_schema_inventory(capsys, tmp_path, ns):
    """AC1 schema inventory: 27 classes, 16 object properties, 27 data properties, named terms present, < 1 s"""
    start = time.perf_counter()
    code, _, _ = _cli(capsys, "schema", "-o", tmp_path / "schema.nt")
    elapsed = time.perf_counter() - start
    assert code == 0
    text = (tmp_path / "schema.nt").read_text(encoding="utf-8")
    assert text == (GOLDEN / "schema.nt").read_text(encoding="utf-8")
    g = parse_ntriples(text)
    assert len(g.subjects(RDF_TYPE, OWL_CLASS)) == 27
    assert len(g.subjects(RDF_TYPE, OWL_OBJECT_PROPERTY)) == 16
    assert len(g.subjects(RDF_TYPE, OWL_DATATYPE_PROPERTY)) == 27
    assert {ns.term(c) for c in NAMED_CLASSES} <= g.subjects(RDF_TYPE, OWL_CLASS)
    for prop in ("offerServices", "provides", "hasComponent", "componentImpactedByCVE"):
        assert ns.term(prop) in g.subjects(RDF_TYPE, OWL_OBJECT_PROPERTY)
    assert elapsed < 1.0


def test_aks_worked_example(capsys, tmp_path, ns):
    """AC2 AKS worked example: build emits componentImpactedByCVE and use case 1 returns exactly CVE-2021-24109, < 1 s"""
    cves = tmp_path / "cves"
    cves.mkdir()
    shutil.copy(FIXTURES / "cves" / "CVE-2021-24109.json", cves)
    graph_path = tmp_path / "g.nt"
    start = time.perf_counter()
    code, _, _ = _cli(capsys, "build", "example", cves, "-o", graph_path)
    g = parse_ntriples(graph_path.read_text(encoding="utf-8"))
    edge = Triple(ns.ind("kubernetes"), ns.term("componentImpactedByCVE"), cve_iri("CVE-2021-24109"))
    rows = evaluate(cves_for_service(ns.ind("aks")), g).rows
    qcode, out, _ = _cli(capsys, "query", graph_path, "cves-for-service:aks", "--format", "json")
    elapsed = time.perf_counter() - start
    assert code == 0 and qcode == 0
    assert edge in g
    assert [r["cve"] for r in rows] == [cve_iri("CVE-2021-24109")]
    assert [json.loads(line)["cve"] for line in out.splitlines()] == [cve_iri("CVE-2021-24109").value]
    assert elapsed < 1.0


def test_cwe_use_case(capsys, tmp_path):
    """AC3 use case 2: both CWE-475 CVEs come back adjacent under CWE ordering"""
    graph_path = tmp_path / "g.nt"
    assert _cli(capsys, "build", "example", FIXTURES / "cves", "-o", graph_path)[0] == 0
    code, out, _ = _cli(capsys, "query", graph_path, "cves-by-cwe", "--format", "json")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    wids = [r["wid"] for r in rows]
    assert wids == sorted(wids)
    hits = [i for i, r in enumerate(rows) if r["wid"] == "CWE-475"]
    assert [rows[i]["id"] for i in hits] == ["CVE-2021-24109", "CVE-2023-1234"]
    assert hits[1] == hits[0] + 1


# -- AC4 ----------------------------------------------------------------------

_CHARS = 'aZ09 \t\n\r"\\<>#/é\u00a0\u0085\u2028\U0001f600'


def _random_text(rng, n=8):
    return "".join(rng.choice(_CHARS) for _ in range(rng.randint(0, n)))


def _random_term(rng, object_pos):
    if not object_pos or rng.random() < 0.5:
        return Iri(f"http://example.org/{rng.choice(['a', 'b', 'c', 'ü', 'x%20y'])}/{rng.randint(0, 40)}#{rng.randint(0, 3)}")
    kind = rng.randrange(5)
    if kind == 0:
        return Literal(_random_text(rng))
    if kind == 1:
        return Literal(_random_text(rng), language=rng.choice(["en", "de", "en-GB"]))
    if kind == 2:
        return Literal(f"{rng.randint(-99, 99)}.{rng.randint(0, 9)}", XSD_DECIMAL)
    if kind == 3:
        return Literal(rng.choice(["true", "false"]), XSD_BOOLEAN)
    return Literal(f"202{rng.randint(0, 9)}-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}T12:00:00Z", XSD_DATETIME)


def test_round_trip_and_byte_stability():
    """AC4 round-trip: 100 random graphs (<= 500 triples) survive parse(serialize(G)) and serialize byte-stably"""
    rng = random.Random(4)
    for _ in range(100):
        triples = []
        for _ in range(rng.randint(0, 500)):
            triples.append(Triple(_random_term(rng, False), _random_term(rng, False), _random_term(rng, True)))
        g = Graph(triples)
        text = serialize_ntriples(g)
        assert parse_ntriples(text) == g
        rng.shuffle(triples)
        assert serialize_ntriples(Graph(triples)) == text


def test_query_oracle_equivalence():
    """AC5 query engine equals brute-force enumeration on 200 random cases, < 60 s"""
    start = time.perf_counter()
    for seed in range(200):
        rng = random.Random(50_000 + seed)
        g = random_graph(rng, 300)
        q = random_query(rng, 4)
        assert len(g) <= 300 and len(q.patterns) <= 4
        assert evaluate(q, g).rows == brute_force_evaluate(q, g), seed
    assert time.perf_counter() - start < 60.0


def test_linker_oracle_equivalence(ns):
    """AC6 linker equals the double-loop oracle on graphs of <= 200 products and is idempotent"""
    for seed in range(30):
        rng = random.Random(60_000 + seed)
        g = random_product_graph(rng, rng.randint(0, 400))
        assert len(g.subjects(RDF_TYPE, ns.term("Product"))) <= 200
        cat = random_catalog(rng, rng.randint(1, 10))
        rules = build_rules(cat)
        out, _ = link(g, rules)
        assert set(out) == double_loop_links(g, cat, ns), seed
        again, report = link(g | out, rules)
        assert len(again) == 0 and report.new_triples == 0


def test_validation_soundness(ns):
    """AC7 catalog, CVE and link triples validate cleanly; a reversed link gives exactly Domain + Range violations"""
    schema = builtin_schema()
    for seed in range(25):
        rng = random.Random(70_000 + seed)
        cat = random_catalog(rng, rng.randint(1, 6))
        cat_g = catalog_to_triples(cat)
        cve_g = random_product_graph(rng, rng.randint(0, 30))
        assert validate(cat_g, schema) == []
        assert validate(cve_g, schema) == []
        merged = cat_g | cve_g
        out, _ = link(merged, build_rules(cat))
        assert validate(merged | out, schema) == []
    example = catalog_to_triples(builtin_example_catalog())
    cves, _ = ingest_directory(FIXTURES / "cves")
    g = example | cves
    g.add(Triple(cve_iri("CVE-2021-24109"), ns.term("componentImpactedByCVE"), ns.ind("kubernetes")))
    assert sorted(v.kind for v in validate(g, schema)) == [ViolationKind.DOMAIN, ViolationKind.RANGE]


_MALFORMED = [
    '{"dataVersion": "5.1", "cveMetadata": ',
    "[1, 2, 3]",
    json.dumps(make_cve("CVE-2021-0001", data_version="4.0")),
    json.dumps(make_cve("CVE-21-1")),
    json.dumps(make_cve("CVE-2021-0002", score=12.5)),
]


def test_ingestion_robustness(capsys, tmp_path):
    """AC8 50 files with 5 malformed: exit 1, exactly 5 failures, graph equals the 45 good files alone"""
    mixed, good = tmp_path / "mixed", tmp_path / "good"
    mixed.mkdir()
    good.mkdir()
    rng = random.Random(8)
    bad_slots = set(rng.sample(range(50), 5))
    bad_iter = iter(_MALFORMED)
    for i in range(50):
        name = f"rec{i:02d}.json"
        if i in bad_slots:
            (mixed / name).write_text(next(bad_iter), encoding="utf-8")
            continue
        doc = make_cve(f"CVE-2022-{i:05d}", affected=[(rng.choice(["kubernetes", "docker", "acme"]), rng.choice(["kubernetes", "docker", "moby", "widget"]))],
                       cwes=[f"CWE-{rng.randint(1, 900)}"], score=round(rng.uniform(0, 10), 1))
        write_cve(mixed, doc, name)
        write_cve(good, doc, name)

    _, stats = ingest_directory(mixed)
    assert stats.files_read == 50 and stats.records_ok == 45 and len(stats.failures) == 5

    code, mixed_out, err = _cli(capsys, "build", "example", mixed)
    assert code == 1
    assert err.count("failed ") == 5
    good_code, good_out, _ = _cli(capsys, "build", "example", good)
    assert good_code == 0
    assert parse_ntriples(mixed_out) == parse_ntriples(good_out)
    assert mixed_out == good_out
