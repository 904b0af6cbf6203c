import json
import random

import pytest

from cckg.catalog import ComponentEntry, ProviderEntry, ServiceCatalog, ServiceEntry, catalog_to_triples
from cckg.cve import AffectedProduct, CveRecord, WeaknessRef, cve_iri, record_to_triples
from cckg.linker import build_rules, link
from cckg.query import (
    Query,
    QueryError,
    QuerySyntaxError,
    ResultTable,
    cves_by_cwe,
    cves_for_service,
    evaluate,
    format_query,
    parse_query,
)
from cckg.rdf import Graph, Iri, Literal, Triple

from oracles import brute_force_evaluate, random_graph, random_query

CC = "PREFIX cc: <http://w3id.org/cc-ontology#>\n"


def test_parse_single_pattern():
    q = parse_query(CC + "SELECT ?c WHERE { ?c a cc:ServiceComponent . }")
    assert len(q.patterns) == 1
    assert q.header == ["c"]
    assert q.patterns[0].object == Iri("http://w3id.org/cc-ontology#ServiceComponent")


def test_missing_brace_reports_last_line():
    text = CC + "SELECT ?c\nWHERE {\n  ?c a cc:ServiceComponent .\n"
    with pytest.raises(QuerySyntaxError) as exc:
        parse_query(text)
    assert exc.value.line == 4


def test_unbound_select_variable():
    with pytest.raises(QueryError, match=r"\?x"):
        parse_query(CC + "SELECT ?x WHERE { ?c a cc:ServiceComponent }")


def test_unknown_prefix_position():
    with pytest.raises(QuerySyntaxError) as exc:
        parse_query("SELECT ?c WHERE {\n  ?c a zz:Thing }")
    assert (exc.value.line, exc.value.column) == (2, 8)


def test_literals_and_filters():
    q = parse_query(
        CC + 'SELECT * WHERE { ?m cc:baseScore 6.4 . ?m cc:cvssVersion ?v FILTER(?v != "2.0") '
        'FILTER(contains(str(?v), "3")) } ORDER BY ?v LIMIT 5'
    )
    assert q.patterns[0].object.lexical == "6.4"
    assert [f.op for f in q.filters] == ["!=", "contains"]
    assert (q.order_by, q.limit) == ("v", 5)


def test_star_header_in_first_appearance_order():
    q = parse_query("SELECT * WHERE { ?b <http://e.org/p> ?a . ?a <http://e.org/p> ?c }")
    assert q.header == ["b", "a", "c"]


def test_empty_graph_empty_table():
    table = evaluate(cves_by_cwe(), Graph())
    assert table.rows == [] and table.header == ["wid", "id", "cwe", "cve"]


# -- the two reference use cases ------------------------------------------------


def test_use_case_service_cves(seeded_graph, ns):
    table = evaluate(cves_for_service(ns.ind("aks")), seeded_graph)
    assert set(table.column("cve")) == {cve_iri("CVE-2021-24109")}


def test_service_without_components(seeded_graph, ns):
    assert len(evaluate(cves_for_service(ns.ind("office365")), seeded_graph)) == 0


def _two_components_one_cve(ns):
    cat = ServiceCatalog(
        (ProviderEntry("p", "P"),),
        (ServiceEntry("s", "S", "p", "PaaS"),),
        (ComponentEntry("docker", "docker", "s"), ComponentEntry("moby", "moby", "s")),
    )
    rec = CveRecord("CVE-2022-0001", "PUBLISHED", affected=(AffectedProduct("d", "docker"), AffectedProduct("m", "moby")))
    g = catalog_to_triples(cat) | record_to_triples(rec)
    out, _ = link(g, build_rules(cat))
    return g | out


def test_two_components_share_cve(ns):
    table = evaluate(cves_for_service(ns.ind("s")), _two_components_one_cve(ns))
    assert len(table) == 2
    assert {r["c"].local_name for r in table.rows} == {"docker", "moby"}


def test_cwe_grouping_adjacent(seeded_graph):
    ids = [r["wid"].lexical for r in evaluate(cves_by_cwe(), seeded_graph).rows]
    assert ids == sorted(ids)
    assert ids.count("CWE-475") == 2
    first = ids.index("CWE-475")
    assert ids[first + 1] == "CWE-475"


def test_cve_without_weakness_absent():
    g = record_to_triples(CveRecord("CVE-2022-0002", "PUBLISHED"))
    g.update(record_to_triples(CveRecord("CVE-2022-0003", "PUBLISHED", weaknesses=(WeaknessRef("CWE-79", "XSS"),))))
    ids = [r["id"].lexical for r in evaluate(cves_by_cwe(), g).rows]
    assert ids == ["CVE-2022-0003"]


# -- oracle comparison --------------------------------------------------------


@pytest.mark.parametrize("seed", range(60))
def test_matches_brute_force(seed):
    rng = random.Random(seed)
    g = random_graph(rng)
    q = random_query(rng)
    assert evaluate(q, g).rows == brute_force_evaluate(q, g)


@pytest.mark.parametrize("seed", range(20))
def test_pattern_order_irrelevant(seed):
    rng = random.Random(500 + seed)
    g = random_graph(rng)
    q = random_query(rng)
    shuffled = list(q.patterns)
    rng.shuffle(shuffled)
    q2 = Query(q.prefixes, q.select if q.select is not None else tuple(q.pattern_vars()), tuple(shuffled), q.filters, q.order_by, q.limit)
    q1 = Query(q.prefixes, tuple(q.header), q.patterns, q.filters, q.order_by, q.limit)
    assert evaluate(q1, g).rows == evaluate(q2, g).rows


@pytest.mark.parametrize("seed", range(30))
def test_format_round_trip(seed):
    q = random_query(random.Random(900 + seed))
    assert parse_query(format_query(q)) == q


# -- output formats -----------------------------------------------------------


@pytest.fixture
def small_table():
    return ResultTable(["x", "n"], [{"x": Iri("http://e.org/a"), "n": Literal("A b")}])


def test_to_text(small_table):
    lines = small_table.to_text({"e": "http://e.org/"}).splitlines()
    assert lines[0].split() == ["x", "n"]
    assert lines[2].split() == ["e:a", "A", "b"]


def test_to_tsv(small_table):
    assert small_table.to_tsv() == '?x\t?n\n<http://e.org/a>\t"A b"\n'


def test_json_lines(small_table):
    assert json.loads(small_table.to_json_lines()) == {"x": "http://e.org/a", "n": "A b"}


def test_join_through_literal_object():
    e = lambda n: Iri("http://e.org/" + n)
    g = Graph([Triple(e("a"), e("name"), Literal("k")), Triple(e("b"), e("name"), Literal("k"))])
    q = parse_query("SELECT ?x ?y WHERE { ?x <http://e.org/name> ?n . ?y <http://e.org/name> ?n FILTER(?x != <http://e.org/a>) }")
    assert [(r["x"].local_name, r["y"].local_name) for r in evaluate(q, g).rows] == [("b", "a"), ("b", "b")]
