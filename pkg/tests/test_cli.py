import json
import subprocess
import sys

import pytest

from cckg.cli import main
from cckg.cve import cve_iri
from cckg.ontology import RDF_TYPE
from cckg.rdf import Graph, Triple, parse_ntriples, serialize_ntriples

from conftest import FIXTURES, GOLDEN, make_cve, write_cve


@pytest.fixture
def run(capsys):
    def _run(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err
    return _run


@pytest.fixture
def seeded_file(tmp_path, run):
    path = tmp_path / "g.nt"
    code, _, _ = run("build", "example", FIXTURES / "cves", "-o", path)
    assert code == 0
    return path


def test_schema_file_matches_golden(tmp_path, run):
    out = tmp_path / "schema.nt"
    assert run("schema", "-o", out)[0] == 0
    assert out.read_bytes() == (GOLDEN / "schema.nt").read_bytes()


def test_schema_stdout_same_bytes(run):
    code, out, _ = run("schema")
    assert code == 0 and out == (GOLDEN / "schema.nt").read_text(encoding="utf-8")


def test_schema_unwritable(tmp_path, run):
    code, _, err = run("schema", "-o", tmp_path / "missing" / "dir" / "s.nt")
    assert code == 2 and "cannot write" in err


def test_schema_other_namespace(run):
    code, out, _ = run("schema", "--namespace", "http://example.org/onto/")
    assert code == 0 and "<http://example.org/onto/CloudProvider>" in out


def test_bad_namespace(run):
    assert run("schema", "--namespace", "http://example.org/onto")[0] == 2


def test_env_namespace(run, monkeypatch):
    monkeypatch.setenv("CCKG_NAMESPACE", "http://example.org/env#")
    assert "<http://example.org/env#CVE>" in run("schema")[1]


def test_build_byte_stable(tmp_path, run):
    d = tmp_path / "cves"
    d.mkdir()
    write_cve(d, json.loads((FIXTURES / "cves" / "CVE-2021-24109.json").read_text()))
    outs = []
    for i in range(2):
        path = tmp_path / f"g{i}.nt"
        assert run("build", "example", d, "-o", path)[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_build_empty_dir_is_catalog_only(tmp_path, run, example_catalog):
    from cckg.catalog import catalog_to_triples

    d = tmp_path / "empty"
    d.mkdir()
    code, out, _ = run("build", "example", d)
    assert code == 0
    assert out == serialize_ntriples(catalog_to_triples(example_catalog))


def test_build_one_bad_file(tmp_path, run):
    d = tmp_path / "cves"
    d.mkdir()
    write_cve(d, make_cve("CVE-2021-24109", affected=[("kubernetes", "kubernetes")]))
    (d / "bad.json").write_text('{"dataVersion": "5.1",')
    code, _, err = run("build", "example", d, "-o", tmp_path / "g.nt")
    assert code == 1
    assert "records ok: 1, skipped: 1" in err
    assert err.count("failed ") == 1 and "bad.json" in err


def test_build_missing_catalog(tmp_path, run):
    assert run("build", tmp_path / "nope.json", FIXTURES / "cves")[0] == 2


def test_build_missing_cve_dir(tmp_path, run):
    assert run("build", "example", tmp_path / "nope")[0] == 2


def test_build_catalog_file(tmp_path, run):
    cat = tmp_path / "cat.json"
    cat.write_text(json.dumps({
        "providers": [{"id": "microsoft", "name": "Microsoft"}],
        "services": [{"id": "aks", "name": "AKS", "provider": "microsoft", "model": "PaaS"}],
        "components": [{"id": "kubernetes", "name": "Kubernetes", "service": "aks"}],
    }))
    code, out, err = run("build", cat, FIXTURES / "cves", "-v")
    assert code == 0
    assert "CVE-2021-24109" in err  # verbose prints the full link table
    assert f"{cve_iri('CVE-2021-24109').n3()} ." in out


def test_query_cves_by_cwe(seeded_file, run):
    code, out, _ = run("query", seeded_file, "cves-by-cwe")
    assert code == 0
    assert "CWE-475" in out


def test_query_service_by_slug(seeded_file, run):
    code, out, _ = run("query", seeded_file, "cves-for-service:aks", "--format", "tsv")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2
    assert cve_iri("CVE-2021-24109").n3() in lines[1]


def test_query_syntax_error(seeded_file, run):
    code, _, err = run("query", seeded_file, "SELECT ?x WHERE {\n ?x ?p ")
    assert code == 3 and "line 2" in err


def test_query_json(seeded_file, run):
    code, out, _ = run("query", seeded_file, "cves-by-cwe", "--format", "json")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and len(rows) == 3
    assert all(list(r) == ["wid", "id", "cwe", "cve"] for r in rows)


def test_query_from_file(tmp_path, seeded_file, run):
    qf = tmp_path / "q.rq"
    qf.write_text("PREFIX cc: <http://w3id.org/cc-ontology#>\nSELECT ?c WHERE { ?c a cc:ServiceComponent }\n")
    code, out, _ = run("query", seeded_file, qf)
    assert code == 0 and len(out.splitlines()) == 2 + 6


def test_query_format_not_allowed(seeded_file, run):
    assert run("query", seeded_file, "cves-by-cwe", "--format", "dot")[0] == 2


def test_query_unparseable_graph(tmp_path, run):
    g = tmp_path / "g.nt"
    g.write_text("<http://e.org/a> <http://e.org/b> .\n")
    code, _, err = run("query", g, "cves-by-cwe")
    assert code == 2 and "line 1" in err


def test_validate_conformant(seeded_file, run):
    assert run("validate", seeded_file)[0] == 0


def test_validate_reversed_link(tmp_path, seeded_file, run, ns):
    g = parse_ntriples(seeded_file.read_text())
    g.add(Triple(cve_iri("CVE-2021-24109"), ns.term("componentImpactedByCVE"), ns.ind("docker")))
    bad = tmp_path / "bad.nt"
    bad.write_text(serialize_ntriples(g))
    code, out, _ = run("validate", bad, "--format", "json")
    assert code == 1
    assert [v["kind"] for v in json.loads(out)] == ["DomainViolation", "RangeViolation"]
    code, out, _ = run("validate", bad)
    assert code == 1 and len(out.strip().splitlines()) == 2


def test_validate_empty_file(tmp_path, run):
    empty = tmp_path / "empty.nt"
    empty.write_text("")
    assert run("validate", empty)[0] == 0


def test_validate_missing_file(tmp_path, run):
    assert run("validate", tmp_path / "absent.nt")[0] == 2


def test_export_dot(seeded_file, run):
    code, out, _ = run("export-dot", seeded_file, "--focus", "aks", "--radius", "2")
    assert code == 0 and out.startswith("digraph G {")
    for name in ("kubernetes", "docker", "containerd", "CVE-2021-24109"):
        assert f'label="{name}"' in out


def test_export_dot_whole_empty_graph(tmp_path, run):
    empty = tmp_path / "empty.nt"
    empty.write_text("")
    assert run("export-dot", empty) == (0, "digraph G {\n}\n", "")


def test_export_dot_negative_radius(seeded_file, run):
    assert run("export-dot", seeded_file, "--radius", "-1")[0] == 2


@pytest.mark.parametrize(
    "argv",
    [[], ["nope"], ["schema", "--format", "xml"], ["query"], ["export-dot", "x", "--radius", "two"]],
)
def test_usage_errors_exit_2(argv, run):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cckg", "schema"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == len((GOLDEN / "schema.nt").read_text().splitlines())
