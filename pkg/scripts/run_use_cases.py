"""Build the example graph from a CVE directory and print both reference use cases.

    python3 scripts/run_use_cases.py [CVE_DIR] [--service aks]
"""

import argparse
from pathlib import Path

from cckg.catalog import builtin_example_catalog, catalog_to_triples
from cckg.cve import ingest_directory
from cckg.linker import build_rules, explain_link, link
from cckg.namespaces import DEFAULT
from cckg.query import cves_by_cwe, cves_for_service, evaluate

HERE = Path(__file__).resolve().parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("cve_dir", nargs="?", default=HERE.parent / "tests" / "fixtures" / "cves", type=Path)
    ap.add_argument("--service", default="aks", help="catalog slug of the service for use case 1")
    args = ap.parse_args()

    cat = builtin_example_catalog()
    graph = catalog_to_triples(cat)
    cves, stats = ingest_directory(args.cve_dir)
    graph.update(cves)
    links, report = link(graph, build_rules(cat))
    graph.update(links)
    print(stats.summary())
    print(f"graph: {len(graph)} triples\n")

    prefixes = {"cc": DEFAULT.schema, "ind": DEFAULT.individuals}
    q1 = cves_for_service(DEFAULT.ind(args.service))
    t1 = evaluate(q1, graph)
    print(f"use case 1: CVEs reaching service {args.service!r} through its components")
    print(t1.to_text(prefixes))
    for row in t1.rows:
        print("  " + explain_link(report, row["c"], row["cve"]))

    print("\nuse case 2: CVEs grouped by weakness")
    print(evaluate(cves_by_cwe(), graph).to_text(prefixes))


if __name__ == "__main__":
    main()
