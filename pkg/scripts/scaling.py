"""Time ingestion, linking and the two canned queries on synthetic CVE corpora of growing size."""

import argparse
import json
import random
import tempfile
import time
from pathlib import Path

from cckg.catalog import builtin_example_catalog, catalog_to_triples
from cckg.cve import ingest_directory
from cckg.linker import build_rules, link
from cckg.namespaces import DEFAULT
from cckg.query import cves_by_cwe, cves_for_service, evaluate

PRODUCTS = [("kubernetes", "kubernetes"), ("docker", "docker engine"), ("containerd", "containerd"),
            ("oracle", "openjdk"), ("linux", "linux kernel"), ("apache", "kafka"), ("f5", "nginx"), ("acme", "widget")]


def synth_record(i: int, rng: random.Random) -> dict:
    vendor, product = rng.choice(PRODUCTS)
    score = round(rng.uniform(0, 10), 1)
    return {
        "dataType": "CVE_RECORD",
        "dataVersion": "5.1",
        "cveMetadata": {"cveId": f"CVE-2024-{i:05d}", "state": "PUBLISHED", "assignerShortName": "mitre"},
        "containers": {"cna": {
            "descriptions": [{"lang": "en", "value": f"synthetic record {i}"}],
            "affected": [{"vendor": vendor, "product": product, "versions": [{"version": "1.0", "status": "affected"}]}],
            "problemTypes": [{"descriptions": [{"lang": "en", "type": "CWE", "cweId": f"CWE-{rng.randint(1, 60)}", "description": "synthetic"}]}],
            "metrics": [{"cvssV3_1": {"version": "3.1", "baseScore": score, "vectorString": "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"}}],
        }},
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 5000])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cat = builtin_example_catalog()
    rules = build_rules(cat)
    print(f"{'records':>8} {'triples':>9} {'ingest_s':>9} {'link_s':>8} {'links':>6} {'uc1_s':>7} {'uc2_s':>7}")
    for n in args.sizes:
        rng = random.Random(args.seed)
        with tempfile.TemporaryDirectory() as tmp:
            for i in range(n):
                Path(tmp, f"CVE-2024-{i:05d}.json").write_text(json.dumps(synth_record(i, rng)))
            t0 = time.perf_counter()
            cves, _ = ingest_directory(tmp, workers=args.workers)
            t1 = time.perf_counter()
        graph = catalog_to_triples(cat) | cves
        links, _ = link(graph, rules)
        graph.update(links)
        t2 = time.perf_counter()
        evaluate(cves_for_service(DEFAULT.ind("aks")), graph)
        t3 = time.perf_counter()
        evaluate(cves_by_cwe(), graph)
        t4 = time.perf_counter()
        print(f"{n:>8} {len(graph):>9} {t1 - t0:>9.3f} {t2 - t1:>8.3f} {len(links):>6} {t3 - t2:>7.3f} {t4 - t3:>7.3f}")


if __name__ == "__main__":
    main()
