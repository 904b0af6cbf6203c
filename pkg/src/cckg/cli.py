"""``cckg`` command line: schema, build, query, validate, export-dot.

Exit codes: 0 success, 1 partial success or violations, 2 I/O or fatal error,
3 query syntax error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import catalog as catalog_mod
from .cve import ingest_directory
from .linker import build_rules, link
from .namespaces import DEFAULT_BASE, ENV_VAR, Namespaces
from .ontology import builtin_schema, emit_schema_triples, validate, violations_to_json, violations_to_text
from .query import QueryError, cves_by_cwe, cves_for_service, evaluate, parse_query
from .rdf import Graph, Iri, RDFError, export_dot, parse_ntriples, serialize_ntriples

log = logging.getLogger("cckg")

EXIT_OK, EXIT_PARTIAL, EXIT_FATAL, EXIT_QUERY = 0, 1, 2, 3
FORMATS = ("ntriples", "table", "tsv", "json", "dot")


class Fatal(Exception):
    """Abort the command with exit code 2."""


@dataclass
class RunConfig:
    namespace_base: str = DEFAULT_BASE
    input_paths: list = field(default_factory=list)
    output_path: Optional[str] = None
    format: Optional[str] = None
    verbosity: int = 0

    def __post_init__(self) -> None:
        if self.format is not None and self.format not in FORMATS:
            raise Fatal(f"unknown format {self.format!r}")
        try:
            self.ns = Namespaces.from_base(self.namespace_base)
        except (ValueError, RDFError) as exc:
            raise Fatal(str(exc)) from exc


def _emit(config: RunConfig, text: str) -> None:
    if config.output_path:
        try:
            Path(config.output_path).write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise Fatal(f"cannot write {config.output_path}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise Fatal(f"cannot read {path}: {exc}") from exc


def _load_graph(path: str) -> Graph:
    try:
        return parse_ntriples(_read_text(path))
    except ValueError as exc:
        raise Fatal(f"{path}: {exc}") from exc


def _individual(ref: str, ns: Namespaces) -> Iri:
    """Accept ``<iri>``, an absolute IRI, or a catalog slug."""
    ref = ref.strip()
    if ref.startswith("<") and ref.endswith(">"):
        ref = ref[1:-1]
    try:
        return Iri(ref) if ":" in ref else ns.ind(ref)
    except RDFError as exc:
        raise Fatal(str(exc)) from exc


def _fmt(config: RunConfig, allowed: Sequence[str], default: str) -> str:
    fmt = config.format or default
    if fmt not in allowed:
        raise Fatal(f"format {fmt!r} not available here (choose from {', '.join(allowed)})")
    return fmt


def cmd_schema(config: RunConfig) -> int:
    _fmt(config, ("ntriples",), "ntriples")
    _emit(config, serialize_ntriples(emit_schema_triples(builtin_schema(config.ns))))
    return EXIT_OK


def cmd_build(config: RunConfig, catalog_path: str, cve_dir: str) -> int:
    _fmt(config, ("ntriples",), "ntriples")
    ns = config.ns
    try:
        if catalog_path == "example":
            cat = catalog_mod.builtin_example_catalog()
        else:
            cat = catalog_mod.load_catalog(_read_text(catalog_path))
    except catalog_mod.CatalogError as exc:
        raise Fatal(f"{catalog_path}: {exc}") from exc
    try:
        cve_graph, stats = ingest_directory(cve_dir, ns)
    except OSError as exc:
        raise Fatal(str(exc)) from exc

    graph = catalog_mod.catalog_to_triples(cat, ns)
    graph.update(cve_graph)
    links, report = link(graph, build_rules(cat, ns), ns)
    graph.update(links)
    _emit(config, serialize_ntriples(graph))

    print(stats.summary(), file=sys.stderr)
    print(report.to_text() if config.verbosity else report.to_text().splitlines()[-1], file=sys.stderr)
    return EXIT_PARTIAL if stats.records_skipped else EXIT_OK


def resolve_query(spec: str, ns: Namespaces):
    if spec == "cves-by-cwe":
        return cves_by_cwe(ns)
    if spec.startswith("cves-for-service:"):
        return cves_for_service(_individual(spec.split(":", 1)[1], ns), ns)
    if "{" not in spec and os.path.isfile(spec):
        spec = _read_text(spec)
    return parse_query(spec)


def cmd_query(config: RunConfig, graph_path: str, query_spec: str) -> int:
    fmt = _fmt(config, ("table", "tsv", "json"), "table")
    graph = _load_graph(graph_path)
    try:
        q = resolve_query(query_spec, config.ns)
    except QueryError as exc:
        print(f"query error: {exc}", file=sys.stderr)
        return EXIT_QUERY
    table = evaluate(q, graph)
    if fmt == "table":
        _emit(config, table.to_text(q.prefixes))
    elif fmt == "tsv":
        _emit(config, table.to_tsv())
    else:
        _emit(config, table.to_json_lines())
    return EXIT_OK


def cmd_validate(config: RunConfig, graph_path: str) -> int:
    fmt = _fmt(config, ("table", "json"), "table")
    violations = validate(_load_graph(graph_path), builtin_schema(config.ns))
    _emit(config, violations_to_json(violations) if fmt == "json" else violations_to_text(violations))
    if violations:
        print(f"{len(violations)} violation(s)", file=sys.stderr)
    return EXIT_PARTIAL if violations else EXIT_OK


def cmd_export_dot(config: RunConfig, graph_path: str, focus: Optional[str], radius: int) -> int:
    _fmt(config, ("dot",), "dot")
    if radius < 0:
        raise Fatal("radius must be >= 0")
    graph = _load_graph(graph_path)
    focus_iri = _individual(focus, config.ns) if focus else None
    _emit(config, export_dot(graph, focus_iri, radius))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse's own exit code is 2, which is ours for fatal too
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_FATAL)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--namespace", default=None, help=f"schema namespace base (default ${ENV_VAR} or {DEFAULT_BASE})")
    common.add_argument("-o", "--output", default=None, help="write output to this file instead of stdout")
    common.add_argument("--format", choices=FORMATS, default=None)
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="cckg", description="Cloud-service security knowledge graph tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("schema", parents=[common], help="export the built-in ontology as N-Triples")

    p = sub.add_parser("build", parents=[common], help="catalog + CVE directory -> linked knowledge graph")
    p.add_argument("catalog", help="catalog JSON file, or 'example' for the built-in catalog")
    p.add_argument("cve_dir", help="directory of CVE Record 5.x JSON files")

    p = sub.add_parser("query", parents=[common], help="run a query against an N-Triples graph")
    p.add_argument("graph")
    p.add_argument("query", help="query text, a query file, 'cves-by-cwe', or 'cves-for-service:<iri|slug>'")

    p = sub.add_parser("validate", parents=[common], help="check a graph against the schema")
    p.add_argument("graph")

    p = sub.add_parser("export-dot", parents=[common], help="render a graph (neighbourhood) as DOT")
    p.add_argument("graph")
    p.add_argument("--focus", default=None, help="IRI or slug of the focus node")
    p.add_argument("--radius", type=int, default=2)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = RunConfig(
            namespace_base=args.namespace or os.environ.get(ENV_VAR, DEFAULT_BASE),
            input_paths=[v for k, v in vars(args).items() if k in ("graph", "catalog", "cve_dir")],
            output_path=args.output,
            format=args.format,
            verbosity=args.verbose,
        )
        if args.command == "schema":
            return cmd_schema(config)
        if args.command == "build":
            return cmd_build(config, args.catalog, args.cve_dir)
        if args.command == "query":
            return cmd_query(config, args.graph, args.query)
        if args.command == "validate":
            return cmd_validate(config, args.graph)
        return cmd_export_dot(config, args.graph, args.focus, args.radius)
    except Fatal as exc:
        print(f"cckg: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except Exception as exc:  # any other failure is still "fatal", never a stray exit code
        log.debug("unhandled error", exc_info=True)
        print(f"cckg: fatal: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
