"""Command-line interface: ingest, closure, tiers, compile, stats, diagnose,
eval, gen-cases, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .embeddings import assign_vector_tiers, link_distances, load_vectors
from .errors import DxLinkError
from .evaluation import eval_run, generate_synthetic_cases
from .kb import assign_coextension, kb_statistics, load_kb, save_kb, validate_kb
from .nlp import parse_case_text, parse_case_xml
from .ontology import load_snapshot, load_sites, transitive_closure
from .service import build_snapshot, canonical_json, run_diagnosis, serve
from .weights import compile_all, write_histogram_csv


def _echo(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_ingest(args) -> int:
    config = load_config(args.config)
    config.require_paths()
    ontology = load_snapshot(config.concepts_path, config.relations_path,
                             config.descriptions_path, isa_type_id=config.isa_type_id)
    kb = load_kb(config.disorders_path, config.findings_path, config.links_path, ontology)
    report = validate_kb(kb, ontology)
    _echo({
        "concepts": len(ontology),
        "isa_edges": len(ontology.edges),
        "ignored_relation_rows": ontology.ignored_relation_rows,
        "dropped_edges": ontology.dropped_edges,
        "disorders": len(kb.disorders),
        "findings": len(kb.findings),
        "links": len(kb.links),
        "validation": report.to_dict(),
    })
    return 0 if report.clean else 1


def cmd_closure(args) -> int:
    config = load_config(args.config)
    ontology = load_snapshot(config.concepts_path, config.relations_path,
                             config.descriptions_path, isa_type_id=config.isa_type_id)
    closure = transitive_closure(ontology)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for desc, anc in sorted(closure.pairs):
                fh.write(f"{desc}\t{anc}\n")
    _echo({"concepts": len(ontology), "closure_pairs": len(closure),
           "max_depth": max(closure.depth.values(), default=0)})
    return 0


def _compile_pipeline(config):
    ontology = load_snapshot(config.concepts_path, config.relations_path,
                             config.descriptions_path, isa_type_id=config.isa_type_id)
    closure = transitive_closure(ontology)
    site_index = load_sites(config.sites_path)
    kb = load_kb(config.disorders_path, config.findings_path, config.links_path, ontology)
    kb = assign_coextension(kb, closure, site_index)
    store = load_vectors(config.vectors_path)
    tiers = assign_vector_tiers(link_distances(store, kb))
    return compile_all(kb, tiers)


def cmd_tiers(args) -> int:
    config = load_config(args.config)
    ontology = load_snapshot(config.concepts_path, config.relations_path,
                             config.descriptions_path, isa_type_id=config.isa_type_id)
    kb = load_kb(config.disorders_path, config.findings_path, config.links_path, ontology)
    store = load_vectors(config.vectors_path)
    distances = link_distances(store, kb)
    tiers = assign_vector_tiers(distances)
    if args.out:
        by_key = {d.key: d.distance for d in distances}
        with open(args.out, "w", encoding="utf-8") as fh:
            for (did, fid), tier in sorted(tiers.items()):
                dist = by_key.get((did, fid))
                rendered = "" if dist is None else f"{dist:.6f}"
                fh.write(f"{did}\t{fid}\t{tier.value}\t{rendered}\n")
    counts = {}
    for tier in tiers.values():
        counts[tier.value] = counts.get(tier.value, 0) + 1
    _echo({"links": len(tiers), "tiers": counts})
    return 0


def cmd_compile(args) -> int:
    config = load_config(args.config)
    kb, histogram = _compile_pipeline(config)
    links_out = args.links_out or (Path(args.config).parent / "links_compiled.tsv")
    disorders_tmp = Path(links_out).with_suffix(".disorders.tsv")
    findings_tmp = Path(links_out).with_suffix(".findings.tsv")
    save_kb(kb, disorders_tmp, findings_tmp, links_out)
    if args.histogram_out:
        write_histogram_csv(histogram, args.histogram_out)
    _echo({
        "links": len(kb.links),
        "links_out": str(links_out),
        "histogram": {f"{w:.2f}": c for w, c in histogram.items()},
    })
    return 0


def cmd_stats(args) -> int:
    config = load_config(args.config)
    kb, histogram = _compile_pipeline(config)
    report = kb_statistics(kb)
    if args.histogram_out:
        write_histogram_csv(histogram, args.histogram_out)
    payload = report.to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True),
                                  encoding="utf-8")
    _echo(payload)
    return 0


def _load_case(path: Path, fmt: str, snapshot):
    data = path.read_bytes()
    if fmt == "auto":
        fmt = {".xml": "xml", ".json": "json", ".txt": "text"}.get(path.suffix.lower(), "xml")
    if fmt == "xml":
        return parse_case_xml(data, snapshot.lexicon, set(snapshot.kb.findings)), None
    if fmt == "text":
        return parse_case_text(data.decode("utf-8"), snapshot.lexicon), None
    from .service import case_from_request

    return case_from_request(data, "application/json", snapshot)


def cmd_diagnose(args) -> int:
    config = load_config(args.config)
    snapshot = build_snapshot(config)
    case, k_from_body = _load_case(Path(getattr(args, "in")), args.format, snapshot)
    k = args.k if args.k is not None else k_from_body
    payload = run_diagnosis(snapshot, case, k=k)
    body = canonical_json(payload)
    if args.out:
        Path(args.out).write_bytes(body)
    else:
        sys.stdout.buffer.write(body + b"\n")
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config)
    snapshot = build_snapshot(config)

    def loader(data: bytes):
        return parse_case_xml(data, snapshot.lexicon, set(snapshot.kb.findings))

    result = eval_run(args.corpus, snapshot.network, loader, k=args.k)
    payload = result.to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True),
                                  encoding="utf-8")
    _echo({k: v for k, v in payload.items() if k != "ranks"})
    return 0


def cmd_gen_cases(args) -> int:
    config = load_config(args.config)
    snapshot = build_snapshot(config)
    paths = generate_synthetic_cases(
        snapshot.kb, snapshot.network, args.out,
        count=args.count, findings_per_case=args.findings, seed=args.seed,
    )
    _echo({"cases": len(paths), "out": str(args.out)})
    return 0


def cmd_serve(args) -> int:
    config = load_config(args.config)
    serve(config, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dxlink")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", required=True, help="path to config JSON")
        p.set_defaults(fn=fn)
        return p

    add("ingest", cmd_ingest, help="load and validate ontology + KB")

    p = add("closure", cmd_closure, help="compute the IS-A transitive closure")
    p.add_argument("--out", help="write closure pairs TSV here")

    p = add("tiers", cmd_tiers, help="assign vector-distance tiers to links")
    p.add_argument("--out", help="write per-link tier TSV here")

    p = add("compile", cmd_compile, help="compile link weights")
    p.add_argument("--links-out", help="compiled links TSV path")
    p.add_argument("--histogram-out", help="weight histogram CSV path")

    p = add("stats", cmd_stats, help="emit the link statistics report")
    p.add_argument("--out", help="write report JSON here")
    p.add_argument("--histogram-out", help="weight histogram CSV path")

    p = add("diagnose", cmd_diagnose, help="rank the differential for one case")
    p.add_argument("--in", required=True, help="case file (xml, json or txt)")
    p.add_argument("--format", choices=["auto", "xml", "json", "text"], default="auto")
    p.add_argument("--out", help="write response JSON here (byte-identical to the API)")
    p.add_argument("--k", type=int, default=None, help="exact-set budget override")

    p = add("eval", cmd_eval, help="score a case corpus")
    p.add_argument("--corpus", required=True, help="directory of case XML files")
    p.add_argument("--out", help="write full report JSON here")
    p.add_argument("--k", type=int, default=None)

    p = add("gen-cases", cmd_gen_cases, help="generate a synthetic case corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--findings", type=int, default=5)
    p.add_argument("--seed", type=int, default=11)

    p = add("serve", cmd_serve, help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (DxLinkError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
