"""HTTP API, engine snapshots, case persistence.

A snapshot bundles every immutable artifact a request needs (ontology,
closure, compiled KB, network, lexicon) plus a content fingerprint. The app
holds exactly one snapshot behind an attribute; reload builds a fresh one and
swaps it in, so every in-flight request keeps the version it started with.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import kernels
from .config import AppConfig, MAX_K
from .embeddings import assign_vector_tiers, link_distances, load_vectors
from .errors import (
    AmbiguousRootError,
    CaseFormatError,
    DxLinkError,
    NumericalError,
    RefusalError,
    UnclassifiedConceptError,
)
from .inference import (
    Demographics,
    Evidence,
    NoisyOrNetwork,
    build_network,
    rank_differential,
    variational_posteriors,
)
from .kb import KnowledgeBase, assign_coextension, load_kb
from .nlp import Case, Lexicon, build_lexicon, parse_case_text, parse_case_xml
from .ontology import (
    ClosureTable,
    Ontology,
    SiteIndex,
    load_sites,
    load_snapshot,
    resolve_site,
    root_class,
    transitive_closure,
)

log = logging.getLogger(__name__)


def canonical_json(payload: dict) -> bytes:
    """The one JSON serialization shared by the CLI and the API."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class EngineSnapshot:
    config: AppConfig
    ontology: Ontology
    closure: ClosureTable
    site_index: SiteIndex
    kb: KnowledgeBase
    histogram: dict[float, int]
    network: NoisyOrNetwork
    lexicon: Lexicon
    fingerprint: str


def _fingerprint(kb: KnowledgeBase, config: AppConfig) -> str:
    digest = hashlib.sha256()
    for link in kb.links:
        digest.update(
            f"{link.disorder_id}\t{link.finding_id}\t{link.concomitance.value}"
            f"\t{link.coextension.value}\t{link.weight:.2f}\t{link.vector_tier.value}\n"
            .encode()
        )
    for did in sorted(kb.disorders):
        d = kb.disorders[did]
        digest.update(f"{did}\t{d.incidence:g}\t{d.category.value}\n".encode())
    digest.update(
        f"leak={config.leak_default:g};cap={config.prior_cap:g};k={config.k_default}"
        .encode()
    )
    return digest.hexdigest()


def build_snapshot(config: AppConfig) -> EngineSnapshot:
    """Run the full compile pipeline from the raw inputs named in the config."""
    from .weights import compile_all  # local import keeps module load cheap

    config.require_paths()
    ontology = load_snapshot(
        config.concepts_path, config.relations_path,
        config.descriptions_path, isa_type_id=config.isa_type_id,
    )
    closure = transitive_closure(ontology)
    site_index = load_sites(config.sites_path)
    kb = load_kb(config.disorders_path, config.findings_path,
                 config.links_path, ontology)
    kb = assign_coextension(kb, closure, site_index)
    store = load_vectors(config.vectors_path)
    tiers = assign_vector_tiers(link_distances(store, kb))
    kb, histogram = compile_all(kb, tiers)
    network = build_network(
        kb, leak_default=config.leak_default,
        prior_cap=config.prior_cap, leaks=config.leaks,
    )
    lexicon = build_lexicon(kb)
    return EngineSnapshot(
        config=config, ontology=ontology, closure=closure, site_index=site_index,
        kb=kb, histogram=histogram, network=network, lexicon=lexicon,
        fingerprint=_fingerprint(kb, config),
    )


def run_diagnosis(snapshot: EngineSnapshot, case: Case, k: int | None = None) -> dict:
    """Rank the differential for a case; the same dict feeds CLI and API."""
    ev = case.evidence
    k_eff = min(len(ev.positive), snapshot.config.k_default) if k is None else k
    marginals, state = variational_posteriors(snapshot.network, ev, k=k_eff)
    differential = rank_differential(marginals, snapshot.kb, ev)
    payload = differential.to_dict()
    payload["case"] = {
        "positive": sorted(ev.positive),
        "negative": sorted(ev.negative),
        "demographics": ev.demographics.to_dict(),
    }
    payload["diagnostics"] = {
        "bound": float(state.bound),
        "exact_set": sorted(state.exact_set),
        "iterations": state.iterations,
        "k": k_eff,
        "fingerprint": snapshot.fingerprint,
    }
    return payload


def case_from_request(body: bytes, content_type: str, snapshot: EngineSnapshot) -> tuple[Case, int | None]:
    """Turn a request body into a Case; returns (case, k override)."""
    kind = (content_type or "").split(";")[0].strip().lower()
    if kind in ("application/xml", "text/xml"):
        case = parse_case_xml(body, snapshot.lexicon, set(snapshot.kb.findings))
        return case, None
    if kind == "text/plain":
        return parse_case_text(body.decode("utf-8"), snapshot.lexicon), None
    if kind in ("application/json", ""):
        try:
            doc = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CaseFormatError(f"malformed JSON body: {exc}") from exc
        if not isinstance(doc, dict):
            raise CaseFormatError("JSON body must be an object")
        known = set(snapshot.kb.findings)

        def id_list(key):
            values = doc.get(key, [])
            if not isinstance(values, list) or not all(isinstance(v, int) for v in values):
                raise CaseFormatError(f"{key!r} must be a list of finding ids")
            unknown = set(values) - known
            if unknown:
                raise CaseFormatError(f"unknown finding ids: {sorted(unknown)}")
            return frozenset(values)

        positive, negative = id_list("positive"), id_list("negative")
        if positive & negative:
            raise CaseFormatError(
                f"findings asserted and negated at once: {sorted(positive & negative)}"
            )
        demographics = Demographics(
            age=doc.get("age"), sex=doc.get("sex"), nationality=doc.get("nationality"),
        )
        k = doc.get("k")
        if k is not None and (not isinstance(k, int) or k < 0 or k > MAX_K):
            raise CaseFormatError(f"k must be an integer in [0, {MAX_K}]")
        case = Case(evidence=Evidence(positive, negative, demographics))
        return case, k
    raise CaseFormatError(f"unsupported content type {content_type!r}")


class CaseStore:
    """Audit log of submitted cases: raw request plus the exact response."""

    def __init__(self, root: Path | None):
        self.root = Path(root) if root else None
        if self.root:
            self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def save(self, digest: str, body: bytes, content_type: str, response: bytes) -> None:
        if not self.root:
            return
        with self._lock:
            (self.root / f"{digest}.request").write_bytes(body)
            (self.root / f"{digest}.meta.json").write_text(
                json.dumps({"content_type": content_type}), encoding="utf-8"
            )
            (self.root / f"{digest}.response.json").write_bytes(response)

    def load_response(self, digest: str) -> bytes | None:
        if not self.root:
            return None
        path = self.root / f"{digest}.response.json"
        return path.read_bytes() if path.exists() else None


class DiagnosticApp:
    """One snapshot behind an atomic reference, plus the case store."""

    def __init__(self, config: AppConfig, snapshot: EngineSnapshot | None = None):
        self.config = config
        self.snapshot = snapshot or build_snapshot(config)
        self.case_store = CaseStore(config.case_store_path)
        self._reload_lock = threading.Lock()

    def reload(self) -> EngineSnapshot:
        with self._reload_lock:
            fresh = build_snapshot(self.config)
            self.snapshot = fresh
            return fresh


class _ApiError(Exception):
    def __init__(self, status: int, message: str, detail: str = ""):
        self.status = status
        self.message = message
        self.detail = detail
        super().__init__(message)


class DiagnosticRequestHandler(BaseHTTPRequestHandler):
    server_version = "dxlink"
    protocol_version = "HTTP/1.1"

    @property
    def app(self) -> DiagnosticApp:
        return self.server.app  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, status: int, body: bytes, content_type: str = "application/json",
              extra_headers: dict[str, str] | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for key, value in (extra_headers or {}).items():
            self.send_header(key, value)
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, message: str, detail: str = "") -> None:
        body = canonical_json({"code": status, "message": message, "detail": detail})
        self._send(status, body)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0))
        return self.rfile.read(length) if length else b""

    def do_GET(self):  # noqa: N802 (stdlib naming)
        try:
            self._route_get()
        except _ApiError as exc:
            self._send_error_json(exc.status, exc.message, exc.detail)
        except Exception as exc:  # pragma: no cover - last-ditch guard
            log.exception("unhandled error")
            self._send_error_json(500, "internal error", str(exc))

    def do_POST(self):  # noqa: N802
        try:
            self._route_post()
        except _ApiError as exc:
            self._send_error_json(exc.status, exc.message, exc.detail)
        except Exception as exc:  # pragma: no cover
            log.exception("unhandled error")
            self._send_error_json(500, "internal error", str(exc))

    def _route_get(self):
        snapshot = self.app.snapshot
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]

        if parts == ["api", "health"]:
            kb = snapshot.kb
            self._send(200, canonical_json({
                "status": "ok",
                "fingerprint": snapshot.fingerprint,
                "disorders": len(kb.disorders),
                "findings": len(kb.findings),
                "links": len(kb.links),
                "backend": kernels.backend_name,
            }))
            return

        if parts == ["api", "findings"]:
            query = parse_qs(url.query).get("q", [""])[0]
            hits = snapshot.lexicon.search(query, limit=20)
            results = [
                {"id": fid, "phrase": phrase, "name": snapshot.kb.findings[fid].name}
                for phrase, fid in hits
            ]
            self._send(200, canonical_json({"results": results}))
            return

        if len(parts) == 3 and parts[:2] == ["api", "concepts"]:
            if not parts[2].isdigit():
                raise _ApiError(400, "concept id must be numeric", parts[2])
            cid = int(parts[2])
            concept = snapshot.ontology.concepts.get(cid)
            if concept is None:
                raise _ApiError(404, "unknown concept", str(cid))
            try:
                root = root_class(snapshot.closure, cid, snapshot.config.roots).value
            except (UnclassifiedConceptError, AmbiguousRootError):
                root = None
            site = resolve_site(snapshot.closure, cid, snapshot.site_index)
            self._send(200, canonical_json({
                "id": cid,
                "preferred_term": concept.preferred_term,
                "synonyms": list(concept.synonyms),
                "root_class": root,
                "organ": site.organ,
                "system": site.system,
                "depth": snapshot.closure.depth.get(cid),
            }))
            return

        if len(parts) == 3 and parts[:2] == ["api", "cases"]:
            stored = self.app.case_store.load_response(parts[2])
            if stored is None:
                raise _ApiError(404, "unknown case", parts[2])
            self._send(200, stored)
            return

        raise _ApiError(404, "no such route", url.path)

    def _route_post(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]

        if parts == ["api", "diagnose"]:
            snapshot = self.app.snapshot
            body = self._read_body()
            content_type = self.headers.get("Content-Type", "application/json")
            try:
                case, k = case_from_request(body, content_type, snapshot)
                payload = run_diagnosis(snapshot, case, k=k)
            except (CaseFormatError, ValueError) as exc:
                raise _ApiError(422, "invalid case", str(exc)) from exc
            except RefusalError as exc:
                raise _ApiError(422, "refused", str(exc)) from exc
            except NumericalError as exc:
                raise _ApiError(500, "numerical failure", str(exc)) from exc
            response = canonical_json(payload)
            digest = hashlib.sha256(body).hexdigest()
            self.app.case_store.save(digest, body, content_type, response)
            self._send(200, response, extra_headers={"X-Case-Id": digest})
            return

        if parts == ["api", "reload"]:
            try:
                fresh = self.app.reload()
            except DxLinkError as exc:
                raise _ApiError(500, "reload failed", str(exc)) from exc
            self._send(200, canonical_json({"fingerprint": fresh.fingerprint}))
            return

        raise _ApiError(404, "no such route", url.path)


class DiagnosticServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, app: DiagnosticApp):
        super().__init__(address, DiagnosticRequestHandler)
        self.app = app


def start_server(app: DiagnosticApp, host: str = "127.0.0.1",
                 port: int = 0) -> DiagnosticServer:
    """Bind and start serving on a background thread; returns the server."""
    server = DiagnosticServer((host, port), app)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


def serve(config: AppConfig, host: str = "127.0.0.1", port: int | None = None) -> None:
    """Foreground server loop for the CLI."""
    app = DiagnosticApp(config)
    actual_port = config.port if port is None else port
    server = DiagnosticServer((host, actual_port), app)
    log.info("serving on %s:%d (kb %s)", host, actual_port, app.snapshot.fingerprint[:12])
    print(f"dxlink serving on http://{host}:{actual_port} "
          f"(kb {app.snapshot.fingerprint[:12]}, backend {kernels.backend_name})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
