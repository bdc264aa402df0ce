"""HTTP service and the request handlers it shares with the CLI.

The handlers are pure text-to-text functions; the CLI calls the very same
functions on file contents, so both front ends cannot drift apart.  The
server itself is a stdlib ThreadingHTTPServer: requests are independent
and the loaded models are immutable, so concurrent handling is safe.
"""

from __future__ import annotations

import json
import traceback
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from . import __version__
from .deform import GroupFactors, deform, deform_naive
from .errors import ModelMissing, SchemaError, SkeleformError
from .mlp import MlpModel, load_model
from .pose import DEFAULT_TOPOLOGY, Topology
from .pose_io import (
    PoseDocument,
    SvgStyle,
    _loads,
    parse_pose_file,
    render_svg,
    write_pose,
)
from .training import complete_pose, predict_factors

MAX_BODY_BYTES = 64 * 1024 * 1024


@dataclass
class AppConfig:
    """Everything the CLI/service needs to start serving."""

    factor_model: str | None = None
    completion_model: str | None = None
    bind: str = "127.0.0.1"
    port: int = 8706
    confidence_threshold: float = 0.0
    static_dir: str | None = None
    verbose: bool = False


@dataclass
class ModelStore:
    """Models loaded once at startup, immutable afterwards."""

    factor: MlpModel | None = None
    completion: MlpModel | None = None

    def require_factor(self) -> MlpModel:
        if self.factor is None:
            raise ModelMissing("no factor model loaded")
        return self.factor

    def require_completion(self) -> MlpModel:
        if self.completion is None:
            raise ModelMissing("no completion model loaded")
        return self.completion


def load_model_file(path: str | Path, expected_kind: str) -> MlpModel:
    p = Path(path)
    if not p.is_file():
        raise ModelMissing(f"model file not found: {p}")
    model = load_model(p.read_text(encoding="utf-8"))
    if model.kind != expected_kind:
        raise SchemaError(
            f"expected a {expected_kind} model, file holds {model.kind!r}",
            detail="kind",
        )
    return model


def load_store(config: AppConfig) -> ModelStore:
    store = ModelStore()
    if config.factor_model:
        store.factor = load_model_file(config.factor_model, "factor")
    if config.completion_model:
        store.completion = load_model_file(config.completion_model, "completion")
    return store


def _json_object(body: bytes | str, what: str) -> dict:
    obj = _loads(body)
    if not isinstance(obj, dict):
        raise SchemaError(f"{what} must be a JSON object", detail="$")
    return obj


def _embedded_document(
    value: object, path: str, confidence_threshold: float
) -> PoseDocument:
    if not isinstance(value, dict):
        raise SchemaError("expected a pose document object", detail=path)
    try:
        return parse_pose_file(json.dumps(value), confidence_threshold)
    except SkeleformError as e:
        raise type(e)(str(e), detail=f"{path}.{e.detail}" if e.detail else path) from e


def handle_complete(
    body: bytes | str,
    store: ModelStore,
    confidence_threshold: float = 0.0,
    topo: Topology = DEFAULT_TOPOLOGY,
) -> str:
    """Pose document in, same document with invisible joints filled out."""
    doc = parse_pose_file(body, confidence_threshold)
    model = store.require_completion()
    out = [complete_pose(model, k, topo) for k in doc.poses]
    return write_pose(PoseDocument(out, doc.image_size, doc.source))


def handle_factors(
    body: bytes | str,
    store: ModelStore,
    confidence_threshold: float = 0.0,
    topo: Topology = DEFAULT_TOPOLOGY,
) -> str:
    """Pose document in, per-pose group factors out."""
    doc = parse_pose_file(body, confidence_threshold)
    model = store.require_factor()
    factors = [predict_factors(model, k, topo).tau.tolist() for k in doc.poses]
    return json.dumps({"factors": factors}, indent=1) + "\n"


def _explicit_factors(value: object) -> GroupFactors:
    if not isinstance(value, list) or len(value) != 6:
        raise SchemaError("tau_a must be a list of 6 numbers", detail="tau_a")
    for i, v in enumerate(value):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise SchemaError("tau_a entries must be numbers", detail=f"tau_a[{i}]")
    return GroupFactors(np.asarray(value, dtype=np.float64))


def handle_deform(
    body: bytes | str,
    store: ModelStore,
    confidence_threshold: float = 0.0,
    topo: Topology = DEFAULT_TOPOLOGY,
) -> str:
    """Retarget request in, deformed pose document out.

    The request wraps a person document plus exactly one factor source:
    an art pose document ("art") or six explicit numbers ("tau_a").
    Naive mode copies art segment lengths directly and needs the art pose.
    """
    payload = _json_object(body, "deform request")
    if "person" not in payload:
        raise SchemaError("missing person document", detail="person")
    person = _embedded_document(payload["person"], "person", confidence_threshold)
    naive = payload.get("naive", False)
    if not isinstance(naive, bool):
        raise SchemaError("naive must be a boolean", detail="naive")
    has_art = "art" in payload
    has_tau = "tau_a" in payload

    if naive:
        if not has_art:
            raise SchemaError("naive mode needs an art pose", detail="art")
        art = _embedded_document(payload["art"], "art", confidence_threshold)
        if not art.poses:
            raise SchemaError("art document holds no poses", detail="art.poses")
        out = [deform_naive(k, art.poses[0], topo) for k in person.poses]
    else:
        if has_art == has_tau:
            raise SchemaError(
                "provide exactly one of art or tau_a", detail="art|tau_a"
            )
        model = store.require_factor()
        if has_tau:
            tau_a = _explicit_factors(payload["tau_a"])
        else:
            art = _embedded_document(payload["art"], "art", confidence_threshold)
            if not art.poses:
                raise SchemaError("art document holds no poses", detail="art.poses")
            tau_a = predict_factors(model, art.poses[0], topo)
        out = [
            deform(k, predict_factors(model, k, topo), tau_a, topo)
            for k in person.poses
        ]
    return write_pose(PoseDocument(out, person.image_size, person.source))


_STYLE_FIELDS = {"stroke_color", "joint_radius", "opacity"}


def _style_from(value: object, path: str) -> SvgStyle:
    if not isinstance(value, dict):
        raise SchemaError("style must be an object", detail=path)
    unknown = set(value) - _STYLE_FIELDS
    if unknown:
        raise SchemaError(f"unknown style fields {sorted(unknown)}", detail=path)
    if "stroke_color" in value and not isinstance(value["stroke_color"], str):
        raise SchemaError("stroke_color must be a string", detail=path)
    for key in ("joint_radius", "opacity"):
        v = value.get(key)
        if v is not None and (not isinstance(v, (int, float)) or isinstance(v, bool)):
            raise SchemaError(f"{key} must be a number", detail=path)
    return SvgStyle(**value)


def handle_render(
    body: bytes | str,
    confidence_threshold: float = 0.0,
    topo: Topology = DEFAULT_TOPOLOGY,
) -> str:
    """Render request in, SVG text out.

    Styles cycle over poses, so one style can dress a whole document and
    two styles alternate for before/after overlays.
    """
    payload = _json_object(body, "render request")
    if "document" not in payload:
        raise SchemaError("missing document", detail="document")
    doc = _embedded_document(payload["document"], "document", confidence_threshold)
    raw_styles = payload.get("styles", [{}])
    if not isinstance(raw_styles, list) or not raw_styles:
        raise SchemaError("styles must be a non-empty list", detail="styles")
    styles = [_style_from(s, f"styles[{i}]") for i, s in enumerate(raw_styles)]
    width = payload.get("width", 512)
    height = payload.get("height", 512)
    for name, v in (("width", width), ("height", height)):
        if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
            raise SchemaError(f"{name} must be a positive integer", detail=name)
    pairs = [(k, styles[i % len(styles)]) for i, k in enumerate(doc.poses)]
    return render_svg(pairs, (width, height), topo)


def handle_health(store: ModelStore) -> str:
    kinds = [
        kind
        for kind, model in (("factor", store.factor), ("completion", store.completion))
        if model is not None
    ]
    return json.dumps({"version": __version__, "kinds": kinds}, indent=1) + "\n"


class PoseServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: AppConfig, store: ModelStore):
        self.config = config
        self.store = store
        super().__init__((config.bind, config.port), _Handler)


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: PoseServer

    # -- plumbing ---------------------------------------------------------

    def log_message(self, fmt, *args):
        if self.server.config.verbose:
            super().log_message(fmt, *args)

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")

    def _reply(self, status: int, content_type: str, text: str | bytes):
        data = text.encode("utf-8") if isinstance(text, str) else text
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _reply_error(self, err: SkeleformError):
        status = 500 if err.code in ("internal", "io") else 400
        body = {"error": {"code": err.code, "message": str(err)}}
        if err.detail is not None:
            body["error"]["detail"] = err.detail
        self._reply(status, "application/json", json.dumps(body, indent=1) + "\n")

    def _read_body(self) -> bytes:
        length = self.headers.get("Content-Length")
        if length is None or not length.isdigit():
            raise SchemaError("missing or invalid Content-Length")
        n = int(length)
        if n > MAX_BODY_BYTES:
            raise SchemaError(f"request body over {MAX_BODY_BYTES} bytes")
        return self.rfile.read(n)

    # -- verbs ------------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        try:
            if self.path == "/api/health":
                self._reply(200, "application/json", handle_health(self.server.store))
            elif self.server.config.static_dir:
                self._serve_static()
            else:
                raise SchemaError(f"no such endpoint: {self.path}")
        except SkeleformError as e:
            self._reply_error(e)
        except Exception:  # pragma: no cover - last-resort guard
            self._unexpected()

    def do_POST(self):
        try:
            body = self._read_body()
            threshold = self.server.config.confidence_threshold
            store = self.server.store
            if self.path == "/api/complete":
                self._reply(200, "application/json", handle_complete(body, store, threshold))
            elif self.path == "/api/factors":
                self._reply(200, "application/json", handle_factors(body, store, threshold))
            elif self.path == "/api/deform":
                self._reply(200, "application/json", handle_deform(body, store, threshold))
            elif self.path == "/api/render.svg":
                self._reply(200, "image/svg+xml", handle_render(body, threshold))
            else:
                raise SchemaError(f"no such endpoint: {self.path}")
        except SkeleformError as e:
            self._reply_error(e)
        except Exception:  # pragma: no cover - last-resort guard
            self._unexpected()

    def _unexpected(self):
        if self.server.config.verbose:
            traceback.print_exc()
        self._reply_error(SkeleformError("unexpected server error"))

    def _serve_static(self):
        root = Path(self.server.config.static_dir).resolve()
        rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if root not in target.parents and target != root:
            raise SchemaError("path escapes the static directory")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            raise SchemaError(f"no such file: {self.path}")
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._reply(200, ctype, target.read_bytes())


def create_server(config: AppConfig) -> PoseServer:
    """Load models and bind the socket; the caller decides when to serve."""
    return PoseServer(config, load_store(config))


def serve(config: AppConfig) -> None:
    server = create_server(config)
    host, port = server.server_address[:2]
    print(f"skeleform service on http://{host}:{port}/", flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
