"""The /predict HTTP server wrapping a user-supplied model callable.

Request:  POST /predict  {"id": str, "video_b64": base64 of VTR1 bytes}
Response: 200 with {"mode": "full", "probs": [...]} or
          {"mode": "topk", "topk": [{"label": i, "rank": r}, ...]} or
          {"mode": "label", "label": i}
Errors:   400 for any malformed request, 500 (opaque) for model failures.
GET /healthz returns 200 once the model is loaded.

Class order is never touched: probs[i] is always the model's class i.
"""

from __future__ import annotations

import base64
import binascii
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .config import BridgeConfig, load_config, resolve_loader
from .preprocess import preprocess_clip
from .vtr import VtrFormatError, decode_vtr


class RequestError(ValueError):
    """Client-side problem; reported as a 400."""


def _decode_request(body: bytes) -> tuple[str, np.ndarray]:
    try:
        payload = json.loads(body)
    except ValueError as exc:
        raise RequestError(f"body is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise RequestError("body must be a JSON object")
    video_b64 = payload.get("video_b64")
    if not isinstance(video_b64, str):
        raise RequestError("missing or non-string 'video_b64'")
    try:
        blob = base64.b64decode(video_b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise RequestError(f"'video_b64' is not valid base64: {exc}") from exc
    try:
        video = decode_vtr(blob)
    except VtrFormatError as exc:
        raise RequestError(f"bad VTR1 payload: {exc}") from exc
    return str(payload.get("id", "")), video


def _validate_probs(probs, n_c: int | None) -> list[float]:
    arr = np.asarray(probs, dtype=np.float64).reshape(-1)
    if arr.size < 2:
        raise RuntimeError("model returned fewer than 2 probabilities")
    if np.any(arr < 0) or not np.isfinite(arr).all():
        raise RuntimeError("model returned invalid probabilities")
    if n_c is not None and arr.size != n_c:
        raise RuntimeError(
            f"model returned {arr.size} classes, config declares {n_c}"
        )
    return [float(x) for x in arr]


def _shape_response(probs: list[float], mode: str, k: int) -> dict:
    if mode == "full":
        return {"mode": "full", "probs": probs}
    order = sorted(range(len(probs)), key=lambda i: (-probs[i], i))
    if mode == "topk":
        return {
            "mode": "topk",
            "topk": [
                {"label": int(lbl), "rank": rank}
                for rank, lbl in enumerate(order[:k], start=1)
            ],
        }
    return {"mode": "label", "label": int(order[0])}


class BridgeServer:
    """Owns the HTTP server, the model, and the in-flight limit."""

    def __init__(self, config: BridgeConfig):
        self.config = config
        loader = resolve_loader(config.model)
        self.model = loader(config)
        if not callable(self.model):
            raise TypeError("model loader must return a callable")
        self._inflight = threading.Semaphore(config.workers)
        self._httpd = ThreadingHTTPServer(
            (config.host, config.port), _make_handler(self)
        )
        self._thread: threading.Thread | None = None

    # -- request handling ------------------------------------------------

    def predict(self, body: bytes) -> tuple[int, dict]:
        try:
            _, video = _decode_request(body)
        except RequestError as exc:
            return 400, {"error": str(exc)}
        try:
            with self._inflight:
                clip = preprocess_clip(
                    video,
                    self.config.frame_count,
                    self.config.resize_h,
                    self.config.resize_w,
                )
                probs = _validate_probs(self.model(clip), self.config.n_c)
        except Exception:
            # never leak stack details to the querying side
            return 500, {"error": "inference failed"}
        return 200, _shape_response(probs, self.config.mode, self.config.k)

    # -- lifecycle ---------------------------------------------------------

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._httpd.server_address[:2]
        return host, port

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self):
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, daemon=True
        )
        self._thread.start()
        return self

    def serve_forever(self):
        self._httpd.serve_forever()

    def shutdown(self):
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.shutdown()


def _make_handler(bridge: BridgeServer):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def _reply(self, status: int, payload: dict):
            blob = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)

        def do_GET(self):
            if self.path == "/healthz":
                self._reply(200, {"status": "ok"})
            else:
                self._reply(404, {"error": "not found"})

        def do_POST(self):
            if self.path != "/predict":
                self._reply(404, {"error": "not found"})
                return
            length = int(self.headers.get("Content-Length", "0"))
            status, payload = bridge.predict(self.rfile.read(length))
            self._reply(status, payload)

    return Handler


def serve(config_or_path) -> BridgeServer:
    """Build a server from a config (or config file path), ready to start."""
    config = (
        config_or_path
        if isinstance(config_or_path, BridgeConfig)
        else load_config(config_or_path)
    )
    return BridgeServer(config)
