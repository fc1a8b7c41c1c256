"""Minimal fixture-backed tool server for protocol tests.

Serves the wire protocol straight from a fixture file so the HTTP client
can be exercised without any model runtime.  Masks are answered from mask
records; frame sizes come from the per-study size record (or mask dims).
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .backends import FixtureStore

_ENDPOINTS = ("/v1/exists", "/v1/find", "/v1/segment")


def _error_body(code: str, message: str) -> bytes:
    return json.dumps({"error": {"code": code, "message": message}}).encode("utf-8")


class FixtureRequestHandler(BaseHTTPRequestHandler):
    store: FixtureStore  # injected via serve_fixtures

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send(self, status: int, body: bytes):
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):  # noqa: N802 - http.server API
        if self.path not in _ENDPOINTS:
            self._send(404, _error_body("not_found", f"unknown endpoint {self.path}"))
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            image_id = payload["image_id"]
            object_name = payload["object_name"]
            if not isinstance(image_id, str) or not isinstance(object_name, str):
                raise ValueError("image_id and object_name must be strings")
        except (ValueError, KeyError, UnicodeDecodeError) as exc:
            self._send(400, _error_body("bad_request", str(exc)))
            return

        store = self.store
        if image_id not in store.annotations:
            self._send(404, _error_body("unknown_image", f"no fixtures for {image_id!r}"))
            return
        annotation = store.annotations[image_id]
        size = store.sizes.get(image_id)
        if size is None and annotation.masks:
            mask = next(iter(annotation.masks.values()))
            size = (mask.width, mask.height)

        if self.path == "/v1/exists":
            entries = annotation.boxes.get(object_name, ())
            body = {
                "exists": bool(entries),
                "confidence": max((c for _, c in entries), default=0.0),
            }
        elif self.path == "/v1/find":
            if size is None:
                self._send(422, _error_body("unknown_image_size", f"no frame size for {image_id!r}"))
                return
            body = {
                "image_size": list(size),
                "detections": [
                    {"bbox": list(bbox), "confidence": confidence}
                    for bbox, confidence in annotation.boxes.get(object_name, ())
                ],
            }
        else:
            if size is None:
                self._send(422, _error_body("unknown_image_size", f"no frame size for {image_id!r}"))
                return
            seg = annotation.masks.get(object_name)
            if seg is None:
                runs = [size[0] * size[1]]
            else:
                runs = list(seg.runs)
            body = {"image_size": list(size), "rle": runs, "starts_with": 0}
        self._send(200, json.dumps(body).encode("utf-8"))


def serve_fixtures(store: FixtureStore, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Build the server (not yet running); port 0 picks a free port."""
    handler = type("BoundFixtureHandler", (FixtureRequestHandler,), {"store": store})
    return ThreadingHTTPServer((host, port), handler)


def run_server(store: FixtureStore, host: str, port: int):
    """Serve until interrupted."""
    server = serve_fixtures(store, host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()


class BackgroundServer:
    """Context manager running the fixture server on a daemon thread."""

    def __init__(self, store: FixtureStore, host: str = "127.0.0.1"):
        self._server = serve_fixtures(store, host, 0)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "BackgroundServer":
        self._thread.start()
        return self

    def __exit__(self, *exc_info):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
