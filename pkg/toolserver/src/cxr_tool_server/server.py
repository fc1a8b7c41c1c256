"""Wire-protocol server over a fixture store.

Stateless request handling: each POST resolves an image_id in the store
and answers from annotations; no image bytes ever cross the wire.  Real
keypoint or segmentation models would plug in by replacing the three
``_handle_*`` lookups with inference calls that resolve image_id to
pixels themselves.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .store import FixtureStore, StudyFixtures

ENDPOINTS = ("/v1/exists", "/v1/find", "/v1/segment")


class ProtocolError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def _parse_request(body: bytes) -> tuple[str, str]:
    try:
        payload = json.loads(body.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ProtocolError(400, "bad_request", f"body is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ProtocolError(400, "bad_request", "body must be a JSON object")
    image_id = payload.get("image_id")
    object_name = payload.get("object_name")
    if not isinstance(image_id, str) or not isinstance(object_name, str):
        raise ProtocolError(400, "bad_request", "image_id and object_name must be strings")
    return image_id, object_name


def _frame_or_error(study: StudyFixtures) -> tuple[int, int]:
    frame = study.frame_size()
    if frame is None:
        raise ProtocolError(
            422, "unknown_image_size", f"no frame size recorded for {study.study_id!r}"
        )
    return frame


def _handle_exists(study: StudyFixtures, object_name: str) -> dict:
    detections = study.detections.get(object_name, [])
    return {
        "exists": bool(detections),
        "confidence": max((d.confidence for d in detections), default=0.0),
    }


def _handle_find(study: StudyFixtures, object_name: str) -> dict:
    frame = _frame_or_error(study)
    return {
        "image_size": list(frame),
        "detections": [
            {"bbox": list(d.bbox), "confidence": d.confidence}
            for d in study.detections.get(object_name, [])
        ],
    }


def _handle_segment(study: StudyFixtures, object_name: str) -> dict:
    frame = _frame_or_error(study)
    mask = study.masks.get(object_name)
    if mask is None:
        runs = [frame[0] * frame[1]]  # empty region
    else:
        runs = list(mask.runs)
    return {"image_size": list(frame), "rle": runs, "starts_with": 0}


_HANDLERS = {
    "/v1/exists": _handle_exists,
    "/v1/find": _handle_find,
    "/v1/segment": _handle_segment,
}


class ToolRequestHandler(BaseHTTPRequestHandler):
    store: FixtureStore  # bound by make_server

    def log_message(self, fmt, *args):
        pass

    def _reply(self, status: int, body: dict):
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _reply_error(self, error: ProtocolError):
        self._reply(error.status, {"error": {"code": error.code, "message": error.message}})

    def do_GET(self):  # noqa: N802 - http.server API
        self._reply_error(ProtocolError(405, "method_not_allowed", "use POST"))

    def do_POST(self):  # noqa: N802 - http.server API
        try:
            if self.path not in ENDPOINTS:
                raise ProtocolError(404, "not_found", f"unknown endpoint {self.path}")
            length = self.headers.get("Content-Length")
            if length is None:
                raise ProtocolError(400, "bad_request", "missing Content-Length")
            image_id, object_name = _parse_request(self.rfile.read(int(length)))
            study = self.store.studies.get(image_id)
            if study is None:
                raise ProtocolError(404, "unknown_image", f"no fixtures for image {image_id!r}")
            self._reply(200, _HANDLERS[self.path](study, object_name))
        except ProtocolError as error:
            self._reply_error(error)


def make_server(store: FixtureStore, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundToolHandler", (ToolRequestHandler,), {"store": store})
    return ThreadingHTTPServer((host, port), handler)


class ServerThread:
    """Context manager running the server on a daemon thread (for tests)."""

    def __init__(self, store: FixtureStore, host: str = "127.0.0.1", port: int = 0):
        self.server = make_server(store, host, port)
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "ServerThread":
        self._thread.start()
        return self

    def __exit__(self, *exc_info):
        self.server.shutdown()
        self.server.server_close()
        self._thread.join(timeout=5)
