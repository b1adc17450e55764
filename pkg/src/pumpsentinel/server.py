"""Streaming inference service: newline-delimited JSON over TCP.

One request object per line; one response object per line. Smoothing state is
kept per stream id and evicted after five idle minutes. The model bundle is
immutable and shared across connections.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
import time
from typing import Optional

import numpy as np

from .bundle import ModelBundle
from .frames import Frame
from .pipeline import Pipeline
from .postprocess import SmootherState

STREAM_IDLE_EVICTION_S = 5 * 60.0


class StreamRegistry:
    """Per-stream smoothing buffers with idle eviction."""

    def __init__(self, idle_eviction_s: float = STREAM_IDLE_EVICTION_S, clock=time.monotonic):
        self._states: dict = {}
        self._lock = threading.Lock()
        self._idle = idle_eviction_s
        self._clock = clock

    def step(self, stream_id: str, update):
        """Run `update(state) -> (state, result)` atomically for one stream."""
        now = self._clock()
        with self._lock:
            expired = [
                sid for sid, (_, seen) in self._states.items()
                if now - seen > self._idle
            ]
            for sid in expired:
                del self._states[sid]
            state, _ = self._states.get(stream_id, (SmootherState(), now))
            state, result = update(state)
            self._states[stream_id] = (state, now)
        return result

    def __len__(self) -> int:
        with self._lock:
            return len(self._states)


def _error_response(code: str, message: str, echo: Optional[str] = None) -> dict:
    resp = {"ok": False, "error": {"code": code, "message": message}}
    if echo is not None:
        resp["echo"] = echo[:2000]
    return resp


def handle_request_line(line: str, pipeline: Pipeline, registry: StreamRegistry) -> dict:
    """Process one request line into a response dict (never raises)."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        return _error_response("bad_json", str(exc), echo=line)
    if not isinstance(obj, dict):
        return _error_response("bad_request", "request must be a JSON object", echo=line)
    stream_id = obj.get("stream_id")
    if not isinstance(stream_id, str) or not stream_id:
        return _error_response("bad_request", "missing or invalid stream_id", echo=line)
    frame_obj = obj.get("frame")
    if not isinstance(frame_obj, dict):
        return _error_response("bad_request", "missing frame object", echo=line)
    try:
        frame = Frame.from_json_dict(frame_obj)
    except (ValueError, TypeError) as exc:
        return _error_response("bad_frame", str(exc), echo=line)

    result = registry.step(stream_id, lambda state: pipeline.predict_step(frame, state))
    return {
        "ok": True,
        "stream_id": stream_id,
        "raw": result.raw.tolist(),
        "smoothed": result.smoothed.tolist(),
        "classifier_class": result.classifier_class,
        "ae_flag": result.ae_flag,
        "final_class": result.final_class,
        "bundle_version": pipeline.bundle.version,
    }


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        while True:
            raw = self.rfile.readline()
            if not raw:
                break
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            response = handle_request_line(line, self.server.pipeline, self.server.registry)
            payload = json.dumps(response, separators=(",", ":")) + "\n"
            try:
                self.wfile.write(payload.encode("utf-8"))
                self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError):
                break


class InferenceServer(socketserver.ThreadingTCPServer):
    """TCP server around a single loaded bundle."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, bundle: ModelBundle, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _Handler)
        self.pipeline = Pipeline(bundle)
        self.registry = StreamRegistry()

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve_forever(bundle: ModelBundle, host: str, port: int) -> None:
    """Run until interrupted; stream state is in-memory only."""
    with InferenceServer(bundle, host, port) as server:
        print(f"serving on {server.server_address[0]}:{server.port}", flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.shutdown()


def request_over_socket(host: str, port: int, lines) -> list:
    """Send request lines over one connection; returns parsed responses."""
    responses = []
    with socket.create_connection((host, port)) as sock:
        fh = sock.makefile("rwb")
        for line in lines:
            fh.write(line.encode("utf-8") + b"\n")
            fh.flush()
            responses.append(json.loads(fh.readline().decode("utf-8")))
    return responses
