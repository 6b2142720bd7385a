"""Line-delimited JSON client for external classifier processes.

Protocol (one JSON object per line, UTF-8, LF, over the child's stdin/stdout):

    -> {"op": "handshake", "version": 1}
    <- {"classes": ["negative", "neutral", "positive"], "batch_limit": 64, "name": "..."}
    -> {"op": "predict", "texts": ["<t1>", "<t2>"]}
    <- {"probs": [[0.1, 0.2, 0.7], [0.6, 0.3, 0.1]]}
    -> {"op": "shutdown"}        (child exits 0)

Any response line carrying an "error" key aborts the batch. The handshake
pins the class order; every probability row uses it for the lifetime of
the handle.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading

import numpy as np

from .classifier import check_prob_rows
from .errors import AdapterConnectionError, PredictionError, ProtocolError

PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT = 30.0
PREDICT_TIMEOUT = 300.0


class ExternalHandle:
    """Handle over a spawned classifier process.

    In-flight requests are serialized by an internal lock, so the handle
    may be used from multiple workers; responses match requests by order
    within the serialized stream.
    """

    kind = "external"

    def __init__(
        self,
        command: str,
        handshake_timeout: float = HANDSHAKE_TIMEOUT,
        predict_timeout: float = PREDICT_TIMEOUT,
    ):
        self.command = command
        self._predict_timeout = predict_timeout
        self._lock = threading.Lock()
        self._lines: queue.Queue = queue.Queue()
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise AdapterConnectionError(f"cannot launch {command!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._pump_stdout, daemon=True)
        self._reader.start()

        reply = self._request(
            {"op": "handshake", "version": PROTOCOL_VERSION}, timeout=handshake_timeout
        )
        if "error" in reply:
            raise AdapterConnectionError(f"handshake failed: {reply['error']}")
        classes = reply.get("classes")
        if not isinstance(classes, list) or not classes:
            raise ProtocolError(f"handshake has no class list: {reply}")
        if len(set(classes)) != len(classes):
            raise ProtocolError(f"handshake class list has duplicates: {classes}")
        batch_limit = reply.get("batch_limit", 64)
        if not isinstance(batch_limit, int) or batch_limit < 1:
            raise ProtocolError(f"handshake batch_limit invalid: {batch_limit!r}")
        self.class_names = [str(c) for c in classes]
        self.batch_limit = batch_limit
        self.name = str(reply.get("name", ""))

    def _pump_stdout(self) -> None:
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(None)  # EOF sentinel

    def _request(self, payload: dict, timeout: float) -> dict:
        try:
            self._proc.stdin.write(json.dumps(payload, ensure_ascii=False) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise AdapterConnectionError(
                f"adapter {self.command!r} is not accepting requests: {exc}"
            ) from exc
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise AdapterConnectionError(
                f"adapter {self.command!r} did not answer within {timeout}s"
            )
        if line is None:
            raise AdapterConnectionError(
                f"adapter {self.command!r} closed its output stream"
            )
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"adapter sent invalid JSON: {line!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"adapter sent a non-object response: {reply!r}")
        return reply

    def predict_proba(self, texts: list[str]) -> np.ndarray:
        if len(texts) > self.batch_limit:
            raise ValueError(
                f"batch of {len(texts)} exceeds batch_limit {self.batch_limit}"
            )
        try:
            with self._lock:
                reply = self._request(
                    {"op": "predict", "texts": list(texts)},
                    timeout=self._predict_timeout,
                )
        except AdapterConnectionError as exc:
            raise PredictionError(
                f"transport failure: {exc}", batch_indices=list(range(len(texts)))
            ) from exc
        if "error" in reply:
            raise PredictionError(
                f"adapter rejected batch: {reply['error']}",
                batch_indices=list(range(len(texts))),
            )
        probs = reply.get("probs")
        if not isinstance(probs, list) or len(probs) != len(texts):
            raise ProtocolError(
                f"expected {len(texts)} probability rows, got {probs!r}"
            )
        try:
            rows = np.array(probs, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"probability rows are not numeric: {probs!r}") from exc
        if rows.size == 0:
            rows = rows.reshape(0, len(self.class_names))
        try:
            check_prob_rows(rows, len(self.class_names))
        except PredictionError as exc:
            raise ProtocolError(str(exc)) from exc
        return np.clip(rows, 0.0, 1.0)

    def predict_all(self, texts: list[str]) -> np.ndarray:
        from .classifier import predict_in_batches

        return predict_in_batches(self, texts)

    def close(self) -> None:
        if self._proc.poll() is not None:
            return
        try:
            with self._lock:
                self._proc.stdin.write(json.dumps({"op": "shutdown"}) + "\n")
                self._proc.stdin.flush()
                self._proc.stdin.close()
            self._proc.wait(timeout=10)
        except (OSError, ValueError, subprocess.TimeoutExpired):
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect_external(command: str, **kwargs) -> ExternalHandle:
    """Launch an adapter process and perform the handshake."""
    return ExternalHandle(command, **kwargs)
