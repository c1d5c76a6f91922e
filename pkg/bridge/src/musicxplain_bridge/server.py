"""Newline-JSON request loop speaking the predictor wire protocol.

One handshake line `{"n_classes": N, "labels": [...]}` on startup, then one
response per request line: `{"id": ..., "probabilities": [...]}` on success
or `{"id": ..., "error": "..."}` on any per-request failure. Request
problems never kill the process; only a broken stdin/stdout pipe ends the
loop.
"""

from __future__ import annotations

import json
import sys

from .config import BridgeConfig
from .features import decode_pcm_b64
from .model import BridgeModel


class RequestError(ValueError):
    """A request line that cannot be served; reported back under its id."""


def parse_request(line: str) -> tuple[object, str, "object", int]:
    """-> (id, lyrics, waveform, sample_rate); raises RequestError."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RequestError(f"request is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise RequestError("request must be a JSON object")
    if "id" not in doc:
        raise RequestError("request has no id")
    rid = doc["id"]

    lyrics = doc.get("lyrics", "")
    if not isinstance(lyrics, str):
        raise RequestError("lyrics must be a string") from None

    audio_b64 = doc.get("audio_b64", "")
    if audio_b64 is None:
        audio_b64 = ""
    try:
        wave = decode_pcm_b64(audio_b64)
    except ValueError as exc:
        raise RequestError(str(exc)) from exc

    sample_rate = doc.get("sample_rate", 0)
    if wave.size:
        if not isinstance(sample_rate, int) or isinstance(sample_rate, bool) or sample_rate < 1:
            raise RequestError(f"sample_rate must be a positive integer, got {sample_rate!r}")
    return rid, lyrics, wave, int(sample_rate) if isinstance(sample_rate, int) else 0


def _request_id(line: str):
    """Best-effort id extraction for error responses."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError:
        return None
    if isinstance(doc, dict):
        return doc.get("id")
    return None


def serve(config: BridgeConfig, stdin=None, stdout=None) -> None:
    """Load the model, emit the handshake, answer until stdin closes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    model = BridgeModel(config)

    def emit(doc: dict) -> None:
        stdout.write(json.dumps(doc) + "\n")
        stdout.flush()

    emit({"n_classes": config.n_classes, "labels": list(config.labels)})

    for line in stdin:
        if not line.strip():
            continue
        try:
            rid, lyrics, wave, sample_rate = parse_request(line)
        except RequestError as exc:
            emit({"id": _request_id(line), "error": str(exc)})
            continue
        try:
            probs = model.predict(lyrics, wave, sample_rate)
        except Exception as exc:  # any inference failure stays per-request
            emit({"id": rid, "error": f"inference failed: {exc}"})
            continue
        emit({"id": rid, "probabilities": [float(p) for p in probs]})
