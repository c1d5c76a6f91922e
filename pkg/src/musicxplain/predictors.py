"""Black-box classifier contract, deterministic toy models, and the
subprocess client for external model processes.

A predictor consumes batches of (lyrics, waveform, sample_rate) triples and
returns one probability vector per input. The toys are pure functions of
their inputs, built so tests can derive expected outputs by hand. The
external client speaks newline-delimited JSON over a child process's
stdin/stdout (see `external_predictor_connect`).
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from abc import ABC, abstractmethod
from collections import Counter
from typing import Sequence

import numpy as np

from .core import ClassLabel, labels_from_names, validate_prediction_vector
from .errors import (
    HandshakeTimeout,
    MalformedResponse,
    PredictorError,
    ProtocolError,
    ResponseLengthMismatch,
    ResponseNotNormalized,
    ValidationError,
)
from .text import clean_and_tokenize, clean_lyrics
from .audio import pcm_to_b64

Batch = Sequence[tuple[str, np.ndarray, int]]


class PredictorContract(ABC):
    """What the explainer requires of any classifier.

    Implementations must be deterministic (identical batch in, identical
    probabilities out) and must preserve input order. Each output row is a
    probability vector over `labels`.
    """

    labels: tuple[ClassLabel, ...]

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @abstractmethod
    def predict_proba(self, batch: Batch) -> np.ndarray:
        """Probabilities for a batch, shape [len(batch), n_classes]."""


def predict_batch(model: PredictorContract, batch: Batch) -> np.ndarray:
    """Run a batch through `model` and enforce the output contract."""
    if len(batch) == 0:
        raise ValidationError("predictor batch must be non-empty")
    out = np.asarray(model.predict_proba(batch), dtype=np.float64)
    if out.shape != (len(batch), model.n_classes):
        raise PredictorError(
            f"predictor returned shape {out.shape}, expected ({len(batch)}, {model.n_classes})"
        )
    for i in range(out.shape[0]):
        try:
            validate_prediction_vector(out[i], model.n_classes)
        except ValidationError as exc:
            raise PredictorError(str(exc), sample_index=i) from exc
    return out


def _softmax(scores: np.ndarray, tau: float) -> np.ndarray:
    z = np.asarray(scores, dtype=np.float64) / tau
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


class LexiconToyModel(PredictorContract):
    """Text toy: class score = occurrences of that class's keywords in the
    cleaned lyrics, probabilities = softmax(scores / tau).

    Word order never matters, and neither does any non-keyword word, which
    makes expected explanations derivable from keyword counts alone.
    """

    def __init__(self, label_names: Sequence[str], keywords: Sequence[Sequence[str]], tau: float = 1.0):
        if tau <= 0:
            raise ValidationError(f"tau must be > 0, got {tau}")
        self.labels = labels_from_names(label_names)
        if len(keywords) != len(self.labels):
            raise ValidationError(
                f"got keyword lists for {len(keywords)} classes, expected {len(self.labels)}"
            )
        cleaned: list[tuple[str, ...]] = []
        for class_words in keywords:
            row = []
            for word in class_words:
                normalized = clean_lyrics(word)
                if not normalized or " " in normalized:
                    raise ValidationError(f"keyword {word!r} does not normalize to a single word")
                row.append(normalized)
            cleaned.append(tuple(row))
        self.keywords = tuple(cleaned)
        self.tau = float(tau)

    def predict_proba(self, batch: Batch) -> np.ndarray:
        out = np.empty((len(batch), self.n_classes), dtype=np.float64)
        for i, (lyrics, _, _) in enumerate(batch):
            counts = Counter(clean_and_tokenize(lyrics).tokens())
            scores = [
                float(sum(counts[word] for word in class_words))
                for class_words in self.keywords
            ]
            out[i] = _softmax(np.array(scores), self.tau)
        return out


class BandEnergyToyModel(PredictorContract):
    """Audio toy: class score = fraction of spectral energy inside that
    class's frequency band, probabilities = softmax(scores / tau).

    Energy comes from the squared-magnitude FFT of the full waveform, so the
    score of a band is directly checkable against a hand-computed spectrum.
    Empty or silent audio scores zero everywhere (uniform probabilities).
    """

    def __init__(
        self,
        label_names: Sequence[str],
        bands_hz: Sequence[tuple[float, float]],
        tau: float = 1.0,
    ):
        if tau <= 0:
            raise ValidationError(f"tau must be > 0, got {tau}")
        self.labels = labels_from_names(label_names)
        if len(bands_hz) != len(self.labels):
            raise ValidationError(
                f"got {len(bands_hz)} bands, expected one per class ({len(self.labels)})"
            )
        for lo, hi in bands_hz:
            if not (0 <= lo < hi):
                raise ValidationError(f"invalid band [{lo}, {hi}) Hz")
        self.bands_hz = tuple((float(lo), float(hi)) for lo, hi in bands_hz)
        self.tau = float(tau)

    def _scores(self, stacked: np.ndarray, sample_rate: int) -> np.ndarray:
        """Band-energy fractions for equal-length rows, shape [n, n_classes]."""
        spectrum = np.fft.rfft(stacked, axis=1)
        energy = spectrum.real**2 + spectrum.imag**2
        freqs = np.fft.rfftfreq(stacked.shape[1], d=1.0 / sample_rate)
        total = energy.sum(axis=1)
        scores = np.zeros((stacked.shape[0], self.n_classes), dtype=np.float64)
        live = total > 0
        for c, (lo, hi) in enumerate(self.bands_hz):
            # freqs ascend, so [lo, hi) is a contiguous bin range
            lo_i = int(np.searchsorted(freqs, lo, side="left"))
            hi_i = int(np.searchsorted(freqs, hi, side="left"))
            scores[live, c] = energy[:, lo_i:hi_i].sum(axis=1)[live] / total[live]
        return scores

    def predict_proba(self, batch: Batch) -> np.ndarray:
        out = np.empty((len(batch), self.n_classes), dtype=np.float64)
        # vectorize FFTs over runs of equal-length audio at one rate
        # (perturbation batches are homogeneous); chunked to bound memory
        groups: dict[tuple[int, int], list[int]] = {}
        for i, (_, audio, sr) in enumerate(batch):
            groups.setdefault((len(np.atleast_1d(audio)) if audio is not None else 0, sr), []).append(i)
        for (length, sr), idx in groups.items():
            if length == 0:
                out[idx] = 1.0 / self.n_classes
                continue
            chunk_rows = max(1, (1 << 23) // length)
            for start in range(0, len(idx), chunk_rows):
                chunk = idx[start : start + chunk_rows]
                stacked = np.stack([np.asarray(batch[i][1], dtype=np.float64) for i in chunk])
                scores = self._scores(stacked, sr)
                for row, i in enumerate(chunk):
                    out[i] = _softmax(scores[row], self.tau)
        return out


class FusedToyModel(PredictorContract):
    """Multimodal toy: alpha * text probabilities + (1 - alpha) * audio
    probabilities, renormalized. alpha=1 reproduces the text model
    bit-for-bit and alpha=0 the audio model."""

    def __init__(self, text_model: PredictorContract, audio_model: PredictorContract, alpha: float = 0.5):
        if not (0.0 <= alpha <= 1.0):
            raise ValidationError(f"alpha must be in [0, 1], got {alpha}")
        if text_model.labels != audio_model.labels:
            raise ValidationError("fused toy requires identical label sets in both models")
        self.labels = text_model.labels
        self.text_model = text_model
        self.audio_model = audio_model
        self.alpha = float(alpha)

    def predict_proba(self, batch: Batch) -> np.ndarray:
        # the endpoints must be exact, not renormalized-close
        if self.alpha == 1.0:
            return self.text_model.predict_proba(batch)
        if self.alpha == 0.0:
            return self.audio_model.predict_proba(batch)
        mixed = self.alpha * self.text_model.predict_proba(batch) + (
            1.0 - self.alpha
        ) * self.audio_model.predict_proba(batch)
        return mixed / mixed.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# External predictor processes
# ---------------------------------------------------------------------------


class _LineReader:
    """Background line reader so response waits can time out cleanly."""

    _EOF = object()

    def __init__(self, stream):
        self._queue: queue.Queue = queue.Queue()
        self._thread = threading.Thread(target=self._pump, args=(stream,), daemon=True)
        self._thread.start()

    def _pump(self, stream):
        try:
            for line in stream:
                self._queue.put(line)
        except ValueError:
            pass  # stream closed under us during shutdown
        self._queue.put(self._EOF)

    def readline(self, timeout: float):
        """One line, or None on timeout, or '' at EOF."""
        try:
            item = self._queue.get(timeout=timeout)
        except queue.Empty:
            return None
        return "" if item is self._EOF else item


class ExternalPredictor(PredictorContract):
    """A classifier running as a child process, addressed over stdin/stdout.

    The child announces its label set in a one-line handshake, then answers
    each request line with a response line carrying the same id. Requests are
    pipelined in chunks of `batch_size`; responses may arrive out of order
    and are matched back by id.
    """

    def __init__(
        self,
        command,
        args: Sequence[str] = (),
        handshake_timeout: float = 30.0,
        response_timeout: float = 120.0,
        batch_size: int = 32,
    ):
        if batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {batch_size}")
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        argv += list(args)
        self._argv = argv
        self.batch_size = int(batch_size)
        self.response_timeout = float(response_timeout)
        self._next_id = 0
        self._stderr_tail: list[str] = []
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot spawn predictor command {argv[0]!r}: {exc}") from exc
        self._reader = _LineReader(self._proc.stdout)
        self._stderr_thread = threading.Thread(target=self._drain_stderr, daemon=True)
        self._stderr_thread.start()
        self.labels = self._handshake(handshake_timeout)

    def _drain_stderr(self):
        try:
            for line in self._proc.stderr:
                self._stderr_tail.append(line)
                del self._stderr_tail[:-50]
        except ValueError:
            pass

    def _diagnostic(self) -> str:
        tail = "".join(self._stderr_tail).strip()
        return f" (predictor stderr: {tail[:500]})" if tail else ""

    def _handshake(self, timeout: float) -> tuple[ClassLabel, ...]:
        line = self._reader.readline(timeout)
        if line is None:
            self.close()
            raise HandshakeTimeout(f"no handshake from predictor within {timeout}s{self._diagnostic()}")
        if line == "":
            self.close()
            raise ProtocolError(f"predictor exited before handshake{self._diagnostic()}")
        try:
            message = json.loads(line)
            n_classes = int(message["n_classes"])
            names = list(message["labels"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            self.close()
            raise MalformedResponse(f"bad handshake line {line.strip()!r}: {exc}") from exc
        if n_classes != len(names):
            self.close()
            raise MalformedResponse(
                f"handshake n_classes={n_classes} disagrees with {len(names)} labels"
            )
        if n_classes < 1:
            self.close()
            raise MalformedResponse("handshake declared zero classes")
        return labels_from_names(names)

    def predict_proba(self, batch: Batch) -> np.ndarray:
        out = np.empty((len(batch), self.n_classes), dtype=np.float64)
        for start in range(0, len(batch), self.batch_size):
            chunk = batch[start : start + self.batch_size]
            self._roundtrip(chunk, start, out)
        return out

    def _roundtrip(self, chunk: Batch, offset: int, out: np.ndarray):
        if self._proc.poll() is not None:
            raise ProtocolError(f"predictor process has exited{self._diagnostic()}")
        id_to_index: dict[int, int] = {}
        lines = []
        for i, (lyrics, audio, sample_rate) in enumerate(chunk):
            request_id = self._next_id
            self._next_id += 1
            id_to_index[request_id] = offset + i
            lines.append(
                json.dumps(
                    {
                        "id": request_id,
                        "lyrics": lyrics,
                        "sample_rate": int(sample_rate),
                        "audio_b64": pcm_to_b64(audio if audio is not None else []),
                    },
                    ensure_ascii=False,
                )
            )
        try:
            self._proc.stdin.write("\n".join(lines) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"predictor pipe closed during write{self._diagnostic()}") from exc

        pending = set(id_to_index)
        while pending:
            line = self._reader.readline(self.response_timeout)
            if line is None:
                raise ProtocolError(
                    f"no response within {self.response_timeout}s, "
                    f"{len(pending)} request(s) outstanding{self._diagnostic()}"
                )
            if line == "":
                raise ProtocolError(f"predictor closed its output mid-batch{self._diagnostic()}")
            if not line.strip():
                continue
            self._consume_response(line, id_to_index, pending, out)

    def _consume_response(self, line: str, id_to_index, pending: set, out: np.ndarray):
        try:
            message = json.loads(line)
            response_id = int(message["id"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedResponse(f"bad response line {line.strip()!r}: {exc}") from exc
        if response_id not in pending:
            raise MalformedResponse(
                f"response id {response_id} does not match any outstanding request"
            )
        index = id_to_index[response_id]
        if "error" in message:
            raise PredictorError(
                str(message["error"]), request_id=response_id, sample_index=index
            )
        if "probabilities" not in message:
            raise MalformedResponse(f"response {response_id} has neither probabilities nor error")
        probs = np.asarray(message["probabilities"], dtype=np.float64)
        if probs.shape != (self.n_classes,):
            raise ResponseLengthMismatch(
                f"response {response_id} carries {probs.shape[0] if probs.ndim == 1 else 'non-vector'}"
                f" probabilities, expected {self.n_classes}",
                request_id=response_id,
                sample_index=index,
            )
        total = float(probs.sum())
        if not np.all(np.isfinite(probs)) or np.any(probs < 0) or abs(total - 1.0) > 1e-4:
            raise ResponseNotNormalized(
                f"response {response_id} probabilities sum to {total!r} or leave [0,1]",
                request_id=response_id,
                sample_index=index,
            )
        out[index] = probs / total  # exact renormalization after the tolerant accept
        pending.discard(response_id)

    def close(self):
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        try:
            if proc.stdin and not proc.stdin.closed:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.terminate()
            try:
                proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self) -> "ExternalPredictor":
        return self

    def __exit__(self, *exc_info):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def external_predictor_connect(command, args: Sequence[str] = (), **kwargs) -> ExternalPredictor:
    """Spawn an external predictor process and complete its handshake."""
    return ExternalPredictor(command, args=args, **kwargs)
