"""Audio ingestion, segmentation, source separation, and mask resynthesis.

The interpretable audio unit is one (segment, source) cell. Separation runs
once over the full waveform (per-segment transforms would add boundary
artifacts), then the separated sources are sliced by the segment bounds.
Reconstruction sums the cells a mask keeps; masked cells contribute silence.

Separator back ends:
  * null  - single "mix" source, i.e. plain time segmentation
  * hpss  - built-in harmonic/percussive separation by median filtering
  * stems - pre-separated per-source WAV files on disk
  * external - spawn a separator process speaking a one-line JSON protocol
"""

from __future__ import annotations

import base64
import json
import shlex
import struct
import subprocess
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import MultimodalInstance
from .errors import FormatError, NumericalError, ProtocolError, ValidationError

DEFAULT_SOURCE_NAMES = ("vocals", "drums", "bass", "other")

# ---------------------------------------------------------------------------
# WAV ingestion
# ---------------------------------------------------------------------------

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


def load_wav(path) -> tuple[np.ndarray, int]:
    """Load a PCM WAV file as (mono float32 samples in [-1, 1], sample rate).

    Accepts 16-bit integer and 32-bit float PCM with 1 or 2 channels. Stereo
    is downmixed by averaging the channels; 16-bit samples are scaled by
    1/32768. Mono float input passes through bit-identically.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            data = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or len(fmt) < 16:
        raise FormatError(f"{path}: missing or truncated fmt chunk")
    if data is None:
        raise FormatError(f"{path}: missing data chunk")

    format_code, n_channels, sample_rate, _, block_align, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if format_code == _WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 26:
            raise FormatError(f"{path}: truncated WAVE_FORMAT_EXTENSIBLE fmt chunk")
        (format_code,) = struct.unpack_from("<H", fmt, 24)  # first bytes of the SubFormat GUID

    if format_code == _WAVE_FORMAT_PCM and bits == 16:
        dtype = np.dtype("<i2")
    elif format_code == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        dtype = np.dtype("<f4")
    else:
        raise FormatError(
            f"{path}: unsupported WAV encoding (format {format_code}, {bits}-bit); "
            f"expected 16-bit PCM or 32-bit float"
        )
    if n_channels not in (1, 2):
        raise FormatError(f"{path}: {n_channels} channels unsupported (expected 1 or 2)")
    if sample_rate <= 0:
        raise FormatError(f"{path}: invalid sample rate {sample_rate}")

    frame_size = n_channels * dtype.itemsize
    if block_align and block_align != frame_size:
        raise FormatError(f"{path}: block alignment {block_align} does not match format")
    n_frames = len(data) // frame_size
    if n_frames == 0:
        raise ValidationError(f"{path}: zero-length audio")

    samples = np.frombuffer(data[: n_frames * frame_size], dtype=dtype)
    if n_channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1, dtype=np.float64)
    if dtype.kind == "i":
        mono = (np.asarray(samples, dtype=np.float64) / 32768.0).astype(np.float32)
    elif n_channels == 2:
        mono = samples.astype(np.float32)
    else:
        mono = samples.astype(np.float32)  # mono float32 passthrough
    return mono, int(sample_rate)


def pcm_to_b64(waveform) -> str:
    """Encode a waveform as base64 little-endian float32 PCM."""
    return base64.b64encode(np.asarray(waveform, dtype="<f4").tobytes()).decode("ascii")


def b64_to_pcm(payload: str) -> np.ndarray:
    """Decode base64 little-endian float32 PCM into a float32 vector."""
    try:
        buf = base64.b64decode(payload, validate=True)
    except Exception as exc:
        raise ValidationError(f"invalid base64 PCM payload: {exc}") from exc
    if len(buf) % 4:
        raise ValidationError(f"PCM payload length {len(buf)} is not a multiple of 4 bytes")
    return np.frombuffer(buf, dtype="<f4").astype(np.float32)


# ---------------------------------------------------------------------------
# Segmentation
# ---------------------------------------------------------------------------


def segment_bounds(n_samples: int, n_segments: int = 10) -> list[tuple[int, int]]:
    """Contiguous (start, end) spans tiling [0, n_samples).

    Every segment has floor(n/k) samples; the last one absorbs the remainder
    so the count stays exactly `n_segments`.
    """
    if n_segments < 1:
        raise ValidationError(f"n_segments must be >= 1, got {n_segments}")
    if n_samples < n_segments:
        raise ValidationError(f"cannot split {n_samples} samples into {n_segments} segments")
    size = n_samples // n_segments
    bounds = [(i * size, (i + 1) * size) for i in range(n_segments)]
    bounds[-1] = (bounds[-1][0], n_samples)
    return bounds


# ---------------------------------------------------------------------------
# STFT and the built-in harmonic/percussive separator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StftConfig:
    """Hann-window STFT parameters for the built-in separator.

    The hop must divide the window size and the squared analysis window must
    satisfy the constant-overlap-add condition, which makes the weighted
    overlap-add inverse exact up to rounding.
    """

    window_size: int = 1024
    hop: int = 256

    def __post_init__(self):
        if self.window_size < 2 or self.hop < 1:
            raise ValidationError(f"invalid STFT shape: window {self.window_size}, hop {self.hop}")
        if self.window_size % self.hop:
            raise ValidationError(f"hop {self.hop} must divide window size {self.window_size}")
        cola = _squared_overlap(self.window(), self.hop)
        if cola.max() - cola.min() > 1e-10:
            raise ValidationError(
                f"squared window is not constant-overlap-add at hop {self.hop} "
                f"(spread {cola.max() - cola.min():.3g})"
            )

    def window(self) -> np.ndarray:
        n = np.arange(self.window_size)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / self.window_size))  # periodic Hann


def _squared_overlap(window: np.ndarray, hop: int) -> np.ndarray:
    """Steady-state overlap-add of the squared window over one hop period."""
    w2 = window.astype(np.float64) ** 2
    acc = np.zeros(hop)
    for start in range(0, len(w2), hop):
        acc += w2[start : start + hop]
    return acc


def stft(waveform, config: StftConfig) -> np.ndarray:
    """Complex STFT, shape [n_bins, n_frames]. Pads so every input sample
    sits in the steady-state overlap region."""
    x = np.asarray(waveform, dtype=np.float64)
    win, hop = config.window(), config.hop
    w = config.window_size
    tail = (-(len(x) + w)) % hop
    padded = np.concatenate([np.zeros(w), x, np.zeros(w + tail)])
    frames = np.lib.stride_tricks.sliding_window_view(padded, w)[::hop] * win
    return np.fft.rfft(frames, axis=1).T


def istft(spectrum, config: StftConfig, length: int) -> np.ndarray:
    """Weighted overlap-add inverse of `stft`, trimmed to `length` samples."""
    win, hop = config.window(), config.hop
    w = config.window_size
    frames = np.fft.irfft(np.asarray(spectrum).T, n=w, axis=1) * win
    n_frames = frames.shape[0]
    total = (n_frames - 1) * hop + w
    acc = np.zeros(total)
    norm = np.zeros(total)
    idx = (np.arange(n_frames) * hop)[:, None] + np.arange(w)[None, :]
    np.add.at(acc, idx, frames)
    np.add.at(norm, idx, np.broadcast_to(win**2, frames.shape))
    out = np.divide(acc, norm, out=np.zeros_like(acc), where=norm > 1e-12)
    return out[w : w + length]


def hpss_separate(
    waveform,
    stft_config: StftConfig | None = None,
    kernel_time: int = 17,
    kernel_freq: int = 17,
) -> dict[str, np.ndarray]:
    """Median-filtering harmonic/percussive separation with complementary soft masks.

    Harmonic enhancement median-filters the magnitude spectrogram along time
    (`kernel_time` frames), percussive along frequency (`kernel_freq` bins).
    Soft masks are M_h = H^2 / (H^2 + P^2 + eps) and M_p = 1 - M_h, so the two
    components sum to the STFT round-trip of the input exactly.
    """
    config = stft_config or StftConfig()
    x = np.asarray(waveform, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError(f"waveform must be 1-D, got shape {x.shape}")
    if len(x) < config.window_size:
        raise ValidationError(
            f"waveform of {len(x)} samples is shorter than one window ({config.window_size})"
        )
    if kernel_time < 1 or kernel_freq < 1:
        raise ValidationError("median kernels must be >= 1")

    spec = stft(x, config)
    mag = np.abs(spec)
    harm = ndimage.median_filter(mag, size=(1, kernel_time), mode="reflect")
    perc = ndimage.median_filter(mag, size=(kernel_freq, 1), mode="reflect")
    eps = 1e-10
    mask_h = harm**2 / (harm**2 + perc**2 + eps)
    mask_p = 1.0 - mask_h
    return {
        "harmonic": istft(mask_h * spec, config, len(x)).astype(np.float32),
        "percussive": istft(mask_p * spec, config, len(x)).astype(np.float32),
    }


# ---------------------------------------------------------------------------
# Stems and external separators
# ---------------------------------------------------------------------------


def load_stems(directory, source_names: Sequence[str]) -> tuple[list[np.ndarray], int]:
    """Load one WAV per source name from `directory`, in the given order.

    All stems must agree on length and sample rate. Layout:
    ``<directory>/<source_name>.wav``.
    """
    directory = Path(directory)
    waves: list[np.ndarray] = []
    rate: int | None = None
    for name in source_names:
        path = directory / f"{name}.wav"
        if not path.exists():
            raise ValidationError(f"missing stem file for source {name!r}: {path}")
        wave, sr = load_wav(path)
        if rate is None:
            rate = sr
        elif sr != rate:
            raise ValidationError(f"stem {name!r} sample rate {sr} differs from {rate}")
        if waves and len(wave) != len(waves[0]):
            raise ValidationError(
                f"stem {name!r} has {len(wave)} samples, expected {len(waves[0])}"
            )
        waves.append(wave)
    return waves, int(rate)


def run_external_separator(
    command,
    waveform,
    sample_rate: int,
    source_names: Sequence[str],
    timeout: float = 300.0,
) -> list[np.ndarray]:
    """Invoke an external separator once and collect its sources.

    Protocol: one request line ``{"sample_rate": int, "audio_b64": ...}`` on
    the child's stdin, one response line ``{"sources": {name: b64, ...}}`` on
    its stdout. Every configured source must be present and match the input
    length.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    request = json.dumps(
        {"sample_rate": int(sample_rate), "audio_b64": pcm_to_b64(waveform)}
    )
    try:
        proc = subprocess.run(
            argv,
            input=request + "\n",
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except FileNotFoundError as exc:
        raise ProtocolError(f"cannot spawn separator command {argv[0]!r}: {exc}") from exc
    except subprocess.TimeoutExpired as exc:
        raise ProtocolError(f"separator timed out after {timeout}s") from exc
    if proc.returncode != 0:
        raise ProtocolError(
            f"separator exited with status {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    line = proc.stdout.strip().splitlines()
    if not line:
        raise ProtocolError("separator produced no response line")
    try:
        response = json.loads(line[0])
        sources = response["sources"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ProtocolError(f"malformed separator response: {exc}") from exc

    n = len(np.asarray(waveform))
    waves = []
    for name in source_names:
        if name not in sources:
            raise ProtocolError(f"separator response is missing source {name!r}")
        wave = b64_to_pcm(sources[name])
        if len(wave) != n:
            raise ProtocolError(
                f"separator source {name!r} has {len(wave)} samples, expected {n}"
            )
        waves.append(wave)
    return waves


# ---------------------------------------------------------------------------
# Separator specification and decomposition
# ---------------------------------------------------------------------------


class SeparatorKind(str, Enum):
    NULL = "null"
    HPSS = "hpss"
    STEMS = "stems"
    EXTERNAL = "external"


@dataclass(frozen=True)
class SeparatorSpec:
    """How to split a waveform into named sources; fixes the source order."""

    kind: SeparatorKind
    source_names: tuple[str, ...]
    stems_dir: str | None = None
    command: str | None = None
    stft_config: StftConfig = field(default_factory=StftConfig)
    kernel_time: int = 17
    kernel_freq: int = 17

    def __post_init__(self):
        if not self.source_names:
            raise ValidationError("separator must declare at least one source name")
        if len(set(self.source_names)) != len(self.source_names):
            raise ValidationError("separator source names must be unique")
        if self.kind is SeparatorKind.STEMS and not self.stems_dir:
            raise ValidationError("stems separator requires a directory")
        if self.kind is SeparatorKind.EXTERNAL and not self.command:
            raise ValidationError("external separator requires a command")

    @classmethod
    def null(cls) -> "SeparatorSpec":
        return cls(kind=SeparatorKind.NULL, source_names=("mix",))

    @classmethod
    def hpss(
        cls,
        stft_config: StftConfig | None = None,
        kernel_time: int = 17,
        kernel_freq: int = 17,
    ) -> "SeparatorSpec":
        return cls(
            kind=SeparatorKind.HPSS,
            source_names=("harmonic", "percussive"),
            stft_config=stft_config or StftConfig(),
            kernel_time=kernel_time,
            kernel_freq=kernel_freq,
        )

    @classmethod
    def stems(cls, directory, source_names: Sequence[str] = DEFAULT_SOURCE_NAMES) -> "SeparatorSpec":
        return cls(kind=SeparatorKind.STEMS, source_names=tuple(source_names), stems_dir=str(directory))

    @classmethod
    def external(cls, command: str, source_names: Sequence[str] = DEFAULT_SOURCE_NAMES) -> "SeparatorSpec":
        return cls(kind=SeparatorKind.EXTERNAL, source_names=tuple(source_names), command=command)

    def separate(self, waveform: np.ndarray, sample_rate: int) -> list[np.ndarray]:
        """Split the full waveform into per-source waveforms, separator order."""
        if self.kind is SeparatorKind.NULL:
            return [np.asarray(waveform)]
        if self.kind is SeparatorKind.HPSS:
            parts = hpss_separate(waveform, self.stft_config, self.kernel_time, self.kernel_freq)
            return [parts[name] for name in self.source_names]
        if self.kind is SeparatorKind.STEMS:
            waves, sr = load_stems(self.stems_dir, self.source_names)
            if sr != sample_rate:
                raise ValidationError(f"stems sample rate {sr} differs from instance rate {sample_rate}")
            if len(waves[0]) != len(waveform):
                raise ValidationError(
                    f"stems length {len(waves[0])} differs from mix length {len(waveform)}"
                )
            return waves
        return run_external_separator(self.command, waveform, sample_rate, self.source_names)


@dataclass(frozen=True)
class Decomposition:
    """Per-(segment, source) waveform slices of one instance.

    `components[s][k]` is source `k` of segment `s`, in separator source
    order. The segment bounds tile the waveform; summing all components of a
    segment reproduces that segment of the separated signal. `residual_rel_l2`
    records how far the separated sum is from the original audio (guaranteed
    tiny for the built-in separators, a data property for stems/external).
    """

    components: tuple[tuple[np.ndarray, ...], ...]
    bounds: tuple[tuple[int, int], ...]
    sample_rate: int
    source_names: tuple[str, ...]
    residual_rel_l2: float

    @property
    def n_segments(self) -> int:
        return len(self.bounds)

    @property
    def n_sources(self) -> int:
        return len(self.source_names)

    @property
    def n_samples(self) -> int:
        return self.bounds[-1][1]

    def feature_pairs(self) -> list[tuple[int, str]]:
        """The (segment, source) feature list in canonical segment-major order."""
        return [(s, name) for s in range(self.n_segments) for name in self.source_names]


def _relative_l2(delta: np.ndarray, reference: np.ndarray) -> float:
    ref = float(np.linalg.norm(np.asarray(reference, dtype=np.float64)))
    err = float(np.linalg.norm(np.asarray(delta, dtype=np.float64)))
    return err / ref if ref > 0 else err


def decompose(
    instance: MultimodalInstance,
    separator: SeparatorSpec,
    n_segments: int = 10,
) -> Decomposition:
    """Separate the full waveform once, then slice it into segment cells."""
    if not instance.has_audio:
        raise ValidationError(f"instance {instance.id!r} has no audio to decompose")
    sources = separator.separate(instance.audio, instance.sample_rate)
    bounds = segment_bounds(len(instance.audio), n_segments)

    total = np.zeros(len(instance.audio), dtype=np.float64)
    for wave in sources:
        total += np.asarray(wave, dtype=np.float64)
    residual = _relative_l2(total - np.asarray(instance.audio, dtype=np.float64), instance.audio)
    if separator.kind in (SeparatorKind.NULL, SeparatorKind.HPSS) and residual > 1e-4:
        raise NumericalError(
            f"{separator.kind.value} separation drifted from the input "
            f"(relative L2 {residual:.3g})"
        )

    components = tuple(
        tuple(np.asarray(wave[b0:b1]) for wave in sources) for b0, b1 in bounds
    )
    return Decomposition(
        components=components,
        bounds=tuple(bounds),
        sample_rate=instance.sample_rate,
        source_names=separator.source_names,
        residual_rel_l2=residual,
    )


def reconstruct(decomp: Decomposition, audio_submask) -> np.ndarray:
    """Resynthesize the waveform a mask selects.

    The submask is segment-major over (segment, source) cells, matching the
    canonical feature order. Unmasked cells sum sample-wise; masked cells are
    silent. Accumulation is float64, which keeps disjoint-mask additivity
    exact for float32 components.
    """
    bits = np.asarray(audio_submask)
    expected = decomp.n_segments * decomp.n_sources
    if bits.shape != (expected,):
        raise ValidationError(
            f"audio submask has shape {bits.shape}, expected ({expected},) "
            f"for {decomp.n_segments} segments x {decomp.n_sources} sources"
        )
    out = np.zeros(decomp.n_samples, dtype=np.float64)
    for s, (b0, b1) in enumerate(decomp.bounds):
        base = s * decomp.n_sources
        for k in range(decomp.n_sources):
            if bits[base + k]:
                out[b0:b1] += decomp.components[s][k]
    return out
