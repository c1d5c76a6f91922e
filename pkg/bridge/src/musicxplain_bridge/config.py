"""Bridge configuration: which checkpoints to serve and how to hear audio."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class BridgeConfigError(ValueError):
    """The config file or its values cannot be used."""


@dataclass(frozen=True)
class MelConfig:
    """Log-mel front end geometry. Window and FFT share one size; frames
    advance by `hop` samples of audio at `sample_rate`."""

    n_mels: int = 128
    n_fft: int = 512
    hop: int = 256
    sample_rate: int = 44100

    def __post_init__(self):
        if self.n_mels < 1 or self.n_fft < 2 or self.hop < 1:
            raise BridgeConfigError(
                f"invalid mel geometry: {self.n_mels} bands, FFT {self.n_fft}, hop {self.hop}"
            )
        if self.sample_rate < 1:
            raise BridgeConfigError(f"sample rate must be positive, got {self.sample_rate}")


@dataclass(frozen=True)
class BridgeConfig:
    """Everything `serve` needs: checkpoint directories or hub ids for the
    text and audio encoders, the class label names (one per output of the
    fusion head), an optional fusion head weights file, and the audio front
    end. `fusion_head=None` means a fixed seeded random head, which is
    enough for protocol work but not for meaningful predictions."""

    text_checkpoint: str
    audio_checkpoint: str
    labels: tuple[str, ...]
    fusion_head: str | None = None
    mel: MelConfig = field(default_factory=MelConfig)
    max_text_tokens: int = 256
    device: str = "cpu"

    def __post_init__(self):
        if not self.text_checkpoint or not self.audio_checkpoint:
            raise BridgeConfigError("text and audio checkpoint paths are required")
        if not self.labels:
            raise BridgeConfigError("labels must be a non-empty list")
        if len(set(self.labels)) != len(self.labels):
            raise BridgeConfigError("label names must be unique")
        if any(not isinstance(name, str) or not name for name in self.labels):
            raise BridgeConfigError("every label must be a non-empty string")
        if self.max_text_tokens < 1:
            raise BridgeConfigError(f"max_text_tokens must be >= 1, got {self.max_text_tokens}")

    @property
    def n_classes(self) -> int:
        return len(self.labels)


def load_bridge_config(path) -> BridgeConfig:
    """Read a JSON config file. Relative checkpoint / weights paths resolve
    against the config file's directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise BridgeConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BridgeConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise BridgeConfigError(f"config {path} must be a JSON object")

    known = {
        "text_checkpoint", "audio_checkpoint", "labels", "fusion_head",
        "mel", "max_text_tokens", "device",
    }
    unknown = set(doc) - known
    if unknown:
        raise BridgeConfigError(f"config {path}: unknown keys {sorted(unknown)}")
    missing = {"text_checkpoint", "audio_checkpoint", "labels"} - set(doc)
    if missing:
        raise BridgeConfigError(f"config {path}: missing keys {sorted(missing)}")

    def resolve(value: str) -> str:
        candidate = path.parent / value
        return str(candidate) if candidate.exists() else value

    mel_doc = doc.get("mel", {})
    if not isinstance(mel_doc, dict):
        raise BridgeConfigError(f"config {path}: 'mel' must be an object")
    try:
        mel = MelConfig(**mel_doc)
    except TypeError as exc:
        raise BridgeConfigError(f"config {path}: bad mel config: {exc}") from exc

    labels = doc["labels"]
    if not isinstance(labels, list):
        raise BridgeConfigError(f"config {path}: 'labels' must be a list")
    return BridgeConfig(
        text_checkpoint=resolve(str(doc["text_checkpoint"])),
        audio_checkpoint=resolve(str(doc["audio_checkpoint"])),
        labels=tuple(labels),
        fusion_head=resolve(str(doc["fusion_head"])) if doc.get("fusion_head") else None,
        mel=mel,
        max_text_tokens=int(doc.get("max_text_tokens", 256)),
        device=str(doc.get("device", "cpu")),
    )
