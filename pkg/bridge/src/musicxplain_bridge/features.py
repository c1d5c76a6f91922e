"""Audio front end: base64 PCM decoding, resampling, log-mel spectrograms.

Mel filters follow the common 2595*log10(1 + f/700) scale with triangular
responses between equally spaced mel points from 0 Hz to Nyquist.
"""

from __future__ import annotations

import base64
import binascii
import math

import numpy as np
from scipy.signal import get_window, resample_poly

from .config import MelConfig

LOG_FLOOR = 1e-10


def decode_pcm_b64(text: str) -> np.ndarray:
    """Base64 of little-endian float32 PCM -> 1-D float32 array."""
    if not isinstance(text, str):
        raise ValueError("audio_b64 must be a string")
    try:
        raw = base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ValueError(f"audio_b64 is not valid base64: {exc}") from exc
    if len(raw) % 4:
        raise ValueError(f"audio payload is {len(raw)} bytes, not a multiple of 4")
    wave = np.frombuffer(raw, dtype="<f4")
    if wave.size and not np.all(np.isfinite(wave)):
        raise ValueError("audio contains non-finite samples")
    return wave.astype(np.float32, copy=False)


def resample_to(wave: np.ndarray, sr: int, target_sr: int) -> np.ndarray:
    """Polyphase resample; identity when the rates already agree."""
    if sr == target_sr:
        return wave
    g = math.gcd(int(sr), int(target_sr))
    out = resample_poly(wave.astype(np.float64), target_sr // g, sr // g)
    return out.astype(np.float32)


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters, shape (n_mels, n_fft // 2 + 1)."""
    nyquist = sample_rate / 2.0
    points = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(nyquist), n_mels + 2))
    bins = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    bank = np.zeros((n_mels, bins.size), dtype=np.float64)
    for m in range(n_mels):
        lo, mid, hi = points[m], points[m + 1], points[m + 2]
        rising = (bins - lo) / max(mid - lo, 1e-12)
        falling = (hi - bins) / max(hi - mid, 1e-12)
        bank[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def frame_signal(wave: np.ndarray, frame: int, hop: int) -> np.ndarray:
    """Overlapping frames, shape (n_frames, frame); input shorter than one
    frame is zero-padded to a single frame."""
    wave = np.asarray(wave, dtype=np.float64)
    if wave.size < frame:
        wave = np.pad(wave, (0, frame - wave.size))
    n_frames = 1 + (wave.size - frame) // hop
    view = np.lib.stride_tricks.sliding_window_view(wave, frame)[::hop]
    return view[:n_frames]


def log_mel(wave: np.ndarray, mel: MelConfig, bank: np.ndarray | None = None) -> np.ndarray:
    """Log mel-power spectrogram, shape (n_frames, n_mels). The waveform is
    assumed to already be at `mel.sample_rate`."""
    if bank is None:
        bank = mel_filterbank(mel.n_mels, mel.n_fft, mel.sample_rate)
    window = get_window("hann", mel.n_fft, fftbins=True)
    frames = frame_signal(wave, mel.n_fft, mel.hop) * window
    spectrum = np.fft.rfft(frames, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    return np.log(power @ bank.T + LOG_FLOOR)


def fit_frames(mel_spec: np.ndarray, target_frames: int) -> np.ndarray:
    """Zero-pad or truncate along time to exactly `target_frames` rows."""
    n = mel_spec.shape[0]
    if n >= target_frames:
        return mel_spec[:target_frames]
    pad = np.full((target_frames - n, mel_spec.shape[1]), np.log(LOG_FLOOR))
    return np.vstack([mel_spec, pad])


def normalize(mel_spec: np.ndarray) -> np.ndarray:
    """Per-clip standardization; constant input maps to zeros."""
    std = mel_spec.std()
    if std < 1e-8:
        return np.zeros_like(mel_spec)
    return (mel_spec - mel_spec.mean()) / std
