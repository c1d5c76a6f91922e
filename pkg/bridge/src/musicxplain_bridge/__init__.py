"""Serve pretrained text+audio transformer classifiers over the newline-JSON
predictor protocol, so any protocol client can query them as a black box."""

from .config import BridgeConfig, BridgeConfigError, MelConfig, load_bridge_config
from .features import (
    decode_pcm_b64,
    fit_frames,
    frame_signal,
    hz_to_mel,
    log_mel,
    mel_filterbank,
    mel_to_hz,
    normalize,
    resample_to,
)
from .model import BridgeModel, BridgeModelError
from .server import RequestError, parse_request, serve

__all__ = [
    "BridgeConfig",
    "BridgeConfigError",
    "BridgeModel",
    "BridgeModelError",
    "MelConfig",
    "RequestError",
    "decode_pcm_b64",
    "fit_frames",
    "frame_signal",
    "hz_to_mel",
    "load_bridge_config",
    "log_mel",
    "mel_filterbank",
    "mel_to_hz",
    "normalize",
    "parse_request",
    "resample_to",
    "serve",
]

__version__ = "0.1.0"
