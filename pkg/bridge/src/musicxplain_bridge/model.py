"""Checkpoint loading and fused inference.

The text encoder contributes its first-position (CLS) hidden state, the
audio encoder its pooled output; the two are concatenated and passed
through a linear classification head. Probabilities are the softmax of
those logits. Inference runs in eval mode under no_grad, so identical
requests give identical outputs.
"""

from __future__ import annotations

import numpy as np

from .config import BridgeConfig
from .features import fit_frames, log_mel, mel_filterbank, normalize, resample_to


class BridgeModelError(RuntimeError):
    """Checkpoints could not be loaded or do not fit the config."""


class BridgeModel:
    def __init__(self, config: BridgeConfig):
        # imported here so `--help` and config errors stay fast
        import torch
        from transformers import AutoModel, AutoTokenizer

        self.torch = torch
        self.config = config
        device = torch.device(config.device)

        try:
            self.tokenizer = AutoTokenizer.from_pretrained(config.text_checkpoint)
            self.text_model = AutoModel.from_pretrained(config.text_checkpoint).to(device)
            self.audio_model = AutoModel.from_pretrained(config.audio_checkpoint).to(device)
        except Exception as exc:
            raise BridgeModelError(f"cannot load checkpoints: {exc}") from exc
        self.text_model.eval()
        self.audio_model.eval()
        self.device = device

        audio_cfg = self.audio_model.config
        self.n_mel_bins = int(getattr(audio_cfg, "num_mel_bins", config.mel.n_mels))
        self.target_frames = int(getattr(audio_cfg, "max_length", 1024))
        if self.n_mel_bins != config.mel.n_mels:
            raise BridgeModelError(
                f"audio checkpoint expects {self.n_mel_bins} mel bins, "
                f"config provides {config.mel.n_mels}"
            )

        text_width = int(self.text_model.config.hidden_size)
        audio_width = int(audio_cfg.hidden_size)
        self.head = torch.nn.Linear(text_width + audio_width, config.n_classes)
        if config.fusion_head:
            try:
                state = torch.load(config.fusion_head, map_location=device, weights_only=True)
                self.head.load_state_dict(state)
            except Exception as exc:
                raise BridgeModelError(f"cannot load fusion head: {exc}") from exc
            if self.head.out_features != config.n_classes:
                raise BridgeModelError(
                    f"fusion head has {self.head.out_features} outputs "
                    f"for {config.n_classes} labels"
                )
        else:
            # no trained head: fixed seeded init keeps the bridge deterministic
            generator = torch.Generator().manual_seed(0)
            with torch.no_grad():
                self.head.weight.copy_(
                    torch.empty_like(self.head.weight).uniform_(-0.1, 0.1, generator=generator)
                )
                self.head.bias.zero_()
        self.head.to(device)
        self.head.eval()

        self._bank = mel_filterbank(
            config.mel.n_mels, config.mel.n_fft, config.mel.sample_rate
        )

    @property
    def n_classes(self) -> int:
        return self.config.n_classes

    def _text_vector(self, lyrics: str):
        torch = self.torch
        encoded = self.tokenizer(
            lyrics,
            return_tensors="pt",
            truncation=True,
            max_length=self.config.max_text_tokens,
        )
        encoded = {k: v.to(self.device) for k, v in encoded.items()}
        with torch.no_grad():
            hidden = self.text_model(**encoded).last_hidden_state
        return hidden[:, 0, :]

    def _audio_vector(self, wave: np.ndarray, sample_rate: int):
        torch = self.torch
        mel = self.config.mel
        if wave.size:
            wave = resample_to(wave, sample_rate, mel.sample_rate)
            spec = log_mel(wave, mel, bank=self._bank)
        else:
            spec = np.full((1, mel.n_mels), np.log(1e-10))
        spec = normalize(fit_frames(spec, self.target_frames))
        values = torch.from_numpy(spec[None, :, :].astype(np.float32)).to(self.device)
        with torch.no_grad():
            out = self.audio_model(input_values=values)
        pooled = getattr(out, "pooler_output", None)
        if pooled is None:
            pooled = out.last_hidden_state.mean(dim=1)
        return pooled

    def predict(self, lyrics: str, wave: np.ndarray, sample_rate: int) -> np.ndarray:
        """One (lyrics, waveform) pair -> probability vector over labels."""
        torch = self.torch
        fused = torch.cat(
            [self._text_vector(lyrics), self._audio_vector(wave, sample_rate)], dim=1
        )
        with torch.no_grad():
            logits = self.head(fused)[0].double()
            probs = torch.softmax(logits, dim=-1).cpu().numpy()
        return probs / probs.sum()
