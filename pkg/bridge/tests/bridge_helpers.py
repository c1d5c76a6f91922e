"""Test scaffolding: tiny local checkpoints and a raw line-protocol client."""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time
from pathlib import Path

GENRES = [
    "blues", "classical", "country", "disco", "hiphop",
    "jazz", "metal", "pop", "reggae",
]

VOCAB_WORDS = [
    "love", "night", "guitar", "street", "rain", "dance", "fire", "blue",
    "heart", "road", "city", "dream", "gold", "train", "river", "stone",
]


def build_text_checkpoint(directory: Path) -> None:
    """A tiny encoder with a word-level tokenizer, saved locally."""
    import torch
    from tokenizers import Tokenizer, models, pre_tokenizers
    from tokenizers.processors import TemplateProcessing
    from transformers import PreTrainedTokenizerFast, RobertaConfig, RobertaModel

    vocab = {"<s>": 0, "<pad>": 1, "</s>": 2, "<unk>": 3}
    for word in VOCAB_WORDS:
        vocab[word] = len(vocab)
    tok = Tokenizer(models.WordLevel(vocab=vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    tok.post_processor = TemplateProcessing(
        single="<s> $A </s>", special_tokens=[("<s>", 0), ("</s>", 2)]
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        bos_token="<s>",
        eos_token="</s>",
        unk_token="<unk>",
        pad_token="<pad>",
        model_max_length=256,
    )
    fast.save_pretrained(directory)

    torch.manual_seed(101)
    config = RobertaConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=260,
        pad_token_id=1,
        bos_token_id=0,
        eos_token_id=2,
    )
    RobertaModel(config).save_pretrained(directory)


def build_audio_checkpoint(directory: Path, n_mel_bins: int = 128, max_length: int = 64) -> None:
    import torch
    from transformers import ASTConfig, ASTModel

    torch.manual_seed(202)
    config = ASTConfig(
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        patch_size=16,
        frequency_stride=10,
        time_stride=10,
        num_mel_bins=n_mel_bins,
        max_length=max_length,
    )
    ASTModel(config).save_pretrained(directory)


def build_fusion_head(path: Path, in_features: int = 64, n_classes: int = len(GENRES)) -> None:
    import torch

    torch.manual_seed(303)
    head = torch.nn.Linear(in_features, n_classes)
    torch.save(head.state_dict(), path)


def build_workspace(root: Path, sample_rate: int = 8000) -> Path:
    """Checkpoints plus a ready-to-serve config JSON; returns the config path."""
    text_dir = root / "text_model"
    audio_dir = root / "audio_model"
    head_path = root / "head.pt"
    build_text_checkpoint(text_dir)
    build_audio_checkpoint(audio_dir)
    build_fusion_head(head_path)
    config_path = root / "bridge.json"
    config_path.write_text(
        json.dumps(
            {
                "text_checkpoint": "text_model",
                "audio_checkpoint": "audio_model",
                "fusion_head": "head.pt",
                "labels": GENRES,
                "mel": {
                    "n_mels": 128,
                    "n_fft": 512,
                    "hop": 256,
                    "sample_rate": sample_rate,
                },
                "max_text_tokens": 256,
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    return config_path


def server_command(config_path: Path) -> list[str]:
    return [sys.executable, "-m", "musicxplain_bridge", "--config", str(config_path)]


class LineClient:
    """Minimal raw client: spawn the server, read the handshake, exchange
    JSON lines. Used to probe the protocol directly, malformed lines and all."""

    def __init__(self, config_path: Path, handshake_timeout: float = 180.0):
        env = dict(os.environ)
        env.setdefault("HF_HUB_OFFLINE", "1")
        env.setdefault("TRANSFORMERS_OFFLINE", "1")
        self.proc = subprocess.Popen(
            server_command(config_path),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            env=env,
        )
        deadline = time.monotonic() + handshake_timeout
        line = self.proc.stdout.readline()
        if not line:
            raise RuntimeError(
                f"server died before handshake: {self.proc.stderr.read()[-2000:]}"
            )
        if time.monotonic() > deadline:
            raise RuntimeError("handshake timed out")
        self.handshake = json.loads(line)

    def send_line(self, text: str) -> None:
        self.proc.stdin.write(text + "\n")
        self.proc.stdin.flush()

    def send(self, doc: dict) -> None:
        self.send_line(json.dumps(doc))

    def read(self) -> dict:
        line = self.proc.stdout.readline()
        if not line:
            raise RuntimeError(f"server closed stdout: {self.proc.stderr.read()[-2000:]}")
        return json.loads(line)

    def ask(self, doc: dict) -> dict:
        self.send(doc)
        return self.read()

    def alive(self) -> bool:
        return self.proc.poll() is None

    def close(self) -> None:
        try:
            if self.proc.stdin:
                self.proc.stdin.close()
            self.proc.wait(timeout=30)
        except Exception:
            self.proc.kill()
            self.proc.wait()
