"""Checkpoint loading and fused inference on tiny local models."""

import numpy as np
import pytest

from bridge_helpers import GENRES, build_audio_checkpoint, build_fusion_head
from musicxplain_bridge import (
    BridgeConfig,
    BridgeModel,
    BridgeModelError,
    MelConfig,
    load_bridge_config,
)

MEL_8K = MelConfig(sample_rate=8000)


@pytest.fixture(scope="module")
def model(bridge_workspace):
    return BridgeModel(load_bridge_config(bridge_workspace))


def tone(seconds: float, sr: int, freq: float) -> np.ndarray:
    t = np.arange(int(seconds * sr)) / sr
    return (0.4 * np.sin(2 * np.pi * freq * t)).astype(np.float32)


class TestPredict:
    def test_probability_vector_shape_and_norm(self, model):
        probs = model.predict("love in the night", tone(1.0, 8000, 440.0), 8000)
        assert probs.shape == (len(GENRES),)
        assert np.all(probs >= 0.0)
        assert abs(probs.sum() - 1.0) <= 1e-12

    def test_deterministic(self, model):
        wave = tone(0.5, 8000, 200.0)
        first = model.predict("guitar rain", wave, 8000)
        second = model.predict("guitar rain", wave, 8000)
        assert np.max(np.abs(first - second)) <= 1e-6

    def test_lyrics_only(self, model):
        probs = model.predict("dance all night", np.zeros(0, dtype=np.float32), 0)
        assert abs(probs.sum() - 1.0) <= 1e-12

    def test_audio_only(self, model):
        probs = model.predict("", tone(0.5, 8000, 880.0), 8000)
        assert abs(probs.sum() - 1.0) <= 1e-12

    def test_resamples_foreign_rates(self, model):
        probs = model.predict("river stone", tone(0.5, 4000, 100.0), 4000)
        assert probs.shape == (len(GENRES),)
        assert abs(probs.sum() - 1.0) <= 1e-12

    def test_inputs_change_the_output(self, model):
        wave = tone(0.5, 8000, 300.0)
        base = model.predict("love", wave, 8000)
        other_text = model.predict("fire", wave, 8000)
        other_audio = model.predict("love", tone(0.5, 8000, 2000.0), 8000)
        assert np.max(np.abs(base - other_text)) > 1e-9
        assert np.max(np.abs(base - other_audio)) > 1e-9

    def test_unknown_words_tokenize_fine(self, model):
        probs = model.predict("zyzzyva qwerty", np.zeros(0, dtype=np.float32), 0)
        assert abs(probs.sum() - 1.0) <= 1e-12

    def test_long_lyrics_truncated_not_fatal(self, model):
        lyrics = "love night " * 400
        probs = model.predict(lyrics, np.zeros(0, dtype=np.float32), 0)
        assert probs.shape == (len(GENRES),)


class TestLoading:
    def test_n_classes_matches_labels(self, model):
        assert model.n_classes == len(GENRES)

    def test_mel_bins_mismatch_rejected(self, bridge_workspace):
        config = load_bridge_config(bridge_workspace)
        shrunk = BridgeConfig(
            text_checkpoint=config.text_checkpoint,
            audio_checkpoint=config.audio_checkpoint,
            labels=config.labels,
            mel=MelConfig(n_mels=64, sample_rate=8000),
        )
        with pytest.raises(BridgeModelError, match="mel bins"):
            BridgeModel(shrunk)

    def test_missing_checkpoint_rejected(self, tmp_path, bridge_workspace):
        config = load_bridge_config(bridge_workspace)
        broken = BridgeConfig(
            text_checkpoint=str(tmp_path / "nope"),
            audio_checkpoint=config.audio_checkpoint,
            labels=config.labels,
            mel=MEL_8K,
        )
        with pytest.raises(BridgeModelError, match="cannot load checkpoints"):
            BridgeModel(broken)

    def test_head_label_count_mismatch_rejected(self, tmp_path, bridge_workspace):
        config = load_bridge_config(bridge_workspace)
        bad_head = tmp_path / "head5.pt"
        build_fusion_head(bad_head, in_features=64, n_classes=5)
        mismatched = BridgeConfig(
            text_checkpoint=config.text_checkpoint,
            audio_checkpoint=config.audio_checkpoint,
            labels=config.labels,
            fusion_head=str(bad_head),
            mel=MEL_8K,
        )
        with pytest.raises(BridgeModelError, match="fusion head"):
            BridgeModel(mismatched)

    def test_seeded_head_when_none_given(self, bridge_workspace):
        config = load_bridge_config(bridge_workspace)
        headless = BridgeConfig(
            text_checkpoint=config.text_checkpoint,
            audio_checkpoint=config.audio_checkpoint,
            labels=config.labels,
            mel=MEL_8K,
        )
        first = BridgeModel(headless).predict("gold train", np.zeros(0, dtype=np.float32), 0)
        second = BridgeModel(headless).predict("gold train", np.zeros(0, dtype=np.float32), 0)
        np.testing.assert_allclose(first, second, atol=1e-6, rtol=0)

    def test_audio_frame_budget_comes_from_checkpoint(self, model):
        assert model.target_frames == 64
        assert model.n_mel_bins == 128

    def test_foreign_frame_budget_still_loads(self, tmp_path, bridge_workspace):
        config = load_bridge_config(bridge_workspace)
        audio_dir = tmp_path / "audio_small"
        build_audio_checkpoint(audio_dir, n_mel_bins=128, max_length=32)
        resized = BridgeConfig(
            text_checkpoint=config.text_checkpoint,
            audio_checkpoint=str(audio_dir),
            labels=config.labels,
            mel=MEL_8K,
        )
        bridged = BridgeModel(resized)
        assert bridged.target_frames == 32
        probs = bridged.predict("city dream", tone(0.25, 8000, 500.0), 8000)
        assert abs(probs.sum() - 1.0) <= 1e-12
