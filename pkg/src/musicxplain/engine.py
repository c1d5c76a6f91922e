"""The local explanation core.

One explanation run: build the interpretable feature space for an instance,
sample binary masks over it, render each mask back into a concrete
(lyrics, audio) pair, query the black-box classifier, and fit one weighted
ridge surrogate per target class. The surrogate's coefficients are the
per-feature local importances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .audio import Decomposition, SeparatorSpec, decompose, reconstruct
from .core import (
    BinaryMask,
    ClassLabel,
    FeatureDescriptor,
    FeatureSpace,
    MultimodalInstance,
    canonical_feature_order,
    mask_apply_indexing,
)
from .errors import NumericalError, ValidationError
from .predictors import PredictorContract, predict_batch
from .text import TextFeaturization, clean_and_tokenize, render_masked_lyrics

DEFAULT_SAMPLES_MULTIMODAL = 5000
DEFAULT_SAMPLES_TEXT_ONLY = 2500
DEFAULT_SAMPLES_AUDIO_ONLY = 2000

# masks rendered and scored per predictor call; bounds peak memory, since a
# rendered waveform is as long as the instance itself
RENDER_CHUNK = 256


@dataclass(frozen=True)
class LimeConfig:
    """Sampling and surrogate-fit parameters.

    `n_samples=None` picks the default budget by modality: 5000 when both
    modalities are present, 2500 for text only, 2000 for audio only.
    """

    n_samples: int | None = None
    inclusion_prob: float = 0.5
    kernel_width: float = 0.25
    ridge_lambda: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples is not None and self.n_samples < 2:
            raise ValidationError(f"n_samples must be >= 2, got {self.n_samples}")
        if not (0.0 < self.inclusion_prob < 1.0):
            raise ValidationError(f"inclusion_prob must be in (0,1), got {self.inclusion_prob}")
        if self.kernel_width <= 0:
            raise ValidationError(f"kernel_width must be > 0, got {self.kernel_width}")
        if self.ridge_lambda < 0:
            raise ValidationError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")

    def resolve_n_samples(self, has_lyrics: bool, has_audio: bool) -> int:
        if self.n_samples is not None:
            return self.n_samples
        if has_lyrics and has_audio:
            return DEFAULT_SAMPLES_MULTIMODAL
        if has_lyrics:
            return DEFAULT_SAMPLES_TEXT_ONLY
        return DEFAULT_SAMPLES_AUDIO_ONLY


@dataclass(frozen=True)
class PerturbationSet:
    """The sampled neighborhood of one instance: masks, their proximity
    weights, and the model's probability vector for each rendered mask."""

    masks: tuple[BinaryMask, ...]
    proximity_weights: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        n = len(self.masks)
        if n == 0:
            raise ValidationError("perturbation set is empty")
        if self.proximity_weights.shape != (n,) or self.targets.shape[0] != n:
            raise ValidationError(
                f"inconsistent perturbation set sizes: {n} masks, "
                f"{self.proximity_weights.shape} weights, {self.targets.shape} targets"
            )
        if self.masks[0].n_ones != self.masks[0].d:
            raise ValidationError("first mask must be the all-ones (unperturbed) mask")
        if self.proximity_weights[0] != 1.0:
            raise ValidationError("the unperturbed sample must have proximity weight exactly 1")

    @property
    def n_samples(self) -> int:
        return len(self.masks)

    def mask_matrix(self) -> np.ndarray:
        """Masks stacked as an [n_samples, d] float64 design matrix."""
        return np.stack([m.bits for m in self.masks]).astype(np.float64)


def sample_masks(d: int, n: int, p: float = 0.5, seed: int = 0) -> list[BinaryMask]:
    """The mask sample: index 0 is all-ones, the rest draw each bit
    independently from Bernoulli(p) using a seeded generator."""
    if d < 1:
        raise ValidationError(f"mask dimension must be >= 1, got {d}")
    if n < 2:
        raise ValidationError(f"need at least 2 masks (got {n}): the original plus one draw")
    if not (0.0 < p < 1.0):
        raise ValidationError(f"inclusion probability must be in (0,1), got {p}")
    rng = np.random.default_rng(seed)
    draws = (rng.random((n - 1, d)) < p).astype(np.uint8)
    return [BinaryMask.all_ones(d)] + [BinaryMask(row) for row in draws]


def proximity_weight(mask, d: int, kernel_width: float = 0.25) -> float:
    """Exponential kernel on the cosine distance between `mask` and all-ones.

    For a binary mask with k ones, that distance is D = 1 - sqrt(k/d); the
    weight is exp(-D^2 / kernel_width^2). All-ones gets exactly 1.0; the
    formula also covers the all-zeros mask (D = 1).
    """
    k = mask.n_ones if isinstance(mask, BinaryMask) else int(np.sum(np.asarray(mask) != 0))
    if d < 1 or k > d:
        raise ValidationError(f"bad mask population k={k} for dimension d={d}")
    distance = 1.0 - math.sqrt(k / d)
    return math.exp(-(distance**2) / kernel_width**2)


def fit_weighted_ridge(design, targets, sample_weights, ridge_lambda: float = 1.0):
    """Solve min_b sum_i w_i (y_i - b0 - z_i . b)^2 + lambda * ||b||^2.

    The intercept is unpenalized: lambda lands on the diagonal of the normal
    equations for every row except the intercept's. Returns (intercept,
    coefficients[d]). A singular system (possible only with lambda = 0)
    raises a numerical error suggesting lambda > 0.
    """
    Z = np.asarray(design, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    w = np.asarray(sample_weights, dtype=np.float64)
    if Z.ndim != 2:
        raise ValidationError(f"design must be 2-D, got shape {Z.shape}")
    n, d = Z.shape
    if y.shape != (n,) or w.shape != (n,):
        raise ValidationError(
            f"targets {y.shape} and weights {w.shape} must both have length {n}"
        )
    if n < 2:
        raise ValidationError(f"need at least 2 samples to fit, got {n}")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValidationError("sample weights must be >= 0 and not all zero")
    if ridge_lambda < 0:
        raise ValidationError(f"ridge_lambda must be >= 0, got {ridge_lambda}")

    X = np.concatenate([np.ones((n, 1)), Z], axis=1)
    A = X.T @ (X * w[:, None])
    A[1:, 1:] += ridge_lambda * np.eye(d)
    b = X.T @ (w * y)
    try:
        beta = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "weighted ridge normal equations are singular; use ridge_lambda > 0"
        ) from exc
    return float(beta[0]), beta[1:]


def weighted_r_squared(targets, fitted, sample_weights) -> float:
    """Weighted coefficient of determination of `fitted` against `targets`.

    Constant targets make the usual ratio 0/0; reproducing them counts as a
    perfect fit (1.0), anything else as 0.0.
    """
    y = np.asarray(targets, dtype=np.float64)
    f = np.asarray(fitted, dtype=np.float64)
    w = np.asarray(sample_weights, dtype=np.float64)
    mean = float(w @ y) / float(w.sum())
    ss_res = float(w @ (y - f) ** 2)
    ss_tot = float(w @ (y - mean) ** 2)
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-12 else 0.0
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class LocalExplanation:
    """One surrogate fit: per-feature weights for one class of one instance.

    `weights` maps every feature in the space to its surrogate coefficient,
    in canonical feature order. `predicted_class` is the model's argmax on
    the unperturbed instance and `predicted_probability` its probability
    there; `class_label` is the class this explanation's weights describe.
    """

    instance_id: str
    class_label: ClassLabel
    intercept: float
    weights: dict[FeatureDescriptor, float]
    r_squared: float
    n_samples: int
    seed: int
    predicted_class: ClassLabel
    predicted_probability: float

    def ranked_features(self) -> list[tuple[FeatureDescriptor, float]]:
        """Features by descending |weight|; ties keep canonical order."""
        indexed = list(enumerate(self.weights.items()))
        indexed.sort(key=lambda item: (-abs(item[1][1]), item[0]))
        return [pair for _, pair in indexed]

    def top_features(self, k: int = 10) -> list[tuple[FeatureDescriptor, float]]:
        return self.ranked_features()[:k]

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "class": self.class_label.to_dict(),
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "predicted_class": self.predicted_class.to_dict(),
            "features": [
                {**desc.to_dict(), "weight": weight}
                for desc, weight in self.ranked_features()
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LocalExplanation":
        """Rebuild from the JSON form. Feature order follows the file, and
        `predicted_probability` (not serialized) comes back as NaN."""
        weights = {
            FeatureDescriptor.from_dict(entry): float(entry["weight"])
            for entry in d["features"]
        }
        return cls(
            instance_id=str(d["instance_id"]),
            class_label=ClassLabel.from_dict(d["class"]),
            intercept=float(d["intercept"]),
            weights=weights,
            r_squared=float(d["r_squared"]),
            n_samples=int(d["n_samples"]),
            seed=int(d["seed"]),
            predicted_class=ClassLabel.from_dict(d["predicted_class"]),
            predicted_probability=float("nan"),
        )


@dataclass(frozen=True)
class InstanceFeaturization:
    """The interpretable view of one instance: its feature space plus the
    artifacts needed to render any mask back into (lyrics, audio)."""

    space: FeatureSpace
    decomposition: Decomposition | None
    text: TextFeaturization | None
    sample_rate: int


def featurize_instance(
    instance: MultimodalInstance,
    separator: SeparatorSpec,
    n_segments: int = 10,
) -> InstanceFeaturization:
    """Build the feature space: audio (segment, source) cells first in
    segment-major order, then word types in first-appearance order."""
    decomp = decompose(instance, separator, n_segments) if instance.has_audio else None
    text = clean_and_tokenize(instance.lyrics) if instance.has_lyrics else None
    audio_pairs = decomp.feature_pairs() if decomp is not None else []
    words = list(text.word_types) if text is not None else []
    if not audio_pairs and not words:
        raise ValidationError(
            f"instance {instance.id!r} yields no interpretable features "
            f"(no audio and no words survive cleaning)"
        )
    space = canonical_feature_order(audio_pairs, words)
    return InstanceFeaturization(
        space=space, decomposition=decomp, text=text, sample_rate=instance.sample_rate
    )


def render_mask(feat: InstanceFeaturization, mask: BinaryMask) -> tuple[str, np.ndarray]:
    """Turn one mask into a concrete (lyrics, waveform) pair."""
    audio_bits, text_bits = mask_apply_indexing(mask, feat.space)
    lyrics = render_masked_lyrics(feat.text, text_bits) if feat.text is not None else ""
    if feat.decomposition is not None:
        audio = reconstruct(feat.decomposition, audio_bits)
    else:
        audio = np.zeros(0, dtype=np.float32)
    return lyrics, audio


def perturb(
    instance: MultimodalInstance,
    predictor: PredictorContract,
    separator: SeparatorSpec,
    config: LimeConfig = LimeConfig(),
    n_segments: int = 10,
) -> tuple[InstanceFeaturization, PerturbationSet]:
    """Sample the neighborhood of `instance` and collect model targets."""
    feat = featurize_instance(instance, separator, n_segments)
    n = config.resolve_n_samples(instance.has_lyrics, instance.has_audio)
    masks = sample_masks(feat.space.d, n, config.inclusion_prob, config.seed)
    weights = np.array(
        [proximity_weight(m, feat.space.d, config.kernel_width) for m in masks]
    )
    targets = np.empty((n, predictor.n_classes), dtype=np.float64)
    for lo in range(0, n, RENDER_CHUNK):
        chunk = masks[lo : lo + RENDER_CHUNK]
        batch = [(*render_mask(feat, m), instance.sample_rate) for m in chunk]
        targets[lo : lo + len(batch)] = predict_batch(predictor, batch)
    return feat, PerturbationSet(masks=tuple(masks), proximity_weights=weights, targets=targets)


def explain_instance(
    instance: MultimodalInstance,
    predictor: PredictorContract,
    separator: SeparatorSpec,
    config: LimeConfig = LimeConfig(),
    target_classes: Sequence[int] | None = None,
    n_segments: int = 10,
) -> list[LocalExplanation]:
    """Fit one local surrogate per target class.

    `target_classes` lists class indices to explain; None means the model's
    predicted class on the unperturbed instance. Every returned explanation
    carries a weight for every feature in the instance's feature space.
    """
    feat, pset = perturb(instance, predictor, separator, config, n_segments)
    predicted_index = int(np.argmax(pset.targets[0]))
    predicted_class = predictor.labels[predicted_index]
    predicted_probability = float(pset.targets[0, predicted_index])

    if target_classes is None:
        indices = [predicted_index]
    else:
        indices = [int(c) for c in target_classes]
        if len(set(indices)) != len(indices):
            raise ValidationError(f"duplicate target classes in {indices}")
        for c in indices:
            if not (0 <= c < predictor.n_classes):
                raise ValidationError(
                    f"target class {c} out of range for {predictor.n_classes} classes"
                )

    design = pset.mask_matrix()
    explanations = []
    for c in indices:
        y = pset.targets[:, c]
        intercept, coefs = fit_weighted_ridge(
            design, y, pset.proximity_weights, config.ridge_lambda
        )
        fitted = intercept + design @ coefs
        r2 = weighted_r_squared(y, fitted, pset.proximity_weights)
        weights = {
            feat.space[j]: float(coefs[j]) for j in range(feat.space.d)
        }
        explanations.append(
            LocalExplanation(
                instance_id=instance.id,
                class_label=predictor.labels[c],
                intercept=intercept,
                weights=weights,
                r_squared=r2,
                n_samples=pset.n_samples,
                seed=config.seed,
                predicted_class=predicted_class,
                predicted_probability=predicted_probability,
            )
        )
    return explanations
