"""Model-agnostic local explanations for multimodal (lyrics + audio) music
classifiers, with global per-class aggregation.

Typical use:

    from musicxplain import (
        MultimodalInstance, SeparatorSpec, LimeConfig, explain_instance,
    )

    instance = MultimodalInstance(id="song", lyrics=text, audio=wave, sample_rate=sr)
    explanations = explain_instance(instance, model, SeparatorSpec.hpss(), LimeConfig(seed=7))
"""

from .aggregate import (
    AggregationMethod,
    GlobalReport,
    WeightTable,
    average_importance,
    class_distribution,
    homogeneity_importance,
    load_weight_table,
    shannon_entropy,
    top_k,
    weight_table_from_explanations,
)
from .audio import (
    DEFAULT_SOURCE_NAMES,
    Decomposition,
    SeparatorKind,
    SeparatorSpec,
    StftConfig,
    b64_to_pcm,
    decompose,
    hpss_separate,
    load_stems,
    load_wav,
    pcm_to_b64,
    reconstruct,
    run_external_separator,
    segment_bounds,
)
from .core import (
    BinaryMask,
    ClassLabel,
    FeatureDescriptor,
    FeatureSpace,
    Modality,
    MultimodalInstance,
    canonical_feature_order,
    labels_from_names,
    mask_apply_indexing,
    validate_label_set,
    validate_prediction_vector,
)
from .engine import (
    InstanceFeaturization,
    LimeConfig,
    LocalExplanation,
    PerturbationSet,
    explain_instance,
    featurize_instance,
    fit_weighted_ridge,
    perturb,
    proximity_weight,
    render_mask,
    sample_masks,
    weighted_r_squared,
)
from .errors import (
    ExplainerError,
    FormatError,
    HandshakeTimeout,
    MalformedResponse,
    NumericalError,
    PredictorError,
    ProtocolError,
    ResponseLengthMismatch,
    ResponseNotNormalized,
    ValidationError,
)
from .predictors import (
    BandEnergyToyModel,
    ExternalPredictor,
    FusedToyModel,
    LexiconToyModel,
    PredictorContract,
    external_predictor_connect,
    predict_batch,
)
from .text import TextFeaturization, clean_and_tokenize, clean_lyrics, render_masked_lyrics

__version__ = "0.1.0"

__all__ = [
    "AggregationMethod",
    "BandEnergyToyModel",
    "BinaryMask",
    "ClassLabel",
    "DEFAULT_SOURCE_NAMES",
    "Decomposition",
    "ExplainerError",
    "ExternalPredictor",
    "FeatureDescriptor",
    "FeatureSpace",
    "FormatError",
    "FusedToyModel",
    "GlobalReport",
    "HandshakeTimeout",
    "InstanceFeaturization",
    "LexiconToyModel",
    "LimeConfig",
    "LocalExplanation",
    "MalformedResponse",
    "Modality",
    "MultimodalInstance",
    "NumericalError",
    "PerturbationSet",
    "PredictorContract",
    "PredictorError",
    "ProtocolError",
    "ResponseLengthMismatch",
    "ResponseNotNormalized",
    "SeparatorKind",
    "SeparatorSpec",
    "StftConfig",
    "TextFeaturization",
    "ValidationError",
    "WeightTable",
    "average_importance",
    "b64_to_pcm",
    "canonical_feature_order",
    "class_distribution",
    "clean_and_tokenize",
    "clean_lyrics",
    "decompose",
    "explain_instance",
    "external_predictor_connect",
    "featurize_instance",
    "fit_weighted_ridge",
    "homogeneity_importance",
    "hpss_separate",
    "labels_from_names",
    "load_stems",
    "load_wav",
    "load_weight_table",
    "mask_apply_indexing",
    "pcm_to_b64",
    "perturb",
    "predict_batch",
    "proximity_weight",
    "reconstruct",
    "render_mask",
    "render_masked_lyrics",
    "run_external_separator",
    "sample_masks",
    "segment_bounds",
    "shannon_entropy",
    "top_k",
    "validate_label_set",
    "validate_prediction_vector",
    "weight_table_from_explanations",
    "weighted_r_squared",
]
