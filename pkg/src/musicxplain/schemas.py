"""Published JSON schemas for the two output document kinds.

The dicts are standard JSON Schema (draft-07) so external tooling can
validate outputs; the `validate_*` functions are self-contained structural
checks used by the CLI and tests without pulling in a validator dependency.
"""

from __future__ import annotations

import math

from .errors import FormatError

_CLASS_LABEL = {
    "type": "object",
    "required": ["index", "name"],
    "additionalProperties": False,
    "properties": {
        "index": {"type": "integer", "minimum": 0},
        "name": {"type": "string"},
    },
}

_AUDIO_KEY = {
    "type": "object",
    "required": ["segment", "source"],
    "additionalProperties": False,
    "properties": {
        "segment": {"type": "integer", "minimum": 0},
        "source": {"type": "string"},
    },
}

LOCAL_EXPLANATION_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "LocalExplanation",
    "type": "object",
    "required": [
        "instance_id",
        "class",
        "intercept",
        "r_squared",
        "n_samples",
        "seed",
        "predicted_class",
        "features",
    ],
    "additionalProperties": False,
    "properties": {
        "instance_id": {"type": "string"},
        "class": _CLASS_LABEL,
        "intercept": {"type": "number"},
        "r_squared": {"type": "number", "maximum": 1.0},
        "n_samples": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer"},
        "predicted_class": _CLASS_LABEL,
        "features": {
            "type": "array",
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "required": ["modality", "key", "weight"],
                        "additionalProperties": False,
                        "properties": {
                            "modality": {"const": "text"},
                            "key": {"type": "string", "minLength": 1},
                            "weight": {"type": "number"},
                        },
                    },
                    {
                        "type": "object",
                        "required": ["modality", "key", "weight"],
                        "additionalProperties": False,
                        "properties": {
                            "modality": {"const": "audio"},
                            "key": _AUDIO_KEY,
                            "weight": {"type": "number"},
                        },
                    },
                ]
            },
        },
    },
}

GLOBAL_REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "GlobalReport",
    "type": "object",
    "required": ["method", "labels", "classes"],
    "additionalProperties": False,
    "properties": {
        "method": {"enum": ["average", "homogeneity"]},
        "labels": {"type": "array", "minItems": 1, "items": _CLASS_LABEL},
        "classes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["class", "features"],
                "additionalProperties": False,
                "properties": {
                    "class": _CLASS_LABEL,
                    "features": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["modality", "key", "importance", "support", "entropy"],
                            "additionalProperties": False,
                            "properties": {
                                "modality": {"enum": ["audio", "text"]},
                                # an audio key is (segment, source), or a bare
                                # source name in segment-collapsed reports
                                "key": {"oneOf": [{"type": "string", "minLength": 1}, _AUDIO_KEY]},
                                "importance": {"type": "number", "minimum": 0},
                                "support": {"type": ["integer", "null"], "minimum": 0},
                                "entropy": {"type": ["number", "null"], "minimum": 0},
                            },
                        },
                    },
                },
            },
        },
    },
}


def _expect(condition: bool, message: str):
    if not condition:
        raise FormatError(message)


def _check_class_label(doc, where: str):
    _expect(isinstance(doc, dict), f"{where}: class label must be an object")
    _expect(set(doc) == {"index", "name"}, f"{where}: class label needs exactly index and name")
    _expect(isinstance(doc["index"], int) and doc["index"] >= 0, f"{where}: bad class index")
    _expect(isinstance(doc["name"], str), f"{where}: class name must be a string")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_feature_key(modality, key, where: str, allow_collapsed: bool):
    if modality == "text":
        _expect(isinstance(key, str) and key, f"{where}: text key must be a non-empty string")
    elif isinstance(key, dict):
        _expect(
            set(key) == {"segment", "source"}
            and isinstance(key["segment"], int)
            and key["segment"] >= 0
            and isinstance(key["source"], str),
            f"{where}: audio key must be {{segment, source}}",
        )
    else:
        _expect(
            allow_collapsed and isinstance(key, str) and bool(key),
            f"{where}: audio key must be {{segment, source}}"
            + (" or a source name" if allow_collapsed else ""),
        )


def validate_local_explanation(doc: dict) -> None:
    """Raise FormatError unless `doc` is a well-formed explanation document,
    including the descending-|weight| ordering of its feature list."""
    _expect(isinstance(doc, dict), "explanation must be a JSON object")
    required = {
        "instance_id", "class", "intercept", "r_squared",
        "n_samples", "seed", "predicted_class", "features",
    }
    _expect(set(doc) == required, f"explanation must have exactly the fields {sorted(required)}")
    _expect(isinstance(doc["instance_id"], str), "instance_id must be a string")
    _check_class_label(doc["class"], "class")
    _check_class_label(doc["predicted_class"], "predicted_class")
    _expect(_is_number(doc["intercept"]), "intercept must be a finite number")
    _expect(_is_number(doc["r_squared"]) and doc["r_squared"] <= 1.0, "r_squared must be <= 1")
    _expect(isinstance(doc["n_samples"], int) and doc["n_samples"] >= 2, "n_samples must be >= 2")
    _expect(isinstance(doc["seed"], int), "seed must be an integer")
    _expect(isinstance(doc["features"], list), "features must be a list")
    previous = math.inf
    for i, entry in enumerate(doc["features"]):
        where = f"features[{i}]"
        _expect(isinstance(entry, dict), f"{where}: must be an object")
        _expect(set(entry) == {"modality", "key", "weight"}, f"{where}: needs modality, key, weight")
        _expect(entry["modality"] in ("audio", "text"), f"{where}: unknown modality")
        _check_feature_key(entry["modality"], entry["key"], where, allow_collapsed=False)
        _expect(_is_number(entry["weight"]), f"{where}: weight must be a finite number")
        _expect(abs(entry["weight"]) <= previous, f"{where}: features not sorted by |weight|")
        previous = abs(entry["weight"])


def validate_global_report(doc: dict) -> None:
    """Raise FormatError unless `doc` is a well-formed report document."""
    _expect(isinstance(doc, dict), "report must be a JSON object")
    _expect(set(doc) == {"method", "labels", "classes"}, "report needs method, labels, classes")
    _expect(doc["method"] in ("average", "homogeneity"), "unknown aggregation method")
    _expect(isinstance(doc["labels"], list) and doc["labels"], "labels must be a non-empty list")
    for i, label in enumerate(doc["labels"]):
        _check_class_label(label, f"labels[{i}]")
    _expect(isinstance(doc["classes"], list), "classes must be a list")
    for i, block in enumerate(doc["classes"]):
        where = f"classes[{i}]"
        _expect(isinstance(block, dict) and set(block) == {"class", "features"}, f"{where}: needs class and features")
        _check_class_label(block["class"], f"{where}.class")
        _expect(isinstance(block["features"], list), f"{where}.features must be a list")
        previous = math.inf
        for j, entry in enumerate(block["features"]):
            spot = f"{where}.features[{j}]"
            _expect(isinstance(entry, dict), f"{spot}: must be an object")
            _expect(
                set(entry) == {"modality", "key", "importance", "support", "entropy"},
                f"{spot}: needs modality, key, importance, support, entropy",
            )
            _expect(entry["modality"] in ("audio", "text"), f"{spot}: unknown modality")
            _check_feature_key(entry["modality"], entry["key"], spot, allow_collapsed=True)
            _expect(
                _is_number(entry["importance"]) and entry["importance"] >= 0,
                f"{spot}: importance must be a number >= 0",
            )
            _expect(
                entry["support"] is None or (isinstance(entry["support"], int) and entry["support"] >= 0),
                f"{spot}: support must be a non-negative integer or null",
            )
            _expect(
                entry["entropy"] is None or (_is_number(entry["entropy"]) and entry["entropy"] >= 0),
                f"{spot}: entropy must be a non-negative number or null",
            )
            _expect(entry["importance"] <= previous, f"{spot}: features not ranked by importance")
            previous = entry["importance"]
