"""Global aggregation of local explanations.

A corpus of per-instance explanations becomes a per-class importance report
two ways:

  * average:      I_cj = (sum of |W_ij| over instances predicted as c)
                          / (count of those instances with W_ij nonzero)
  * homogeneity:  I_cj = (1 - normalized entropy of feature j's per-class
                          distribution) * sqrt(sum of |W_ij| over class c)

Only an instance's predicted-class explanation feeds its class's sums;
explanations fitted for other classes stay in the table but are ignored.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import ClassLabel, FeatureDescriptor, Modality, validate_label_set
from .engine import LocalExplanation
from .errors import FormatError, ValidationError

NONZERO_WEIGHT = 1e-12  # |W| above this counts toward a feature's support


class AggregationMethod(str, Enum):
    AVERAGE = "average"
    HOMOGENEITY = "homogeneity"


@dataclass(frozen=True)
class WeightTable:
    """Sparse (instance, class, feature) -> weight map plus the instance ->
    predicted-class assignment that defines class membership."""

    labels: tuple[ClassLabel, ...]
    features: tuple[FeatureDescriptor, ...]
    predicted_class: dict[str, int]
    entries: dict[tuple[str, int, FeatureDescriptor], float]

    def __post_init__(self):
        validate_label_set(self.labels)
        if not self.predicted_class:
            raise ValidationError("weight table holds no instances")

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    def class_members(self, class_index: int) -> list[str]:
        """Instances predicted as `class_index`, in insertion order."""
        return [i for i, c in self.predicted_class.items() if c == class_index]

    def abs_sums_and_support(self) -> tuple[np.ndarray, np.ndarray]:
        """Per (class, feature): sum of |W| and support count, restricted to
        each instance's predicted class. Shapes [n_classes, n_features]."""
        index = {desc: j for j, desc in enumerate(self.features)}
        sums = np.zeros((self.n_classes, len(self.features)))
        support = np.zeros((self.n_classes, len(self.features)), dtype=np.int64)
        for (instance, cls, desc), weight in self.entries.items():
            if self.predicted_class[instance] != cls:
                continue
            j = index[desc]
            sums[cls, j] += abs(weight)
            if abs(weight) > NONZERO_WEIGHT:
                support[cls, j] += 1
        return sums, support


def weight_table_from_explanations(
    explanations: Iterable[LocalExplanation],
    labels: Sequence[ClassLabel] | None = None,
) -> WeightTable:
    """Assemble a table from explanation objects.

    The label set is normally inferred from the explanations; pass `labels`
    when the corpus might not mention every class. The feature universe is
    the union of all features seen, in canonical feature order.
    """
    seen_labels: dict[int, str] = {}
    predicted: dict[str, int] = {}
    entries: dict[tuple[str, int, FeatureDescriptor], float] = {}
    universe: set[FeatureDescriptor] = set()

    count = 0
    for exp in explanations:
        count += 1
        for label in (exp.class_label, exp.predicted_class):
            if seen_labels.setdefault(label.index, label.name) != label.name:
                raise ValidationError(
                    f"class index {label.index} maps to both "
                    f"{seen_labels[label.index]!r} and {label.name!r}"
                )
        if predicted.setdefault(exp.instance_id, exp.predicted_class.index) != exp.predicted_class.index:
            raise ValidationError(
                f"instance {exp.instance_id!r} has conflicting predicted classes"
            )
        key_class = exp.class_label.index
        for desc, weight in exp.weights.items():
            key = (exp.instance_id, key_class, desc)
            if key in entries:
                raise ValidationError(
                    f"duplicate explanation weight for instance {exp.instance_id!r}, "
                    f"class {key_class}, feature {desc.label()}"
                )
            entries[key] = float(weight)
            universe.add(desc)

    if count == 0:
        raise ValidationError("no explanations to aggregate")

    if labels is None:
        n = max(seen_labels) + 1
        missing = [i for i in range(n) if i not in seen_labels]
        if missing:
            raise ValidationError(
                f"class indices {missing} never appear in the corpus; "
                f"pass the label set explicitly"
            )
        label_set = tuple(ClassLabel(i, seen_labels[i]) for i in range(n))
    else:
        label_set = tuple(labels)
        for index, name in seen_labels.items():
            if index >= len(label_set) or label_set[index].name != name:
                raise ValidationError(
                    f"corpus label ({index}, {name!r}) conflicts with the provided label set"
                )

    features = tuple(sorted(universe, key=lambda d: d.sort_key()))
    return WeightTable(
        labels=label_set, features=features, predicted_class=predicted, entries=entries
    )


def load_weight_table(directory, labels: Sequence[ClassLabel] | None = None) -> WeightTable:
    """Read every `*.json` explanation file in `directory` into one table."""
    directory = Path(directory)
    paths = sorted(directory.glob("*.json"))
    if not paths:
        raise ValidationError(f"no explanation JSON files in {directory}")
    explanations = []
    for path in paths:
        try:
            explanations.append(LocalExplanation.from_dict(json.loads(path.read_text())))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: not a valid explanation file: {exc}") from exc
    return weight_table_from_explanations(explanations, labels=labels)


# ---------------------------------------------------------------------------
# The two aggregates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GlobalReport:
    """Per-(class, feature) importances with diagnostics.

    `importances` and `support` are [n_classes, n_features] arrays over
    `features`; `entropy[j]` is NaN where undefined (zero-total features, or
    the average method which does not use entropy).
    """

    method: AggregationMethod
    labels: tuple[ClassLabel, ...]
    features: tuple[FeatureDescriptor, ...]
    importances: np.ndarray
    support: np.ndarray
    entropy: np.ndarray

    def importance(self, class_index: int, desc: FeatureDescriptor) -> float:
        return float(self.importances[class_index, self.features.index(desc)])

    def class_rows(
        self,
        class_index: int,
        k: int | None = None,
        collapse_segments: bool = False,
    ) -> list[dict]:
        """One class's features ranked by descending importance, ties in
        canonical feature order, trimmed to `k` rows when given.

        Collapsing sums each audio source over its segments; support and
        entropy are per-(segment, source) quantities, so collapsed rows
        carry None for both.
        """
        row = self.importances[class_index]
        if collapse_segments:
            collapsed: dict[tuple[int, str], float] = {}
            for j, desc in enumerate(self.features):
                key = (0, desc.source) if desc.modality is Modality.AUDIO else (1, desc.word)
                collapsed[key] = collapsed.get(key, 0.0) + float(row[j])
            ranked = sorted(collapsed.items(), key=lambda item: (-item[1], item[0]))
            rows = [
                {
                    "modality": (Modality.AUDIO if kind == 0 else Modality.TEXT).value,
                    "key": name,
                    "importance": value,
                    "support": None,
                    "entropy": None,
                }
                for (kind, name), value in ranked
            ]
        else:
            order = _ranked_indices(row, self.features)
            rows = []
            for j in order:
                desc = self.features[j]
                h = self.entropy[j]
                rows.append(
                    {
                        **desc.to_dict(),
                        "importance": float(row[j]),
                        "support": int(self.support[class_index, j]),
                        "entropy": None if math.isnan(h) else float(h),
                    }
                )
        return rows[:k] if k is not None else rows

    def to_dict(self, k: int | None = None, collapse_segments: bool = False) -> dict:
        return {
            "method": self.method.value,
            "labels": [label.to_dict() for label in self.labels],
            "classes": [
                {
                    "class": label.to_dict(),
                    "features": self.class_rows(c, k, collapse_segments),
                }
                for c, label in enumerate(self.labels)
            ],
        }

    def to_csv_text(self, k: int | None = None, collapse_segments: bool = False) -> str:
        """CSV rows `class,modality,feature_key,importance,support,entropy`,
        class-major, features ranked per class. Support and entropy are blank
        where undefined (average method, or collapsed rows)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "modality", "feature_key", "importance", "support", "entropy"])
        for c, label in enumerate(self.labels):
            for entry in self.class_rows(c, k, collapse_segments):
                key = entry["key"]
                flat = f"{key['source']}@seg{key['segment']}" if isinstance(key, dict) else key
                writer.writerow(
                    [
                        label.name,
                        entry["modality"],
                        flat,
                        repr(float(entry["importance"])),
                        "" if entry["support"] is None else int(entry["support"]),
                        "" if entry["entropy"] is None else repr(float(entry["entropy"])),
                    ]
                )
        return buf.getvalue()


def _ranked_indices(importance_row: np.ndarray, features: Sequence[FeatureDescriptor]) -> list[int]:
    return sorted(
        range(len(features)),
        key=lambda j: (-importance_row[j], features[j].sort_key()),
    )


def average_importance(table: WeightTable) -> GlobalReport:
    """Mean absolute weight per (class, feature) over the instances of that
    class where the feature's weight is nonzero; 0 when it never is."""
    sums, support = table.abs_sums_and_support()
    importances = np.divide(
        sums, support, out=np.zeros_like(sums), where=support > 0
    )
    entropy = np.full(len(table.features), np.nan)
    return GlobalReport(
        method=AggregationMethod.AVERAGE,
        labels=table.labels,
        features=table.features,
        importances=importances,
        support=support,
        entropy=entropy,
    )


def class_distribution(table: WeightTable, desc: FeatureDescriptor) -> np.ndarray:
    """Feature's importance-mass distribution over classes: square roots of
    per-class |W| sums, normalized to sum 1."""
    if desc not in table.features:
        raise ValidationError(f"feature {desc.label()} not present in the table")
    sums, _ = table.abs_sums_and_support()
    j = table.features.index(desc)
    return _distribution_from_sums(sums[:, j], desc)


def _distribution_from_sums(class_sums: np.ndarray, desc: FeatureDescriptor | None = None) -> np.ndarray:
    roots = np.sqrt(class_sums)
    total = roots.sum()
    if total <= 0.0:
        name = desc.label() if desc is not None else "feature"
        raise ValidationError(f"{name} has zero total weight; its distribution is undefined")
    return roots / total


def shannon_entropy(p) -> float:
    """Natural-log entropy with the 0 * ln(0) = 0 convention."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValidationError("entropy input must be a probability vector")
    live = p > 0
    return float(-(p[live] * np.log(p[live])).sum() + 0.0)  # +0.0 avoids -0.0


def homogeneity_importance(table: WeightTable) -> GlobalReport:
    """Entropy-damped importance: features whose mass spreads over many
    classes are scaled down by their min-max-normalized entropy.

    Zero-total features are excluded from the entropy range (their
    distribution is undefined) and score 0 in every class. A degenerate
    range (all defined entropies equal) gives every feature factor 1.
    """
    sums, support = table.abs_sums_and_support()
    n_features = len(table.features)
    entropy = np.full(n_features, np.nan)
    totals = sums.sum(axis=0)
    for j in range(n_features):
        if totals[j] > 0.0:
            entropy[j] = shannon_entropy(_distribution_from_sums(sums[:, j]))
    defined = ~np.isnan(entropy)
    if not np.any(defined):
        raise ValidationError("no feature has nonzero total weight; nothing to aggregate")

    h_min = float(entropy[defined].min())
    h_max = float(entropy[defined].max())
    factors = np.zeros(n_features)
    if h_max == h_min:
        factors[defined] = 1.0
    else:
        factors[defined] = 1.0 - (entropy[defined] - h_min) / (h_max - h_min)

    importances = factors[None, :] * np.sqrt(sums)
    return GlobalReport(
        method=AggregationMethod.HOMOGENEITY,
        labels=table.labels,
        features=table.features,
        importances=importances,
        support=support,
        entropy=entropy,
    )


def top_k(
    report: GlobalReport,
    class_index: int,
    k: int = 10,
    collapse_segments: bool = False,
) -> list[tuple[str, str, float]]:
    """Top-k features for one class as (modality, label, importance).

    `collapse_segments` sums each audio source's importance over its
    segments, ranking whole sources against words. Ties follow canonical
    feature order (audio segment-major first, then words).
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if not (0 <= class_index < len(report.labels)):
        raise ValidationError(f"unknown class index {class_index}")
    out = []
    for entry in report.class_rows(class_index, k, collapse_segments):
        key = entry["key"]
        flat = f"{key['source']}@seg{key['segment']}" if isinstance(key, dict) else key
        out.append((entry["modality"], flat, float(entry["importance"])))
    return out
