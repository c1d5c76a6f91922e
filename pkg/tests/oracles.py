"""Independent direct-formula implementations used to cross-check the
aggregation code. Pure Python over plain dicts, no numpy, written from the
formulas rather than from the library code."""

import math

NONZERO = 1e-12


def class_sums(n_classes, features, predicted, entries):
    """Per (class, feature) sum of |W| over instances predicted as that class."""
    sums = {(c, f): 0.0 for c in range(n_classes) for f in features}
    for (instance, cls, feature), weight in entries.items():
        if predicted[instance] == cls:
            sums[(cls, feature)] += abs(weight)
    return sums


def oracle_average(n_classes, features, predicted, entries):
    """(class, feature) -> mean |W| over nonzero-weight class members."""
    counts = {(c, f): 0 for c in range(n_classes) for f in features}
    for (instance, cls, feature), weight in entries.items():
        if predicted[instance] == cls and abs(weight) > NONZERO:
            counts[(cls, feature)] += 1
    sums = class_sums(n_classes, features, predicted, entries)
    return {
        key: (sums[key] / counts[key] if counts[key] else 0.0) for key in sums
    }


def oracle_entropies(n_classes, features, predicted, entries, log=math.log):
    """feature -> entropy of its root-sum class distribution; zero-total
    features are absent from the result."""
    sums = class_sums(n_classes, features, predicted, entries)
    entropies = {}
    for f in features:
        roots = [math.sqrt(sums[(c, f)]) for c in range(n_classes)]
        total = sum(roots)
        if total <= 0.0:
            continue
        h = 0.0
        for r in roots:
            p = r / total
            if p > 0.0:
                h -= p * log(p)
        entropies[f] = h
    return entropies


def oracle_homogeneity(n_classes, features, predicted, entries, log=math.log):
    """(class, feature) -> entropy-damped importance."""
    sums = class_sums(n_classes, features, predicted, entries)
    entropies = oracle_entropies(n_classes, features, predicted, entries, log=log)
    if not entropies:
        raise ValueError("every feature has zero total weight")
    h_min = min(entropies.values())
    h_max = max(entropies.values())
    out = {}
    for f in features:
        if f not in entropies:
            factor = 0.0
        elif h_max == h_min:
            factor = 1.0
        else:
            factor = 1.0 - (entropies[f] - h_min) / (h_max - h_min)
        for c in range(n_classes):
            out[(c, f)] = factor * math.sqrt(sums[(c, f)])
    return out
