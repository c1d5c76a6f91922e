"""Embedded invariant suite behind `musicxplain selfcheck`.

Each check recomputes a hand-derivable value through the live module
attributes (so a corrupted function is caught under its own name) and
compares against the frozen expectation. Checks are independent; the runner
reports every failure, and the CLI exits nonzero if any check fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import aggregate, audio, engine
from .core import BinaryMask, ClassLabel, FeatureDescriptor


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _check_sample_masks():
    first = engine.sample_masks(8, 64, 0.5, seed=1234)
    again = engine.sample_masks(8, 64, 0.5, seed=1234)
    assert first[0] == BinaryMask.all_ones(8), "first mask is not all-ones"
    assert first == again, "same seed produced different masks"
    other = engine.sample_masks(8, 64, 0.5, seed=1235)
    assert first != other, "different seeds produced identical masks"


def _check_proximity_weight():
    w_full = engine.proximity_weight(BinaryMask.all_ones(6), 6, 0.25)
    assert w_full == 1.0, f"all-ones weight {w_full!r} != 1.0"
    w = engine.proximity_weight(BinaryMask(np.array([1, 0, 0, 0])), 4, 0.25)
    expected = math.exp(-4.0)  # D = 1 - sqrt(1/4) = 0.5; (0.5/0.25)^2 = 4
    assert abs(w - expected) < 1e-12, f"kernel value {w!r}, expected {expected!r}"
    near = engine.proximity_weight(BinaryMask(np.array([1] * 99 + [0])), 100, 0.25)
    assert 0.0 < near < 1.0, "kernel not strictly inside (0,1) near the original"


def _check_weighted_ridge():
    # full enumeration of the 4 masks over d=2 with a planted affine target
    design = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.float64)
    y = 0.1 + 0.3 * design[:, 0] - 0.2 * design[:, 1]
    ones = np.ones(4)
    intercept, coefs = engine.fit_weighted_ridge(design, y, ones, ridge_lambda=1e-9)
    assert abs(intercept - 0.1) < 1e-6, f"intercept {intercept!r}, expected 0.1"
    assert abs(coefs[0] - 0.3) < 1e-6 and abs(coefs[1] + 0.2) < 1e-6, (
        f"coefficients {coefs!r}, expected (0.3, -0.2)"
    )
    intercept, coefs = engine.fit_weighted_ridge(design, np.full(4, 0.7), ones, 1.0)
    assert abs(intercept - 0.7) < 1e-9 and np.max(np.abs(coefs)) < 1e-9, (
        "constant target did not give zero coefficients"
    )


def _two_class_table() -> aggregate.WeightTable:
    labels = (ClassLabel(0, "a"), ClassLabel(1, "b"))
    j1 = FeatureDescriptor.for_text("one")
    j2 = FeatureDescriptor.for_text("two")
    entries = {
        ("i1", 0, j1): 0.5,
        ("i2", 0, j1): -0.3,
        ("i3", 0, j1): 0.0,
        ("i1", 0, j2): 1.0,
        ("i4", 1, j2): 1.0,
    }
    predicted = {"i1": 0, "i2": 0, "i3": 0, "i4": 1}
    return aggregate.WeightTable(
        labels=labels, features=(j1, j2), predicted_class=predicted, entries=entries
    )


def _check_average_importance():
    report = aggregate.average_importance(_two_class_table())
    j1 = FeatureDescriptor.for_text("one")
    got = report.importance(0, j1)
    assert abs(got - 0.4) < 1e-12, f"average importance {got!r}, expected 0.4"
    assert report.importance(1, j1) == 0.0, "empty-support importance must be 0"


def _check_entropy_and_homogeneity():
    h_uniform = aggregate.shannon_entropy(np.full(9, 1.0 / 9.0))
    assert abs(h_uniform - math.log(9)) < 1e-12, f"uniform entropy {h_uniform!r}"
    h = aggregate.shannon_entropy(np.array([2.0 / 3.0, 1.0 / 3.0]))
    expected = math.log(3) - (2.0 / 3.0) * math.log(2)
    assert abs(h - expected) < 1e-12, f"entropy {h!r}, expected {expected!r}"

    report = aggregate.homogeneity_importance(_two_class_table())
    j1 = FeatureDescriptor.for_text("one")  # one-class feature: entropy 0, factor 1
    j2 = FeatureDescriptor.for_text("two")  # evenly split: maximum entropy, factor 0
    got = report.importance(0, j1)
    expected = math.sqrt(0.8)  # sqrt(|0.5| + |-0.3| + 0)
    assert abs(got - expected) < 1e-12, f"homogeneity importance {got!r}, expected {expected!r}"
    assert report.importance(0, j2) == 0.0 and report.importance(1, j2) == 0.0, (
        "max-entropy feature must score 0 everywhere"
    )


def _check_hpss_complementarity():
    sr = 8000
    t = np.arange(sr) / sr
    wave = 0.5 * np.sin(2 * np.pi * 440 * t)
    wave[::2000] += 0.8  # click every quarter second
    wave = wave.astype(np.float32)
    parts = audio.hpss_separate(wave)
    total = parts["harmonic"].astype(np.float64) + parts["percussive"].astype(np.float64)
    err = np.linalg.norm(total - wave) / np.linalg.norm(wave)
    assert err <= 1e-4, f"harmonic + percussive misses the input (relative L2 {err:.3g})"
    assert parts["harmonic"].shape == wave.shape == parts["percussive"].shape


CHECKS = (
    ("sample_masks", _check_sample_masks),
    ("proximity_weight", _check_proximity_weight),
    ("fit_weighted_ridge", _check_weighted_ridge),
    ("average_importance", _check_average_importance),
    ("entropy_homogeneity", _check_entropy_and_homogeneity),
    ("hpss_complementarity", _check_hpss_complementarity),
)


def run_selfcheck() -> list[CheckResult]:
    """Run every check; never raises. One result per check, in order."""
    results = []
    for name, func in CHECKS:
        try:
            func()
        except Exception as exc:
            results.append(CheckResult(name=name, ok=False, detail=str(exc)))
        else:
            results.append(CheckResult(name=name, ok=True, detail=""))
    return results
