"""Shared fixtures: toy models over a two-genre label set."""

import pytest

from musicxplain import BandEnergyToyModel, FusedToyModel, LexiconToyModel


@pytest.fixture
def two_labels():
    return ["rock", "ballad"]


@pytest.fixture
def lexicon_model(two_labels):
    return LexiconToyModel(two_labels, [["guitar", "loud"], ["love", "tears"]], tau=0.5)


@pytest.fixture
def band_model(two_labels):
    return BandEnergyToyModel(two_labels, [(800.0, 4000.0), (0.0, 500.0)], tau=0.3)


@pytest.fixture
def fused_model(lexicon_model, band_model):
    return FusedToyModel(lexicon_model, band_model, alpha=0.6)
