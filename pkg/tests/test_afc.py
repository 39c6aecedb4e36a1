"""Forced-choice blocks: respondent model, balance, confusion stats."""

import math
from collections import Counter

import numpy as np
import pytest

from forcecompass.afc import (
    AfcStats,
    AfcTrial,
    afc_stats,
    canonical_angles,
    nearest_choice,
    run_block,
    synthetic_respondent,
)
from forcecompass.errors import ConfigError


def test_canonical_angles_8():
    angles = canonical_angles(8)
    assert len(angles) == 8
    assert angles[0] == 0.0
    assert abs(angles[2] - math.pi / 2) < 1e-12  # "up"
    assert angles[4] == -math.pi  # pi wraps to -pi
    assert all(-math.pi <= a < math.pi for a in angles)


def test_canonical_angles_rejects_other_sizes():
    with pytest.raises(ConfigError):
        canonical_angles(6)


def test_nearest_choice_examples():
    assert nearest_choice(0.1, 8) == 0
    assert nearest_choice(math.pi / 4 + 0.1, 8) == 1
    assert nearest_choice(-math.pi / 2, 8) == 6
    assert nearest_choice(math.pi - 0.01, 4) == 2


def test_noiseless_respondent_is_always_correct():
    for i, a in enumerate(canonical_angles(8)):
        for seed in range(5):
            trial = synthetic_respondent(a, math.inf, 1.0, seed)
            assert trial.response == i


def test_zero_kappa_is_chance_level():
    """kappa = 0 carries no information: accuracy near 1/n."""
    angles = canonical_angles(8)
    trials = [synthetic_respondent(angles[s % 8], 0.0, 1.0, s) for s in range(4000)]
    stats = afc_stats(trials)
    assert abs(stats.accuracy - 0.125) < 0.03


def test_respondent_deterministic_per_seed():
    a = canonical_angles(8)[3]
    t1 = synthetic_respondent(a, 8.0, 0.4, 123)
    t2 = synthetic_respondent(a, 8.0, 0.4, 123)
    assert t1 == t2


def test_respondent_rejects_bad_parameters():
    with pytest.raises(ConfigError):
        synthetic_respondent(0.0, -1.0, 0.4, 0)
    with pytest.raises(ConfigError):
        synthetic_respondent(0.0, 8.0, 1.5, 0)
    with pytest.raises(ConfigError):
        synthetic_respondent(0.3, 8.0, 0.4, 0)  # not a canonical angle


def test_block_is_balanced_and_seeded():
    trials = run_block(160, seed=5)
    counts = Counter(t.true_direction for t in trials)
    assert sorted(counts.values()) == [20] * 8
    assert trials == run_block(160, seed=5)
    assert trials != run_block(160, seed=6)


def test_block_rejects_unbalanced_trial_count():
    with pytest.raises(ConfigError):
        run_block(100, n_choices=8)
    with pytest.raises(ConfigError):
        run_block(0)


def test_vertical_attenuation_biases_up_down():
    """With the vertical component attenuated, up/down cues are confused
    with their diagonal neighbours more often than left/right cues are."""
    trials = run_block(8000, kappa=8.0, attenuation_y=0.4, seed=2)
    stats = afc_stats(trials)
    conf = np.array(stats.confusion)
    off_diag = conf.sum(axis=1) - np.diag(conf)
    up_down_err = off_diag[2] + off_diag[6]
    left_right_err = off_diag[0] + off_diag[4]
    assert up_down_err > left_right_err


def test_default_block_accuracy_in_plausible_band():
    """The bundled defaults land in a human-plausible 8-AFC band: well
    above chance, well below ceiling."""
    stats = afc_stats(run_block(800, seed=0))
    assert 0.55 <= stats.accuracy <= 0.80


def test_afc_stats_perfect():
    angles = canonical_angles(8)
    trials = [AfcTrial(a, i, 8) for i, a in enumerate(angles) for _ in range(3)]
    stats = afc_stats(trials)
    assert stats.accuracy == 1.0
    assert stats.mean_angular_error_deg == 0.0


def test_afc_stats_one_slot_clockwise():
    """Every response one canonical slot off: zero accuracy, 45 deg error."""
    angles = canonical_angles(8)
    trials = [AfcTrial(a, (i + 1) % 8, 8) for i, a in enumerate(angles)]
    stats = afc_stats(trials)
    assert stats.accuracy == 0.0
    assert stats.mean_angular_error_deg == 45.0


def test_afc_stats_error_wraps_shortest_way():
    """A response 7 slots away is one slot the other way: 45 deg, not 315."""
    a0 = canonical_angles(8)[0]
    stats = afc_stats([AfcTrial(a0, 7, 8)])
    assert stats.mean_angular_error_deg == 45.0


def test_afc_stats_confusion_row_sums():
    trials = run_block(240, seed=9)
    stats = afc_stats(trials)
    conf = np.array(stats.confusion)
    assert conf.shape == (8, 8)
    assert conf.sum() == 240
    assert list(conf.sum(axis=1)) == [30] * 8


def test_afc_stats_rejects_mixed_choice_counts():
    t8 = AfcTrial(0.0, 0, 8)
    t4 = AfcTrial(0.0, 0, 4)
    with pytest.raises(ConfigError):
        afc_stats([t8, t4])
    with pytest.raises(ConfigError):
        afc_stats([])


def test_trial_validation():
    with pytest.raises(ConfigError):
        AfcTrial(0.0, 8, 8)  # response out of range
    with pytest.raises(ConfigError):
        AfcTrial(0.2, 0, 8)  # non-canonical true angle
