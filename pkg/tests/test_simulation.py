import math

import numpy as np
import pytest

from harmonagg.aggregation import Profile
from harmonagg.annealing import AnnealingConfig, make_rng
from harmonagg.chords import M, distance_matrix
from harmonagg.errors import LengthMismatch, SequenceTooShort
from harmonagg.simulation import (
    CSV_COLUMNS, ErrorRange, ExperimentConfig, cluster_coherence, make_profile, musical_coherence,
    perturb, run_experiment, song_similarity, synthetic_songs,
)
from harmonagg.transitions import TransitionModel, train


def test_error_range_validation_and_bounds():
    assert ErrorRange(1, 2).q_bounds == (0.25, 0.5)
    assert str(ErrorRange(0, 1)) == "(0,1)"
    with pytest.raises(ValueError):
        ErrorRange(2, 1)
    with pytest.raises(ValueError):
        ErrorRange(0, 5)


def test_perturb_zero_range_is_identity():
    song = np.arange(64) % M
    out = perturb(song, ErrorRange(0, 1e-12), make_rng(0))
    assert np.array_equal(out, song)


def test_perturb_full_range_replaces_with_other_chords():
    song = np.zeros(2000, dtype=int)
    out = perturb(song, ErrorRange(3.9999, 4), make_rng(1))
    changed = out != song
    assert changed.mean() > 0.99
    # replacements favour near chords: mean distance well below the alphabet average
    assert distance_matrix()[0, out[changed]].mean() < distance_matrix()[0, 1:].mean()


def test_replacement_rate_tracks_range():
    song = np.zeros(4000, dtype=int)
    rates = [np.mean([(perturb(song, r, make_rng(s)) != 0).mean() for s in range(20)])
             for r in (ErrorRange(0, 1), ErrorRange(3, 4))]
    assert 0.05 < rates[0] < 0.2 and 0.8 < rates[1] < 0.95


def test_song_similarity_oracle():
    assert song_similarity(["CMaj7", "Dm7"], ["CMaj7", "Dm7"]) == (0.0, 0.0)
    total, mean = song_similarity(["CMaj7", "Am7"], ["FMaj7", "CMaj7"])
    assert total == pytest.approx(2 / 3 + 0.4) and mean == pytest.approx((2 / 3 + 0.4) / 2)
    with pytest.raises(LengthMismatch):
        song_similarity([0], [0, 1])


def test_cluster_coherence_oracle():
    k, window = 20, 16
    W = np.zeros(k, dtype=int)
    B = np.zeros((2, k), dtype=int)
    B[0, 5] = 1  # one mismatch seen by every window that covers position 5
    d = distance_matrix()[0, 1]
    expected = sum(d for j in range(k - window) if j <= 5 <= j + window) / ((k - window) * 2)
    assert cluster_coherence(Profile(B), W) == pytest.approx(expected)
    with pytest.raises(SequenceTooShort):
        cluster_coherence(Profile(B[:, :16]), W[:16])


def test_musical_coherence_uniform():
    assert musical_coherence(TransitionModel.uniform(), [0, 1, 2, 3]) == pytest.approx(1 / M)
    with pytest.raises(SequenceTooShort):
        musical_coherence(TransitionModel.uniform(), [0])


def test_make_profile_shape_and_determinism():
    song = synthetic_songs(1, seed=2)[0]
    a = make_profile(song, 8, ErrorRange(1, 2), make_rng(3))
    b = make_profile(song, 8, ErrorRange(1, 2), make_rng(3))
    assert a.B.shape == (8, 64) and a == b


def _small_run(workers=1, rules=("plurality", "kemeny")):
    songs = synthetic_songs(3, seed=4)
    model = train(songs, 1e-6)
    config = ExperimentConfig(agent_counts=(4,), error_ranges=(ErrorRange(0, 1), ErrorRange(3, 4)),
                              rules=rules, anneal=AnnealingConfig(iterations=50), seed=11)
    return run_experiment(config, songs, model, workers=workers)


def test_run_experiment_accounting_and_csv(tmp_path):
    report = _small_run()
    assert len(report.cells) == 3 * 2 * 2 and not report.failures
    text = report.to_csv(tmp_path / "out.csv")
    lines = text.split("\r\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len([line for line in lines if line]) == 13
    assert (tmp_path / "out.csv").read_bytes() == text.encode()
    summary = report.summary()
    assert summary[("plurality", 0.0, 1.0, 4)]["songs"] == 3


def test_run_experiment_is_order_independent():
    assert _small_run(workers=1).to_csv() == _small_run(workers=2).to_csv()


def test_all_rules_run():
    report = _small_run(rules=("pav", "clustered", "plurality2", "kemeny2", "pav2", "clustered2"))
    assert len(report.cells) == 3 * 2 * 6
    assert all(math.isfinite(c.musical_coherence) for c in report.cells)


def test_empty_song_list():
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig(), [], TransitionModel.uniform())


def test_synthetic_songs_deterministic():
    a, b = synthetic_songs(2, seed=5), synthetic_songs(2, seed=5)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(len(s) == 64 for s in a)
