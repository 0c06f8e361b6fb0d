from itertools import product

import numpy as np
import pytest

from harmonagg.aggregation import (
    ClusterAssignment, ObjectiveWeights, Profile, SectionPartition, combined_objective,
    enumerate_partitions, exact_cost, score_clustered_kemeny, score_kemeny, solve_clustered_kemeny,
)
from harmonagg.aggregation.oracle import all_sequences
from harmonagg.annealing import AnnealingConfig
from harmonagg.errors import BudgetExceeded, InvalidPartition, UnassignedAgent

from conftest import random_model, random_profile

STATED_PARTITION = SectionPartition((0, 1, 3), 4)   # {CMaj7}, {Dm7, G7}, {Am7}
STATED_ASSIGNMENT = (1, 2, 0)                        # agent 1 -> s2, agent 2 -> s3, agent 3 -> s1


def joint_brute_force(profile, alphabet, x_max, off_weight, model=None, weights=None):
    """Minimum over every sequence, partition and assignment."""
    seqs = all_sequences(alphabet, profile.k)
    best = np.inf
    for partition in enumerate_partitions(profile.k, x_max):
        for asg in product(range(partition.n_sections), repeat=profile.n):
            a = ClusterAssignment(asg, off_weight)
            if model is None:
                values = score_clustered_kemeny(profile, seqs, partition, a)
            else:
                values = combined_objective("clustered", profile, seqs, weights, model, partition, a)
            best = min(best, float(np.min(values)))
    return best


def test_partition_enumeration_counts():
    parts = list(enumerate_partitions(4, 3))
    assert len(parts) == 1 + 3 + 3
    assert parts[0].starts == (0,)
    assert exact_cost(4, 3, 3) == 1 + 3 * 8 + 3 * 27


def test_partition_validation():
    with pytest.raises(InvalidPartition):
        SectionPartition((1, 2), 4)
    with pytest.raises(InvalidPartition):
        SectionPartition((0, 2, 2), 4)
    with pytest.raises(InvalidPartition):
        SectionPartition((0, 1, 2), 4, x_max=2)
    assert SectionPartition.even(5, 2).starts == (0, 3)
    assert list(STATED_PARTITION.position_sections()) == [0, 1, 1, 2]


def test_assignment_validation(toy_profile):
    with pytest.raises(UnassignedAgent):
        score_clustered_kemeny(toy_profile, toy_profile.B[0], STATED_PARTITION, ClusterAssignment((0, 3, 1)))
    with pytest.raises(UnassignedAgent):
        ClusterAssignment((0, 1)).validate(3, STATED_PARTITION)


def test_toy_exact_reaches_zero(toy_profile):
    sol, partition, assignment = solve_clustered_kemeny(toy_profile, x_max=3, mode="exact")
    assert sol.scores["clustered"] == 0.0
    assert score_clustered_kemeny(toy_profile, sol.W, partition, assignment) == 0.0
    assert sol.symbols == ["CMaj7", "Dm7", "G7", "Am7"]


def test_toy_stated_partition(toy_profile):
    W = ["CMaj7", "Dm7", "G7", "Am7"]
    assert score_clustered_kemeny(toy_profile, W, STATED_PARTITION, ClusterAssignment(STATED_ASSIGNMENT)) == 0.0
    sol, partition, assignment = solve_clustered_kemeny(toy_profile, 3, partitions=[STATED_PARTITION])
    assert partition == STATED_PARTITION
    assert assignment.section_of == STATED_ASSIGNMENT
    assert sol.symbols == W


def test_single_section_is_kemeny(toy_profile):
    sol, partition, _ = solve_clustered_kemeny(toy_profile, x_max=1)
    assert partition.n_sections == 1
    assert sol.scores["clustered"] == pytest.approx(score_kemeny(toy_profile, sol.W))
    assert sol.scores["clustered"] == pytest.approx(28 / 15)


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("off_weight", [0.0, 0.5])
def test_exact_matches_joint_brute_force(seed, off_weight):
    rng = np.random.default_rng(seed)
    alphabet = rng.choice(120, size=3, replace=False)
    profile = random_profile(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4)), alphabet)
    x_max = int(rng.integers(1, profile.n + 1))
    sol, partition, assignment = solve_clustered_kemeny(profile, x_max, off_weight, candidates=alphabet)
    expected = joint_brute_force(profile, alphabet, x_max, off_weight)
    assert sol.scores["clustered"] == pytest.approx(expected, abs=1e-9)
    assert partition.n_sections <= x_max
    assert score_clustered_kemeny(profile, sol.W, partition, assignment) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_exact_with_model_matches_brute_force(seed):
    rng = np.random.default_rng(100 + seed)
    alphabet = rng.choice(120, size=3, replace=False)
    profile = random_profile(rng, 2, 3, alphabet)
    model = random_model(rng)
    weights = ObjectiveWeights(x_KC=0.5)
    sol, _, _ = solve_clustered_kemeny(profile, 2, weights=weights, model=model, candidates=alphabet)
    expected = joint_brute_force(profile, alphabet, 2, 0.0, model, weights)
    assert sol.scores["clustered2"] == pytest.approx(expected, abs=1e-9)


def test_anneal_mode_on_toy(toy_profile):
    sol, partition, assignment = solve_clustered_kemeny(
        toy_profile, 3, mode="anneal", config=AnnealingConfig(iterations=2000, seed=3))
    assert sol.scores["clustered"] == pytest.approx(0.0, abs=1e-12)
    again = solve_clustered_kemeny(toy_profile, 3, mode="anneal", config=AnnealingConfig(iterations=2000, seed=3))
    assert again[0].W == sol.W and again[1] == partition and again[2] == assignment


def test_anneal_recovers_unanimous_song():
    song = np.arange(20) % 7 + 10
    profile = Profile(np.stack([song] * 5))
    sol, _, _ = solve_clustered_kemeny(profile, 2, mode="anneal", config=AnnealingConfig(iterations=300))
    assert list(sol.W) == list(song)


def test_budget_and_x_max_guard(toy_profile):
    with pytest.raises(BudgetExceeded):
        solve_clustered_kemeny(toy_profile, 3, mode="exact", budget=10)
    with pytest.raises(ValueError):
        solve_clustered_kemeny(toy_profile, x_max=4)
    # auto falls back to annealing instead of raising
    sol, _, _ = solve_clustered_kemeny(toy_profile, 3, mode="auto", budget=10,
                                       config=AnnealingConfig(iterations=500))
    assert sol.scores["clustered"] >= 0
