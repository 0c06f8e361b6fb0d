from fractions import Fraction
from functools import partial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmonagg.aggregation import (
    RULES, ObjectiveWeights, Profile, Solution, brute_force_optimum, combined_objective,
    evaluate, format_profile, objective, parse_profile, satisfaction, score_kemeny, score_pav,
    score_plurality, solve, solve_kemeny, solve_kemeny_2gram_dp, solve_pav, solve_plurality,
    solve_plurality_2gram_dp,
)
from harmonagg.aggregation.exact import viterbi_min
from harmonagg.aggregation.objectives import harmonic_weights
from harmonagg.aggregation.oracle import all_sequences
from harmonagg.annealing import AnnealingConfig
from harmonagg.chords import M, chord_id, jaccard_fraction
from harmonagg.errors import BudgetExceeded, ProfileFormatError

from conftest import DATA, SATISFACTION_W, TOY_ROWS, random_model, random_profile

TOY_PLURALITY = ["CMaj7", "Dm7", "G7", "Am7"]


# --- profile format -------------------------------------------------------

def test_profile_round_trip(toy_profile):
    assert parse_profile(format_profile(toy_profile).splitlines()) == toy_profile


@pytest.mark.parametrize("text, line", [
    (["k=4 n=1", "CMaj7 Dm7"], 2),
    (["n=1 k=2", "CMaj7 Xx7"], 2),
    (["four chords"], 1),
])
def test_profile_errors_carry_line(text, line):
    with pytest.raises(ProfileFormatError) as info:
        parse_profile(text)
    assert info.value.line == line


def test_profile_row_count_mismatch():
    with pytest.raises(ProfileFormatError):
        parse_profile(["k=1 n=2", "CMaj7"])


def test_weights_validated():
    with pytest.raises(ValueError):
        ObjectiveWeights(x_M=1.5)


# --- objective oracles -----------------------------------------------------

def test_satisfaction_worked_example(satisfaction_profile):
    sats = [satisfaction(satisfaction_profile, i, SATISFACTION_W) for i in range(3)]
    # exact sums of Jaccard fractions
    assert sats[0] == pytest.approx(float(Fraction(2, 3) + Fraction(2, 5)))
    assert sats[1] == pytest.approx(0.4)
    assert sats[2] == pytest.approx(float(Fraction(2, 3) + Fraction(2, 5)))


def test_toy_scores(toy_profile):
    W = TOY_PLURALITY
    assert score_plurality(toy_profile, W) == 8
    assert score_kemeny(toy_profile, W) == pytest.approx(28 / 15, abs=1e-12)
    # agent utilities: (1,1,1,0.6), (1,0.6,1,0.6)->sorted, (1,1/3,1,1)
    assert score_pav(toy_profile, W) == pytest.approx(5.75, abs=1e-12)


def test_pav_toy_agent_one(toy_profile):
    # utilities (1, 1, 1, 0.6) -> 1 + 1/2 + 1/3 + 0.6/4
    one = Profile(toy_profile.B[:1])
    assert score_pav(one, TOY_PLURALITY) == pytest.approx(1 + 1 / 2 + 1 / 3 + 0.6 / 4, abs=1e-12)


def test_pav_by_hand():
    profile = Profile.from_rows([["CMaj7", "FMaj7"]])
    # utilities 1 and 1/3, sorted descending, weights 1 and 1/2
    assert score_pav(profile, ["CMaj7", "CMaj7"]) == pytest.approx(1 + 1 / 6)
    assert list(harmonic_weights(3)) == pytest.approx([1, 0.5, 1 / 3])


def test_batch_scoring_matches_single(toy_profile):
    batch = np.array([[chord_id(c) for c in TOY_PLURALITY], toy_profile.B[1]])
    for scorer in (score_plurality, score_kemeny, score_pav):
        values = scorer(toy_profile, batch)
        assert values[1] == pytest.approx(scorer(toy_profile, batch[1]))


def test_combined_signs(toy_profile, g_model):
    w = ObjectiveWeights(0.5, 0.9, 0.5, 0.9)
    g = g_model.neg_log_likelihood(TOY_PLURALITY)
    assert combined_objective("kemeny", toy_profile, TOY_PLURALITY, w, g_model) == pytest.approx(
        0.9 * 28 / 15 + 0.1 * g)
    assert combined_objective("plurality", toy_profile, TOY_PLURALITY, w, g_model) == pytest.approx(
        0.5 * 8 - 0.5 * g)
    assert set(evaluate(toy_profile, TOY_PLURALITY, g_model)) >= {"kemeny2", "plurality2", "pav2"}


def test_combined_needs_model(toy_profile):
    with pytest.raises(ValueError):
        combined_objective("kemeny", toy_profile, TOY_PLURALITY)
    with pytest.raises(ValueError):
        solve("kemeny2", toy_profile)


# --- exact solvers ---------------------------------------------------------

def test_toy_plurality(toy_profile):
    assert solve_plurality(toy_profile).symbols == TOY_PLURALITY


def test_toy_kemeny_per_column(toy_profile):
    sol = solve_kemeny(toy_profile)
    total = Fraction(0)
    for j in range(4):
        col = [min(sum(jaccard_fraction(c, b) for b in toy_profile.B[:, j]) for c in range(M))]
        total += col[0]
    assert total == Fraction(28, 15)
    assert score_kemeny(toy_profile, sol.W) == pytest.approx(28 / 15, abs=1e-12)


def test_kemeny_prefers_written_dim7():
    # Ebdim7 and Cdim7 share their notes; the solver keeps the chord the agents wrote
    profile = Profile.from_rows([["Ebdim7"], ["Ebdim7"]])
    assert solve_kemeny(profile).symbols == ["Ebdim7"]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_base_solvers_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    alphabet = rng.choice(M, size=4, replace=False)
    profile = random_profile(rng, int(rng.integers(1, 5)), int(rng.integers(1, 4)), alphabet)
    _, best_k = brute_force_optimum(partial(score_kemeny, profile), alphabet, profile.k,
                                    vectorized=True)
    assert score_kemeny(profile, solve_kemeny(profile, alphabet).W) == pytest.approx(best_k, abs=1e-9)
    _, best_m = brute_force_optimum(partial(score_plurality, profile), alphabet, profile.k,
                                    maximize=True, vectorized=True)
    assert score_plurality(profile, solve_plurality(profile, alphabet).W) == best_m


def test_viterbi_small_oracle():
    node = np.array([[0.0, 5.0], [5.0, 0.0], [0.0, 5.0]])
    trans = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert list(viterbi_min(node, trans)) == [0, 1, 0]
    assert list(viterbi_min(node, np.array([[0.0, 100.0], [100.0, 0.0]]))) == [0, 0, 0]
    assert list(viterbi_min(node, None)) == [0, 1, 0]


@pytest.mark.parametrize("x", [0.0, 0.5, 0.9, 1.0])
def test_dp_matches_brute_force(x):
    rng = np.random.default_rng(int(x * 10) + 7)
    for _ in range(10):
        alphabet = rng.choice(M, size=5, replace=False)
        profile = random_profile(rng, 3, 4, alphabet)
        model = random_model(rng, sparsity=0.3)
        w = ObjectiveWeights(x_M=x, x_K=x)
        for rule, solver, maximize in (("kemeny2", solve_kemeny_2gram_dp, False),
                                       ("plurality2", solve_plurality_2gram_dp, True)):
            sol = solver(profile, w, model, alphabet)
            f = partial(_safe_objective, rule, profile, w, model, maximize)
            _, best = brute_force_optimum(f, alphabet, profile.k, maximize=maximize)
            assert _safe_objective(rule, profile, w, model, maximize, sol.W) == pytest.approx(best, abs=1e-9)


def _safe_objective(rule, profile, w, model, maximize, W):
    try:
        return objective(rule, profile, W, w, model)
    except ValueError:  # zero-probability transition
        return -np.inf if maximize else np.inf


def test_endpoint_x1_is_base(toy_profile, g_model):
    w = ObjectiveWeights(1.0, 1.0, 1.0, 1.0)
    for rule in ("plurality", "kemeny", "pav"):
        assert objective(rule + "2", toy_profile, TOY_PLURALITY, w, g_model) == objective(
            rule, toy_profile, TOY_PLURALITY)


# --- PAV annealing ---------------------------------------------------------

def test_pav_anneal_toy(toy_profile):
    sol, trace = solve_pav(toy_profile, config=AnnealingConfig(seed=1), return_trace=True)
    assert sol.scores["pav"] >= 5.75
    assert all(b2 >= b1 for b1, b2 in zip(trace.best_scores, trace.best_scores[1:]))
    again = solve_pav(toy_profile, config=AnnealingConfig(seed=1))
    assert again.W == sol.W


@pytest.mark.parametrize("rule", RULES)
def test_solve_dispatch(rule, toy_profile, g_model):
    sol = solve(rule, toy_profile, model=g_model, config=AnnealingConfig(iterations=200))
    assert isinstance(sol, Solution) and sol.k == 4


# --- oracle ----------------------------------------------------------------

def test_all_sequences_lexicographic():
    seqs = all_sequences([5, 3], 2)
    assert seqs.tolist() == [[3, 3], [3, 5], [5, 3], [5, 5]]
    assert all_sequences([1, 2, 3], 3, 4, 6).tolist() == [[1, 2, 2], [1, 2, 3]]


def test_brute_force_budget():
    with pytest.raises(BudgetExceeded):
        brute_force_optimum(sum, range(10), 7, budget=10**6)


def test_brute_force_tie_takes_first():
    W, value = brute_force_optimum(lambda W: 0.0, [4, 2], 2)
    assert W.W == (2, 2) and value == 0.0
