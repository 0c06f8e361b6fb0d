"""Aggregation rules: objectives, exact solvers, heuristics and the brute-force oracle."""

from __future__ import annotations

from ..annealing import AnnealingConfig
from ..transitions import TransitionModel
from .clustered import enumerate_partitions, exact_cost, solve_clustered_kemeny
from .exact import (
    candidate_set,
    solve_kemeny,
    solve_kemeny_2gram_dp,
    solve_plurality,
    solve_plurality_2gram_dp,
)
from .heuristic import solve_pav
from .objectives import (
    BASE_RULES,
    RULES,
    base_rule,
    combined_objective,
    evaluate,
    maximizes,
    objective,
    satisfaction,
    score_clustered_kemeny,
    score_kemeny,
    score_pav,
    score_plurality,
)
from .oracle import brute_force_optimum
from .profile import (
    ClusterAssignment,
    ObjectiveWeights,
    Profile,
    SectionPartition,
    Solution,
    as_sequence,
    format_profile,
    load_profile,
    parse_profile,
    save_profile,
)

TWO_GRAM_RULES = tuple(r for r in RULES if r.endswith("2"))


def solve(rule: str, profile: Profile, weights: ObjectiveWeights | None = None,
          model: TransitionModel | None = None, config: AnnealingConfig | None = None,
          x_max: int = 3, off_section_weight: float = 0.0, clustered_mode: str = "auto",
          candidates=None) -> Solution:
    """Run any of the eight rules and return its solution.

    For the clustered rules only the sequence is returned; call
    :func:`solve_clustered_kemeny` directly for the partition and assignment.
    """
    base_rule(rule)
    if rule in TWO_GRAM_RULES and model is None:
        raise ValueError(f"rule {rule} needs a transition model")
    if rule == "plurality":
        return solve_plurality(profile, candidates)
    if rule == "kemeny":
        return solve_kemeny(profile, candidates)
    if rule == "plurality2":
        return solve_plurality_2gram_dp(profile, weights, model, candidates)
    if rule == "kemeny2":
        return solve_kemeny_2gram_dp(profile, weights, model, candidates)
    if rule in ("pav", "pav2"):
        return solve_pav(profile, weights, model if rule == "pav2" else None, config, candidates)
    solution, _, _ = solve_clustered_kemeny(
        profile, min(x_max, profile.n), off_section_weight, clustered_mode, weights,
        model if rule == "clustered2" else None, config, candidates,
    )
    return solution


__all__ = [
    "BASE_RULES", "RULES", "TWO_GRAM_RULES", "AnnealingConfig", "ClusterAssignment",
    "ObjectiveWeights", "Profile", "SectionPartition", "Solution", "as_sequence",
    "base_rule", "brute_force_optimum", "candidate_set", "combined_objective",
    "enumerate_partitions", "evaluate", "exact_cost", "format_profile", "load_profile",
    "maximizes", "objective", "parse_profile", "satisfaction", "save_profile",
    "score_clustered_kemeny", "score_kemeny", "score_pav", "score_plurality", "solve",
    "solve_clustered_kemeny", "solve_kemeny", "solve_kemeny_2gram_dp", "solve_pav",
    "solve_plurality", "solve_plurality_2gram_dp",
]
