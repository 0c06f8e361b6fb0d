"""Objective functions of the eight aggregation rules.

Every scorer accepts either a single sequence ``W`` (shape ``(k,)``) or a batch
of candidate sequences (shape ``(N, k)``) and then returns one value per row.

Sign convention for the 2-gram variants: ``G(W)`` is the non-negative negative
log-likelihood and always acts as a penalty, so it is added under minimisation
(kemeny2, clustered2) and subtracted under maximisation (plurality2, pav2).
"""

from __future__ import annotations

import math

import numpy as np

from ..chords import distance_matrix
from ..errors import LengthMismatch, ZeroProbabilityTransition
from ..transitions import TransitionModel, neg_log_likelihood
from .profile import ClusterAssignment, ObjectiveWeights, Profile, SectionPartition, as_sequence

BASE_RULES = ("plurality", "kemeny", "pav", "clustered")
RULES = BASE_RULES + tuple(f"{r}2" for r in BASE_RULES)
MAXIMIZE = {"plurality": True, "pav": True, "kemeny": False, "clustered": False}


def base_rule(rule: str) -> str:
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {', '.join(RULES)}")
    return rule.rstrip("2")


def maximizes(rule: str) -> bool:
    return MAXIMIZE[base_rule(rule)]


def _distances(profile: Profile, W) -> np.ndarray:
    W = as_sequence(W)
    if W.shape[-1] != profile.k:
        raise LengthMismatch(f"solution length {W.shape[-1]} != profile length {profile.k}")
    # shape (..., n, k)
    return distance_matrix()[profile.B, W[..., None, :]]


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def satisfaction(profile: Profile, i: int, W) -> float:
    """Sum of Jaccard distances between agent ``i``'s row and ``W`` (0 means identical)."""
    return _scalar(_distances(profile, W)[..., i, :].sum(axis=-1))


def score_plurality(profile: Profile, W):
    W = as_sequence(W)
    if W.shape[-1] != profile.k:
        raise LengthMismatch(f"solution length {W.shape[-1]} != profile length {profile.k}")
    hits = (profile.B == W[..., None, :]).sum(axis=(-2, -1))
    return int(hits) if np.ndim(hits) == 0 else hits


def score_kemeny(profile: Profile, W):
    return _scalar(_distances(profile, W).sum(axis=(-2, -1)))


def harmonic_weights(k: int) -> np.ndarray:
    return 1.0 / np.arange(1, k + 1)


def score_pav(profile: Profile, W):
    """Per agent, utilities ``1 - d`` sorted descending and weighted by ``1/j``; summed over agents."""
    utilities = 1.0 - _distances(profile, W)
    ranked = -np.sort(-utilities, axis=-1)
    return _scalar((ranked @ harmonic_weights(profile.k)).sum(axis=-1))


def score_clustered_kemeny(profile: Profile, W, partition: SectionPartition,
                           assignment: ClusterAssignment):
    if partition.k != profile.k:
        raise LengthMismatch(f"partition covers {partition.k} positions, profile has {profile.k}")
    assignment.validate(profile.n, partition)
    q = assignment.weights(partition)
    return _scalar((q * _distances(profile, W)).sum(axis=(-2, -1)))


def _base_score(rule, profile, W, partition, assignment):
    if rule == "plurality":
        return score_plurality(profile, W)
    if rule == "kemeny":
        return score_kemeny(profile, W)
    if rule == "pav":
        return score_pav(profile, W)
    if partition is None or assignment is None:
        raise ValueError("clustered objectives need a partition and an assignment")
    return score_clustered_kemeny(profile, W, partition, assignment)


def rule_weight(rule: str, weights: ObjectiveWeights) -> float:
    return {
        "plurality": weights.x_M,
        "kemeny": weights.x_K,
        "pav": weights.x_P,
        "clustered": weights.x_KC,
    }[base_rule(rule)]


def combined_objective(rule: str, profile: Profile, W, weights: ObjectiveWeights | None = None,
                       model: TransitionModel | None = None,
                       partition: SectionPartition | None = None,
                       assignment: ClusterAssignment | None = None):
    """The 2-gram variant of ``rule``: ``x * base -/+ (1 - x) * G(W)``."""
    base = base_rule(rule)
    if model is None:
        raise ValueError(f"{base}2 needs a transition model")
    weights = weights or ObjectiveWeights()
    x = rule_weight(base, weights)
    value = _base_score(base, profile, W, partition, assignment)
    if x == 1:
        # the 2-gram term carries no weight; skip it so 0 * inf never arises
        return _scalar(value)
    g = neg_log_likelihood(model, as_sequence(W))
    if MAXIMIZE[base]:
        return _scalar(x * value - (1 - x) * g)
    return _scalar(x * value + (1 - x) * g)


def objective(rule: str, profile: Profile, W, weights: ObjectiveWeights | None = None,
              model: TransitionModel | None = None,
              partition: SectionPartition | None = None,
              assignment: ClusterAssignment | None = None):
    """Value of any of the eight rule objectives (``plurality`` ... ``clustered2``)."""
    base = base_rule(rule)
    if rule.endswith("2"):
        return combined_objective(base, profile, W, weights, model, partition, assignment)
    return _base_score(base, profile, W, partition, assignment)


def evaluate(profile: Profile, W, model: TransitionModel | None = None,
             weights: ObjectiveWeights | None = None) -> dict[str, float]:
    """Every partition-free objective applicable to ``W``.

    A sequence using a zero-probability transition gets ``G = inf`` and the
    2-gram scores it implies instead of an exception.
    """
    scores = {
        "plurality": score_plurality(profile, W),
        "kemeny": score_kemeny(profile, W),
        "pav": score_pav(profile, W),
    }
    if model is not None:
        try:
            scores["neg_log_likelihood"] = neg_log_likelihood(model, as_sequence(W))
        except ZeroProbabilityTransition:
            scores["neg_log_likelihood"] = math.inf
        for rule in ("plurality2", "kemeny2", "pav2"):
            try:
                scores[rule] = objective(rule, profile, W, weights, model)
            except ZeroProbabilityTransition:
                scores[rule] = -math.inf if MAXIMIZE[rule[:-1]] else math.inf
    return scores
