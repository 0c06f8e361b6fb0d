"""Polynomial-time exact solvers: per-position Plurality/Kemeny and the 2-gram DPs."""

from __future__ import annotations

import numpy as np

from ..chords import M, distance_matrix
from ..transitions import TransitionModel
from .objectives import evaluate
from .profile import ObjectiveWeights, Profile, Solution

# float sums of Jaccard distances that agree up to rounding are treated as ties
TIE_TOL = 1e-9


def candidate_set(candidates=None) -> np.ndarray:
    """Sorted unique chord ids a solver may place (default: the whole alphabet)."""
    if candidates is None:
        return np.arange(M)
    cand = np.unique(np.asarray(list(candidates), dtype=np.intp))
    if cand.size == 0 or cand[0] < 0 or cand[-1] >= M:
        raise ValueError("candidate chords must be a non-empty subset of the alphabet")
    return cand


def agreement_counts(profile: Profile, cand: np.ndarray) -> np.ndarray:
    """``(k, c)`` number of agents choosing each candidate at each position."""
    return (profile.B[:, :, None] == cand[None, None, :]).sum(axis=0)


def distance_costs(profile: Profile, cand: np.ndarray, q: np.ndarray | None = None) -> np.ndarray:
    """``(k, c)`` summed (optionally q-weighted) Jaccard distance from each column to each candidate."""
    d = distance_matrix()[profile.B][:, :, cand]  # (n, k, c)
    if q is None:
        return d.sum(axis=0)
    return np.einsum("ij,ijc->jc", q, d)


def pick_minimal(costs: np.ndarray, agreement: np.ndarray) -> np.ndarray:
    """Row-wise argmin; ties go to the most-chosen candidate, then the lowest id.

    The agreement tie-break matters for chords with identical note sets (the
    dim7 family): a unanimous column must return the chord the agents wrote.
    """
    tied = costs <= costs.min(axis=1, keepdims=True) + TIE_TOL
    return np.argmax(np.where(tied, agreement, -1), axis=1)


def solve_plurality(profile: Profile, candidates=None) -> Solution:
    """Most frequent chord per position; ties broken by lowest chord id."""
    cand = candidate_set(candidates)
    W = cand[np.argmax(agreement_counts(profile, cand), axis=1)]
    return Solution(W, evaluate(profile, W))


def solve_kemeny(profile: Profile, candidates=None) -> Solution:
    """Per-position minimiser of the summed Jaccard distance, O(m n k)."""
    cand = candidate_set(candidates)
    costs = distance_costs(profile, cand)
    W = cand[pick_minimal(costs, agreement_counts(profile, cand))]
    return Solution(W, evaluate(profile, W))


def viterbi_min(node_cost: np.ndarray, trans_cost: np.ndarray | None) -> np.ndarray:
    """Minimise ``sum_j node[j, a_j] + sum_j trans[a_j, a_{j+1}]`` over index paths.

    ``node_cost`` is ``(k, c)``, ``trans_cost`` is ``(c, c)`` or None. Ties go to
    the lowest index, both for the final state and along backpointers.
    """
    k, c = node_cost.shape
    best = node_cost[0].copy()
    back = np.zeros((k, c), dtype=np.intp)
    cols = np.arange(c)
    for j in range(1, k):
        total = best[:, None] + trans_cost if trans_cost is not None else np.broadcast_to(best[:, None], (c, c))
        back[j] = np.argmin(total, axis=0)
        best = total[back[j], cols] + node_cost[j]
    path = np.empty(k, dtype=np.intp)
    path[-1] = int(np.argmin(best))
    for j in range(k - 1, 0, -1):
        path[j - 1] = back[j, path[j]]
    return path


def _transition_cost(model: TransitionModel, cand: np.ndarray, weight: float) -> np.ndarray | None:
    if weight == 0:
        return None
    return weight * model.cost[np.ix_(cand, cand)]


def solve_kemeny_2gram_dp(profile: Profile, weights: ObjectiveWeights | None = None,
                          model: TransitionModel | None = None, candidates=None) -> Solution:
    """Exact minimiser of ``x_K K(W) + (1 - x_K) G(W)`` in O(k m^2 + k m n)."""
    if model is None:
        raise ValueError("kemeny2 needs a transition model")
    weights = weights or ObjectiveWeights()
    cand = candidate_set(candidates)
    node = weights.x_K * distance_costs(profile, cand)
    path = viterbi_min(node, _transition_cost(model, cand, 1 - weights.x_K))
    W = cand[path]
    return Solution(W, evaluate(profile, W, model, weights))


def solve_plurality_2gram_dp(profile: Profile, weights: ObjectiveWeights | None = None,
                             model: TransitionModel | None = None, candidates=None) -> Solution:
    """Exact maximiser of ``x_M M(W) - (1 - x_M) G(W)``."""
    if model is None:
        raise ValueError("plurality2 needs a transition model")
    weights = weights or ObjectiveWeights()
    cand = candidate_set(candidates)
    node = -weights.x_M * agreement_counts(profile, cand).astype(np.float64)
    path = viterbi_min(node, _transition_cost(model, cand, 1 - weights.x_M))
    W = cand[path]
    return Solution(W, evaluate(profile, W, model, weights))
