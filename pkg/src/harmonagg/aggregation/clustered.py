"""Clustered-Kemeny: joint choice of contiguous sections, an agent-to-section
assignment and a chord sequence.

``exact`` mode enumerates every partition into at most ``x_max`` sections and
every assignment of agents to sections; for a fixed (partition, assignment)
the best sequence is a per-position weighted Kemeny choice (or, with a
transition model, a Viterbi pass), so the search is exact. Its cost is
``sum_s C(k-1, s-1) * s**n`` and it refuses to run past ``budget``.
``anneal`` mode searches the joint neighbourhood instead and finishes with an
alternating polish (best sequence given the sections, best sections given the
sequence) until neither step improves.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from itertools import combinations, product
from math import comb

import numpy as np

from ..annealing import AnnealingConfig, ClusteredState, anneal, clustered_neighbor, make_rng
from ..chords import distance_matrix
from ..errors import BudgetExceeded
from ..transitions import TransitionModel
from .exact import TIE_TOL, agreement_counts, candidate_set, pick_minimal, solve_plurality, viterbi_min
from .objectives import combined_objective, score_clustered_kemeny, score_kemeny
from .profile import ClusterAssignment, ObjectiveWeights, Profile, SectionPartition, Solution

DEFAULT_BUDGET = 10**6


def enumerate_partitions(k: int, x_max: int):
    """All partitions of ``k`` positions into 1..x_max contiguous sections."""
    for s in range(1, min(x_max, k) + 1):
        for cuts in combinations(range(1, k), s - 1):
            yield SectionPartition((0,) + cuts, k)


def exact_cost(k: int, n: int, x_max: int) -> int:
    return sum(comb(k - 1, s - 1) * s**n for s in range(1, min(x_max, k) + 1))


@dataclass
class _Best:
    score: float
    empty: int
    kemeny: float
    W: np.ndarray
    partition: SectionPartition
    section_of: tuple[int, ...]

    def beaten_by(self, score: float, empty: int, kemeny: float) -> bool:
        if score < self.score - TIE_TOL:
            return True
        if score > self.score + TIE_TOL:
            return False
        if empty != self.empty:
            return empty < self.empty
        return kemeny < self.kemeny - TIE_TOL


class _Context:
    """Precomputed per-instance arrays shared by both modes."""

    def __init__(self, profile, cand, off_weight, weights, model):
        self.profile = profile
        self.cand = cand
        self.w = off_weight
        self.x = weights.x_KC
        self.weights = weights
        self.model = model
        self.d = distance_matrix()[profile.B][:, :, cand]  # (n, k, c)
        self.agreement = agreement_counts(profile, cand)
        self.trans = None
        if model is not None and self.x < 1:
            self.trans = (1 - self.x) * model.cost[np.ix_(cand, cand)]

    def q(self, zpos, section_of):
        return np.where(np.asarray(section_of)[:, None] == zpos[None, :], 1.0, self.w)

    def best_sequence(self, q) -> np.ndarray:
        costs = np.einsum("ij,ijc->jc", q, self.d)
        if self.model is None:
            return self.cand[pick_minimal(costs, self.agreement)]
        return self.cand[viterbi_min(self.x * costs, self.trans)]

    def best_assignment(self, W, partition) -> np.ndarray:
        dist = distance_matrix()[self.profile.B, W[None, :]]  # (n, k)
        per_section = np.stack([dist[:, sec.start:sec.stop].sum(axis=1) for sec in partition.sections()], axis=1)
        totals = self.w * dist.sum(axis=1, keepdims=True) + (1 - self.w) * per_section
        return np.argmin(totals, axis=1)

    def score(self, W, partition, section_of) -> float:
        asg = ClusterAssignment(tuple(section_of), self.w)
        if self.model is None:
            return score_clustered_kemeny(self.profile, W, partition, asg)
        return combined_objective("clustered", self.profile, W, self.weights, self.model, partition, asg)


def _exact(ctx: _Context, partitions, chunk_size: int) -> _Best:
    n = ctx.profile.n
    best = None
    for partition in partitions:
        s = partition.n_sections
        zpos = partition.position_sections()
        all_asg = product(range(s), repeat=n)
        while True:
            block = np.array(list(_take(all_asg, chunk_size)), dtype=np.intp).reshape(-1, n)
            if block.size == 0:
                break
            q = np.where(block[:, :, None] == zpos[None, None, :], 1.0, ctx.w)  # (N, n, k)
            costs = np.einsum("Nij,ijc->Njc", q, ctx.d)
            if ctx.model is None:
                scores = costs.min(axis=2).sum(axis=1)
                lo = scores.min()
                if best is not None and lo > best.score + TIE_TOL:
                    continue
                tied = np.flatnonzero(scores <= lo + TIE_TOL)
                seqs = np.stack([ctx.cand[pick_minimal(costs[t], ctx.agreement)] for t in tied])
            else:
                seqs = np.stack([ctx.cand[viterbi_min(ctx.x * c, ctx.trans)] for c in costs])
                scores = np.array([ctx.score(W, partition, a) for W, a in zip(seqs, block)])
                tied = np.arange(len(block))
            kem = np.atleast_1d(score_kemeny(ctx.profile, seqs))
            for pos, t in enumerate(tied):
                empty = s - len(set(block[t].tolist()))
                if best is None or best.beaten_by(scores[t], empty, kem[pos]):
                    best = _Best(float(scores[t]), empty, float(kem[pos]), seqs[pos], partition,
                                 tuple(block[t]))
    return best


def _take(iterator, count):
    for _, item in zip(range(count), iterator):
        yield item


def _polish(ctx: _Context, W, partition, section_of, max_rounds: int = 50):
    # each step is optimal given the other block, so the score never rises;
    # adopting equal-score steps also fixes chords left arbitrary by the search
    current = ctx.score(W, partition, section_of)
    for _ in range(max_rounds):
        W_new = ctx.best_sequence(ctx.q(partition.position_sections(), section_of))
        asg_new = ctx.best_assignment(W_new, partition)
        value = ctx.score(W_new, partition, asg_new)
        if value > current + TIE_TOL:
            break
        improved = value < current - TIE_TOL
        W, section_of, current = W_new, asg_new, value
        if not improved:
            break
    return W, section_of, current


def _anneal(ctx: _Context, x_max: int, config: AnnealingConfig, initial_W=None):
    profile = ctx.profile
    W0 = solve_plurality(profile, ctx.cand).W if initial_W is None else initial_W
    W0 = np.asarray(W0, dtype=np.intp)
    partition0 = SectionPartition.even(profile.k, min(x_max, profile.k))
    state0 = ClusteredState(W0, partition0.starts, ctx.best_assignment(W0, partition0))

    def score(state):
        partition = SectionPartition(state.starts, profile.k)
        return ctx.score(state.W, partition, state.section_of)

    best, trace = anneal(
        score, state0, partial(clustered_neighbor, alphabet=ctx.cand), config, make_rng(config.seed)
    )
    partition = SectionPartition(best.starts, profile.k)
    W, section_of, _ = _polish(ctx, best.W, partition, best.section_of)
    return W, partition, section_of, trace


def solve_clustered_kemeny(profile: Profile, x_max: int = 3, off_section_weight: float = 0.0,
                           mode: str = "exact", weights: ObjectiveWeights | None = None,
                           model: TransitionModel | None = None,
                           config: AnnealingConfig | None = None, candidates=None,
                           budget: int = DEFAULT_BUDGET, partitions=None,
                           initial=None, chunk_size: int | None = None):
    """Solve Clustered-Kemeny (Clustered-Kemeny + 2-gram when ``model`` is given).

    Returns ``(Solution, SectionPartition, ClusterAssignment)``. ``partitions``
    restricts exact mode to the given candidate partitions. ``mode="auto"``
    runs exact mode when it fits the budget and anneals otherwise.

    Ties in exact mode are resolved in favour of assignments that leave fewer
    sections without agents, then of the sequence with the lower plain Kemeny
    score, then by enumeration order (fewer sections first,
    lexicographic cut positions, lexicographic assignments).
    """
    if not 1 <= x_max <= profile.n:
        raise ValueError(f"x_max must lie in [1, n={profile.n}], got {x_max}")
    weights = weights or ObjectiveWeights()
    ctx = _Context(profile, candidate_set(candidates), off_section_weight, weights, model)

    if mode == "auto":
        mode = "exact" if partitions is None and exact_cost(profile.k, profile.n, x_max) <= budget else "anneal"
    if mode == "exact":
        if partitions is None:
            cost = exact_cost(profile.k, profile.n, x_max)
            partitions = enumerate_partitions(profile.k, x_max)
        else:
            partitions = list(partitions)
            cost = sum(p.n_sections**profile.n for p in partitions)
        if cost > budget:
            raise BudgetExceeded(f"exact Clustered-Kemeny needs {cost} evaluations (budget {budget})")
        if chunk_size is None:
            chunk_size = max(1, 2**21 // (profile.k * len(ctx.cand)))
        found = _exact(ctx, partitions, chunk_size)
        W, partition, section_of = found.W, found.partition, found.section_of
    elif mode == "anneal":
        W, partition, section_of, _ = _anneal(ctx, x_max, config or AnnealingConfig(), initial)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    assignment = ClusterAssignment(tuple(section_of), off_section_weight)
    scores = {
        "clustered": score_clustered_kemeny(profile, W, partition, assignment),
        "kemeny": score_kemeny(profile, W),
    }
    if model is not None:
        scores["clustered2"] = combined_objective("clustered", profile, W, weights, model, partition, assignment)
    return Solution(W, scores), partition, assignment
