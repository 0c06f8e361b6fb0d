"""Annealing-based solver for the NP-hard PAV rule (with or without the 2-gram term)."""

from __future__ import annotations

from functools import partial

import numpy as np

from ..annealing import AnnealingConfig, anneal, make_rng, sequence_neighbor
from ..transitions import TransitionModel
from .exact import candidate_set, solve_plurality
from .objectives import combined_objective, evaluate, score_pav
from .profile import ObjectiveWeights, Profile, Solution


def solve_pav(profile: Profile, weights: ObjectiveWeights | None = None,
              model: TransitionModel | None = None, config: AnnealingConfig | None = None,
              candidates=None, initial=None, return_trace: bool = False):
    """Maximise PAV (or PAV + 2-gram when ``model`` is given) by simulated annealing.

    The search starts from the Plurality solution unless ``initial`` is given.
    """
    cand = candidate_set(candidates)
    weights = weights or ObjectiveWeights()
    config = config or AnnealingConfig()
    if model is None:
        def score(W):
            return score_pav(profile, W)
    else:
        def score(W):
            return combined_objective("pav", profile, W, weights, model)

    start = solve_plurality(profile, cand).W if initial is None else initial
    best, trace = anneal(
        score,
        np.asarray(start, dtype=np.intp),
        partial(sequence_neighbor, alphabet=cand),
        config,
        make_rng(config.seed),
        maximize=True,
    )
    solution = Solution(best, evaluate(profile, best, model, weights))
    return (solution, trace) if return_trace else solution
