"""Seeded simulated annealing with geometric cooling.

Random numbers come from numpy's PCG64 bit generator. Independent runs derive
their seeds with :func:`derive_seed`, which hashes a root seed together with a
tuple of integer labels through ``numpy.random.SeedSequence``; the derived seed
depends only on the labels, never on execution order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

RNG_ALGORITHM = "numpy.PCG64"


@dataclass(frozen=True)
class AnnealingConfig:
    iterations: int = 1000
    t_initial: float = 1.0
    cooling: float = 0.995
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 < self.cooling < 1:
            raise ValueError("cooling must lie in (0, 1)")
        if self.t_initial <= 0:
            raise ValueError("t_initial must be > 0")


@dataclass
class SearchTrace:
    current_scores: list[float] = field(default_factory=list)
    best_scores: list[float] = field(default_factory=list)
    temperatures: list[float] = field(default_factory=list)
    accepted: int = 0
    best_score: float = math.nan
    final_state: Any = None
    rng_algorithm: str = RNG_ALGORITHM
    seed: int | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "current_score", "best_score", "temperature"])
            for it, row in enumerate(zip(self.current_scores, self.best_scores, self.temperatures)):
                writer.writerow([it, *(repr(float(v)) for v in row)])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(root: int, *labels: int) -> int:
    """A 64-bit seed for the run identified by ``labels`` under ``root``."""
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(x) for x in labels))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def anneal(score: Callable[[Any], float], initial, neighbor: Callable[[Any, np.random.Generator], Any],
           config: AnnealingConfig | None = None, rng: np.random.Generator | None = None,
           maximize: bool = False):
    """Metropolis search; returns ``(best_state, trace)``.

    Improving moves are always taken, worsening ones with probability
    ``exp(-delta / T)``. ``T`` starts at ``config.t_initial`` and is multiplied
    by ``config.cooling`` after every iteration. The best state ever visited is
    returned, not the last one.
    """
    config = config or AnnealingConfig()
    rng = rng if rng is not None else make_rng(config.seed)
    sign = -1.0 if maximize else 1.0

    state = initial
    current = float(score(state))
    best_state, best = state, current
    trace = SearchTrace(seed=config.seed)
    temperature = config.t_initial
    for _ in range(config.iterations):
        candidate = neighbor(state, rng)
        value = float(score(candidate))
        delta = sign * (value - current)
        # once the temperature underflows to 0 only non-worsening moves pass
        if delta <= 0 or (temperature > 0 and rng.random() < math.exp(-delta / temperature)):
            state, current = candidate, value
            trace.accepted += 1
            if sign * (current - best) < 0:
                best_state, best = state, current
        trace.current_scores.append(current)
        trace.best_scores.append(best)
        trace.temperatures.append(temperature)
        temperature *= config.cooling
    trace.best_score = best
    trace.final_state = state
    return best_state, trace


def _other_chord(current: int, alphabet: np.ndarray, rng: np.random.Generator) -> int:
    pos = np.searchsorted(alphabet, current)
    if pos < len(alphabet) and alphabet[pos] == current:
        if len(alphabet) == 1:
            return current
        r = int(rng.integers(len(alphabet) - 1))
        return int(alphabet[r + 1 if r >= pos else r])
    return int(alphabet[rng.integers(len(alphabet))])


def sequence_neighbor(W: np.ndarray, rng: np.random.Generator, alphabet: np.ndarray) -> np.ndarray:
    """Replace the chord at one uniformly chosen position by a different chord of ``alphabet``.

    ``alphabet`` must be sorted ascending.
    """
    out = np.array(W, copy=True)
    j = int(rng.integers(len(out)))
    out[j] = _other_chord(int(out[j]), alphabet, rng)
    return out


@dataclass(frozen=True)
class ClusteredState:
    W: np.ndarray
    starts: tuple[int, ...]
    section_of: np.ndarray


def clustered_neighbor(state: ClusteredState, rng: np.random.Generator,
                       alphabet: np.ndarray) -> ClusteredState:
    """With equal probability: mutate a chord, shift a section boundary by one,
    or move an agent to another section. Moves that would break validity
    (empty section, single-section reassignment) leave the state unchanged.
    """
    move = int(rng.integers(3))
    k = len(state.W)
    n_sections = len(state.starts)
    if move == 0:
        return ClusteredState(sequence_neighbor(state.W, rng, alphabet), state.starts, state.section_of)
    if move == 1:
        if n_sections == 1:
            return state
        b = int(rng.integers(1, n_sections))
        shifted = state.starts[b] + (1 if rng.random() < 0.5 else -1)
        upper = state.starts[b + 1] if b + 1 < n_sections else k
        if not state.starts[b - 1] < shifted < upper:
            return state
        starts = state.starts[:b] + (shifted,) + state.starts[b + 1:]
        return ClusteredState(state.W, starts, state.section_of)
    if n_sections == 1:
        return state
    section_of = state.section_of.copy()
    i = int(rng.integers(len(section_of)))
    r = int(rng.integers(n_sections - 1))
    section_of[i] = r + 1 if r >= section_of[i] else r
    return ClusteredState(state.W, state.starts, section_of)
