"""Semi-artificial experiments: perturb songs into agent profiles, aggregate,
and score the results with song similarity, cluster coherence and musical
coherence.

An error range ``(lo, hi)`` is read as a per-position replacement probability
``q ~ U[lo/4, hi/4]`` drawn once per agent. A replaced chord is drawn from the
other 119 chords with probability proportional to ``1 - jaccard``.

Every cell ``(song, n_agents, error range, rule)`` gets its own seeds from
:func:`harmonagg.annealing.derive_seed`, so cells can run in any order or in
parallel and still produce the same CSV.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .aggregation import RULES, ObjectiveWeights, Profile, solve
from .aggregation.profile import as_sequence
from .annealing import AnnealingConfig, derive_seed, make_rng
from .chords import M, distance_matrix
from .errors import LengthMismatch, SequenceTooShort
from .transitions import TransitionModel, neg_log_likelihood

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "song_id", "rule", "error_lo", "error_hi", "n_agents", "song_similarity_sum",
    "song_similarity_mean", "cluster_coherence", "musical_coherence", "wall_ms", "seed",
)
SECTION_LENGTH = 16


@dataclass(frozen=True, order=True)
class ErrorRange:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 <= self.lo < self.hi <= 4:
            raise ValueError(f"error range needs 0 <= lo < hi <= 4, got ({self.lo}, {self.hi})")

    @property
    def q_bounds(self) -> tuple[float, float]:
        return self.lo / 4, self.hi / 4

    def __str__(self):
        return f"({self.lo:g},{self.hi:g})"


DEFAULT_RANGES = tuple(ErrorRange(a, a + 1) for a in range(4))
DEFAULT_AGENT_COUNTS = (8, 16, 32)


def _replacement_table() -> np.ndarray:
    w = 1.0 - distance_matrix()
    np.fill_diagonal(w, 0.0)
    totals = w.sum(axis=1, keepdims=True)
    uniform = np.full((M, M), 1.0 / (M - 1))
    np.fill_diagonal(uniform, 0.0)
    return np.where(totals > 0, w / np.where(totals > 0, totals, 1), uniform)


_REPLACEMENT = _replacement_table()
_REPLACEMENT_CDF = np.cumsum(_REPLACEMENT, axis=1)


def perturb(song: Sequence[int], error_range: ErrorRange, rng: np.random.Generator) -> np.ndarray:
    """One agent's variation of ``song``."""
    song = as_sequence(song)
    q = rng.uniform(*error_range.q_bounds)
    mask = rng.random(len(song)) < q
    out = song.copy()
    if mask.any():
        u = rng.random(int(mask.sum()))
        cdf = _REPLACEMENT_CDF[song[mask]]
        picks = (cdf <= u[:, None] * cdf[:, -1:]).sum(axis=1)
        out[mask] = np.minimum(picks, M - 1)
    return out


def make_profile(song: Sequence[int], n: int, error_range: ErrorRange,
                 rng: np.random.Generator) -> Profile:
    return Profile(np.stack([perturb(song, error_range, rng) for _ in range(n)]))


def song_similarity(W, original) -> tuple[float, float]:
    """Summed and mean position-wise Jaccard distance to the original song (0 = identical)."""
    W, original = as_sequence(W), as_sequence(original)
    if W.shape != original.shape:
        raise LengthMismatch(f"lengths differ: {len(W)} vs {len(original)}")
    total = float(distance_matrix()[W, original].sum())
    return total, total / len(W)


def cluster_coherence(profile: Profile, W, window: int = SECTION_LENGTH) -> float:
    """Sliding-window agent distance, averaged over windows and agents.

    Sums ``d(W[t], b[i, t])`` over ``t = j .. j + window`` (``window + 1`` terms)
    for every start ``j = 1 .. k - window`` and divides by ``(k - window) n``.
    """
    W = as_sequence(W)
    k = profile.k
    if k <= window:
        raise SequenceTooShort(f"cluster coherence needs k > {window}, got k={k}")
    if len(W) != k:
        raise LengthMismatch(f"solution length {len(W)} != profile length {k}")
    d = distance_matrix()[profile.B, W[None, :]].sum(axis=0)  # per-position sum over agents
    csum = np.concatenate([[0.0], np.cumsum(d)])
    starts = np.arange(k - window)  # 0-based j
    ends = np.minimum(starts + window + 1, k)
    return float((csum[ends] - csum[starts]).sum() / ((k - window) * profile.n))


def musical_coherence(model: TransitionModel, W) -> float:
    """Geometric-mean transition probability ``exp(-G(W) / (k - 1))``; higher is smoother."""
    W = as_sequence(W)
    if len(W) < 2:
        raise SequenceTooShort("musical coherence needs at least two chords")
    return math.exp(-neg_log_likelihood(model, W) / (len(W) - 1))


@dataclass(frozen=True)
class ExperimentConfig:
    agent_counts: tuple[int, ...] = DEFAULT_AGENT_COUNTS
    error_ranges: tuple[ErrorRange, ...] = DEFAULT_RANGES
    rules: tuple[str, ...] = RULES
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    anneal: AnnealingConfig = field(default_factory=AnnealingConfig)
    seed: int = 0
    x_max: int = 2
    off_section_weight: float = 0.0
    record_timing: bool = False

    def __post_init__(self):
        if not self.agent_counts or not self.error_ranges or not self.rules:
            raise ValueError("agent counts, error ranges and rules must be non-empty")
        for rule in self.rules:
            if rule not in RULES:
                raise ValueError(f"unknown rule {rule!r}")


@dataclass(frozen=True)
class CellResult:
    song_id: int
    rule: str
    error_lo: float
    error_hi: float
    n_agents: int
    song_similarity_sum: float
    song_similarity_mean: float
    cluster_coherence: float
    musical_coherence: float
    wall_ms: float
    seed: int

    def sort_key(self):
        return (self.song_id, RULES.index(self.rule), self.error_lo, self.error_hi, self.n_agents)


@dataclass
class MetricsReport:
    cells: list[CellResult]
    failures: list[tuple[tuple, str]] = field(default_factory=list)

    def to_csv(self, path=None, scale: float = 1.0) -> str:
        """RFC-4180 CSV of all cells; ``scale`` multiplies the four metric columns for display."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(CSV_COLUMNS)
        for c in sorted(self.cells, key=CellResult.sort_key):
            writer.writerow([
                c.song_id, c.rule, repr(c.error_lo), repr(c.error_hi), c.n_agents,
                repr(c.song_similarity_sum * scale), repr(c.song_similarity_mean * scale),
                repr(c.cluster_coherence * scale), repr(c.musical_coherence * scale),
                f"{c.wall_ms:.3f}", c.seed,
            ])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def summary(self) -> dict[tuple[str, float, float, int], dict[str, float]]:
        """Per ``(rule, error_lo, error_hi, n_agents)`` means of every metric."""
        groups = defaultdict(list)
        for c in self.cells:
            groups[(c.rule, c.error_lo, c.error_hi, c.n_agents)].append(c)
        out = {}
        for key in sorted(groups, key=lambda g: (RULES.index(g[0]), g[1], g[2], g[3])):
            cells = groups[key]
            out[key] = {
                name: float(np.mean([getattr(c, name) for c in cells]))
                for name in ("song_similarity_sum", "song_similarity_mean",
                             "cluster_coherence", "musical_coherence")
            }
            out[key]["songs"] = len(cells)
        return out

    def summary_csv(self, path=None, scale: float = 1.0) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["rule", "error_lo", "error_hi", "n_agents", "songs", "song_similarity_sum",
                         "song_similarity_mean", "cluster_coherence", "musical_coherence"])
        for (rule, lo, hi, n), m in self.summary().items():
            writer.writerow([rule, repr(lo), repr(hi), n, m["songs"]] + [
                repr(m[name] * scale) for name in ("song_similarity_sum", "song_similarity_mean",
                                                   "cluster_coherence", "musical_coherence")])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _run_song(song_id: int, song: np.ndarray, config: ExperimentConfig,
              model: TransitionModel) -> tuple[list[CellResult], list]:
    cells, failures = [], []
    for n in config.agent_counts:
        for r_idx, error_range in enumerate(config.error_ranges):
            profile_seed = derive_seed(config.seed, song_id, n, r_idx)
            profile = make_profile(song, n, error_range, make_rng(profile_seed))
            for rule in config.rules:
                seed = derive_seed(config.seed, song_id, n, r_idx, RULES.index(rule) + 1)
                anneal_cfg = replace(config.anneal, seed=seed)
                key = (song_id, rule, error_range.lo, error_range.hi, n)
                start = time.perf_counter()
                try:
                    solution = solve(
                        rule, profile, config.weights, model, anneal_cfg,
                        x_max=min(config.x_max, n), off_section_weight=config.off_section_weight,
                        clustered_mode="anneal",
                    )
                    W = np.asarray(solution.W)
                    sim_sum, sim_mean = song_similarity(W, song)
                    cc = cluster_coherence(profile, W) if profile.k > SECTION_LENGTH else math.nan
                    mc = musical_coherence(model, W)
                except Exception as exc:  # noqa: BLE001 - a failed cell must not abort the run
                    logger.warning("cell %s failed: %s", key, exc)
                    failures.append((key, f"{type(exc).__name__}: {exc}"))
                    continue
                wall = (time.perf_counter() - start) * 1000 if config.record_timing else 0.0
                cells.append(CellResult(song_id, rule, error_range.lo, error_range.hi, n,
                                        sim_sum, sim_mean, cc, mc, wall, seed))
    return cells, failures


def run_experiment(config: ExperimentConfig, songs: Sequence[Sequence[int]], model: TransitionModel,
                   workers: int = 1, progress=None) -> MetricsReport:
    """Run every (song, agent count, error range, rule) cell and collect the metrics.

    ``progress`` is called with ``(songs_done, songs_total)`` after each song.
    """
    if not songs:
        raise ValueError("the simulation set is empty")
    songs = [as_sequence(s) for s in songs]
    cells, failures = [], []
    if workers <= 1:
        for i, song in enumerate(songs):
            c, f = _run_song(i, song, config, model)
            cells += c
            failures += f
            if progress:
                progress(i + 1, len(songs))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_song, i, song, config, model) for i, song in enumerate(songs)]
            for done, fut in enumerate(futures, start=1):
                c, f = fut.result()
                cells += c
                failures += f
                if progress:
                    progress(done, len(songs))
    cells.sort(key=CellResult.sort_key)
    return MetricsReport(cells, failures)


def synthetic_songs(count: int, seed: int = 0, length: int = 64, vocabulary: int = 24,
                    successors: int = 3) -> list[np.ndarray]:
    """Songs sampled from a sparse random chord chain.

    The chain uses ``vocabulary`` chords, each followed by one of
    ``successors`` preferred chords; it stands in for a real corpus in tests
    and demos.
    """
    rng = make_rng(seed)
    vocab = np.sort(rng.choice(M, size=vocabulary, replace=False))
    nexts = np.stack([rng.choice(vocabulary, size=successors, replace=False) for _ in range(vocabulary)])
    probs = rng.dirichlet(np.ones(successors), size=vocabulary)
    songs = []
    for _ in range(count):
        state = int(rng.integers(vocabulary))
        seq = [state]
        for _ in range(length - 1):
            state = int(nexts[state, rng.choice(successors, p=probs[state])])
            seq.append(state)
        songs.append(vocab[np.array(seq)])
    return songs
