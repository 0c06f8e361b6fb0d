"""Chord corpus ingestion and the 2-gram chord transition model.

Corpus text format, one song per line::

    title | CMaj7 Am7 | Dm7 G7 | CMaj7

Each bar holds one or two chord symbols. A one-chord bar is duplicated so that
every normalised bar contributes exactly two chords. Lines starting with ``#``
and blank lines are ignored.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .chords import ALPHABET, M, SYMBOLS, alphabet_hash, chord_id, parse_chord
from .errors import (
    ChecksumError,
    CorpusFormatError,
    DegenerateRow,
    EmptyCorpus,
    UnknownChord,
    VersionMismatch,
    ZeroProbabilityTransition,
)

logger = logging.getLogger(__name__)

MODEL_VERSION = 1
DEFAULT_ALPHA = 1e-6
SIMULATION_BARS = 32


@dataclass(frozen=True)
class Song:
    title: str
    bars: tuple[tuple[int, ...], ...]

    @property
    def normalized(self) -> tuple[int, ...]:
        seq = []
        for bar in self.bars:
            seq.extend(bar if len(bar) == 2 else (bar[0], bar[0]))
        return tuple(seq)

    @property
    def symbols(self) -> list[str]:
        return [SYMBOLS[c] for c in self.normalized]


@dataclass
class Corpus:
    songs: list[Song]
    stats: dict[str, int] = field(default_factory=dict)

    def __len__(self):
        return len(self.songs)

    def fingerprint(self) -> str:
        return _fingerprint(song.normalized for song in self.songs)


def _fingerprint(sequences: Iterable[Sequence[int]]) -> str:
    h = hashlib.sha256()
    for seq in sequences:
        h.update(bytes(int(c) for c in seq))
        h.update(b"|")
    return h.hexdigest()[:16]


def parse_corpus_lines(
    lines: Iterable[str],
    policy: str = "skip",
    reductions: Mapping[str, str] | None = None,
) -> Corpus:
    """Parse corpus lines; see the module docstring for the format.

    ``policy`` is ``"skip"`` (drop songs with unknown chords) or ``"strict"``
    (raise :class:`UnknownChord`). ``reductions`` maps raw corpus symbols to
    alphabet symbols before parsing.
    """
    if policy not in ("skip", "strict"):
        raise ValueError(f"unknown policy {policy!r}")
    reductions = reductions or {}
    songs = []
    stats = {"lines": 0, "parsed": 0, "skipped_unknown": 0, "skipped_bars": 0}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        stats["lines"] += 1
        parts = [p.strip() for p in line.split("|")]
        if len(parts) < 2:
            raise CorpusFormatError("expected 'title | bar | ...'", line=lineno)
        title, raw_bars = parts[0], parts[1:]
        # a trailing '|' leaves one empty field
        if raw_bars and raw_bars[-1] == "" and len(raw_bars) > 1:
            raw_bars = raw_bars[:-1]
        if not title:
            raise CorpusFormatError("missing song title", line=lineno)

        bars = []
        bad_shape = False
        unknown = None
        for raw_bar in raw_bars:
            tokens = raw_bar.split()
            if not 1 <= len(tokens) <= 2:
                bad_shape = True
                break
            ids = []
            for tok in tokens:
                try:
                    ids.append(parse_chord(reductions.get(tok, tok)).id)
                except UnknownChord:
                    if policy == "strict":
                        raise UnknownChord(f"line {lineno}: not in the chord alphabet: {tok!r}")
                    unknown = tok
                    break
            if unknown is not None:
                break
            bars.append(tuple(ids))
        if bad_shape:
            stats["skipped_bars"] += 1
            continue
        if unknown is not None:
            stats["skipped_unknown"] += 1
            logger.debug("line %d: skipping song with unknown chord %r", lineno, unknown)
            continue
        songs.append(Song(title, tuple(bars)))
        stats["parsed"] += 1
    stats["normalized_to_64"] = sum(1 for s in songs if _is_simulation_song(s))
    return Corpus(songs, stats)


def load_corpus(path, policy: str = "skip", reductions: Mapping[str, str] | None = None) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus_lines(fh, policy=policy, reductions=reductions)


def _is_simulation_song(song: Song, bars: int = SIMULATION_BARS) -> bool:
    return len(song.bars) == bars and all(1 <= len(b) <= 2 for b in song.bars)


def filter_simulation_set(corpus: Corpus, bars: int = SIMULATION_BARS) -> Corpus:
    """Keep songs that are exactly ``bars`` long (normalised length ``2 * bars``)."""
    kept = [s for s in corpus.songs if _is_simulation_song(s, bars)]
    stats = dict(corpus.stats)
    stats["filtered"] = len(kept)
    return Corpus(kept, stats)


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """Row-stochastic chord transition probabilities, ``probs[u, v] = p(v | u)``."""

    probs: np.ndarray
    alpha: float = 0.0
    trained_on: str = ""

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.shape != (M, M):
            raise ValueError(f"transition matrix must be {M}x{M}, got {probs.shape}")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        with np.errstate(divide="ignore"):
            cost = -np.log(probs)
        cost.setflags(write=False)
        object.__setattr__(self, "cost", cost)

    def __eq__(self, other):
        if not isinstance(other, TransitionModel):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and self.trained_on == other.trained_on
            and np.array_equal(self.probs, other.probs)
        )

    __hash__ = None

    @classmethod
    def uniform(cls) -> "TransitionModel":
        return cls(np.full((M, M), 1.0 / M), trained_on="uniform")

    def neg_log_likelihood(self, W) -> float | np.ndarray:
        return neg_log_likelihood(self, W)

    def most_likely(self, chord, top: int = 5) -> list[tuple[int, float]]:
        row = self.probs[chord_id(chord)]
        order = np.lexsort((np.arange(M), -row))[:top]
        return [(int(v), float(row[v])) for v in order]


def transition_counts(corpus: Corpus | Sequence[Sequence[int]]) -> np.ndarray:
    """Count consecutive chord pairs within each song (never across songs)."""
    seqs = corpus.songs if isinstance(corpus, Corpus) else corpus
    counts = np.zeros((M, M), dtype=np.int64)
    for song in seqs:
        seq = np.asarray(song.normalized if isinstance(song, Song) else song, dtype=np.intp)
        if len(seq) >= 2:
            np.add.at(counts, (seq[:-1], seq[1:]), 1)
    return counts


def train(corpus: Corpus | Sequence[Sequence[int]], smoothing_alpha: float = DEFAULT_ALPHA,
          allow_degenerate: bool = False) -> TransitionModel:
    """Estimate ``p(v | u) = (count(u->v) + alpha) / (count(u->.) + 120 alpha)``.

    With ``alpha == 0`` a chord never followed by anything has no defined row;
    this raises :class:`DegenerateRow` unless ``allow_degenerate`` is set, in
    which case the row is left all-zero.
    """
    if smoothing_alpha < 0:
        raise ValueError("smoothing_alpha must be >= 0")
    n_songs = len(corpus.songs) if isinstance(corpus, Corpus) else len(corpus)
    if n_songs == 0:
        raise EmptyCorpus("cannot train on an empty corpus")
    counts = transition_counts(corpus).astype(np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    denom = totals + M * smoothing_alpha
    zero_rows = np.flatnonzero(denom[:, 0] == 0)
    if len(zero_rows) and not allow_degenerate:
        raise DegenerateRow(
            f"{len(zero_rows)} chords have no outgoing transitions; use alpha > 0"
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = (counts + smoothing_alpha) / denom
    probs[zero_rows] = 0.0
    if isinstance(corpus, Corpus):
        fingerprint = corpus.fingerprint()
    else:
        fingerprint = _fingerprint(corpus)
    return TransitionModel(probs, alpha=float(smoothing_alpha), trained_on=fingerprint)


def neg_log_likelihood(model: TransitionModel, W) -> float | np.ndarray:
    """``-sum(ln p(W[j] -> W[j+1]))``; a 2-D ``W`` is scored row by row."""
    W = np.asarray([chord_id(c) for c in W] if _is_symbolic(W) else W, dtype=np.intp)
    if W.shape[-1] < 1:
        raise ValueError("sequence must not be empty")
    cost = model.cost[W[..., :-1], W[..., 1:]].sum(axis=-1)
    if np.any(np.isinf(cost)):
        raise ZeroProbabilityTransition("sequence uses a transition with probability 0")
    return float(cost) if np.ndim(cost) == 0 else cost


def _is_symbolic(W) -> bool:
    return isinstance(W, (list, tuple)) and len(W) > 0 and not isinstance(W[0], (int, np.integer))


def _checksum(probs: list[list[float]], alpha: float) -> str:
    payload = json.dumps({"alpha": alpha, "probs": probs}, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def save_model(model: TransitionModel, path) -> None:
    probs = model.probs.tolist()
    alpha = model.alpha
    doc = {
        "version": MODEL_VERSION,
        "alphabet_hash": alphabet_hash(),
        "alphabet": list(SYMBOLS),
        "alpha": alpha,
        "trained_on": model.trained_on,
        "checksum": _checksum(probs, alpha),
        "probs": probs,
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_model(path) -> TransitionModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChecksumError(f"{path}: model file is corrupt or truncated ({exc})") from None
    if not isinstance(doc, dict) or "probs" not in doc:
        raise ChecksumError(f"{path}: model file is missing fields")
    if doc.get("version") != MODEL_VERSION:
        raise VersionMismatch(f"{path}: unsupported model version {doc.get('version')!r}")
    if doc.get("alphabet_hash") != alphabet_hash():
        raise VersionMismatch(f"{path}: model was built for a different chord alphabet")
    if _checksum(doc["probs"], doc.get("alpha")) != doc.get("checksum"):
        raise ChecksumError(f"{path}: checksum mismatch")
    return TransitionModel(
        np.array(doc["probs"], dtype=np.float64),
        alpha=float(doc.get("alpha", 0.0)),
        trained_on=doc.get("trained_on", ""),
    )


__all__ = [
    "ALPHABET", "Corpus", "Song", "TransitionModel", "filter_simulation_set",
    "load_corpus", "load_model", "neg_log_likelihood", "parse_corpus_lines",
    "save_model", "train", "transition_counts",
]
