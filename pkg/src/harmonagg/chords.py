"""Chord alphabet, note-set semantics and the Jaccard chord distance.

The alphabet holds 120 four-note chords: 12 roots times 10 qualities, ordered
root-major (C, Db, ..., B) and then by quality in the order of ``QUALITIES``.
A chord's integer id is its position in that order; the order is part of the
model-file contract (see :func:`alphabet_hash`).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import UnknownChord

ROOT_NAMES = ("C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B")

# Accepted on input only; output always uses ROOT_NAMES.
ROOT_SYNONYMS = {
    "C#": 1, "D#": 3, "F#": 6, "G#": 8, "A#": 10,
    "Cb": 11, "Fb": 4, "E#": 5, "B#": 0,
}

QUALITIES = {
    "Maj7": (0, 4, 7, 11),
    "m7": (0, 3, 7, 10),
    "mMaj7": (0, 3, 7, 11),
    "7": (0, 4, 7, 10),
    "dimMaj7": (0, 3, 6, 11),
    "dim7": (0, 3, 6, 9),
    "m7b5": (0, 3, 6, 10),
    "m6": (0, 3, 7, 9),
    "+7": (0, 4, 8, 10),
    "+maj7": (0, 4, 8, 11),
}
QUALITY_NAMES = tuple(QUALITIES)

_ROOT_LOOKUP = {name: pc for pc, name in enumerate(ROOT_NAMES)}
_ROOT_LOOKUP.update(ROOT_SYNONYMS)
_SUFFIX_LOOKUP = {name.lower(): name for name in QUALITY_NAMES}

M = len(ROOT_NAMES) * len(QUALITY_NAMES)


@dataclass(frozen=True, order=True)
class Chord:
    root: int
    quality: str

    def __post_init__(self):
        if not 0 <= self.root < 12:
            raise UnknownChord(f"root pitch class out of range: {self.root}")
        if self.quality not in QUALITIES:
            raise UnknownChord(f"unknown chord quality: {self.quality!r}")

    @property
    def id(self) -> int:
        return self.root * len(QUALITY_NAMES) + QUALITY_NAMES.index(self.quality)

    @property
    def notes(self) -> frozenset[int]:
        return note_set(self)

    @property
    def symbol(self) -> str:
        return format_chord(self)

    def __str__(self):
        return self.symbol


ALPHABET: tuple[Chord, ...] = tuple(
    Chord(root, quality) for root in range(12) for quality in QUALITY_NAMES
)
SYMBOLS: tuple[str, ...] = tuple(f"{ROOT_NAMES[c.root]}{c.quality}" for c in ALPHABET)


def note_set(chord: Chord) -> frozenset[int]:
    """Pitch classes sounded by ``chord``."""
    return frozenset((chord.root + i) % 12 for i in QUALITIES[chord.quality])


def format_chord(chord: Chord | int) -> str:
    if not isinstance(chord, Chord):
        chord = ALPHABET[chord]
    return f"{ROOT_NAMES[chord.root]}{chord.quality}"


def parse_chord(symbol: str) -> Chord:
    """Parse a chord symbol such as ``"CMaj7"``, ``"Gb+maj7"`` or ``"F#m7b5"``.

    Roots are case-sensitive, quality suffixes are not.
    """
    text = symbol.strip()
    for width in (2, 1):
        root = _ROOT_LOOKUP.get(text[:width])
        if root is None:
            continue
        quality = _SUFFIX_LOOKUP.get(text[width:].lower())
        if quality is not None:
            return Chord(root, quality)
    raise UnknownChord(f"not in the chord alphabet: {symbol!r}")


def chord_id(chord: Chord | str | int) -> int:
    """Normalise a chord, symbol or id to an alphabet id."""
    if isinstance(chord, Chord):
        return chord.id
    if isinstance(chord, str):
        return parse_chord(chord).id
    idx = int(chord)
    if not 0 <= idx < M:
        raise UnknownChord(f"chord id out of range: {idx}")
    return idx


def jaccard_fraction(a: Chord | str | int, b: Chord | str | int) -> Fraction:
    """Exact Jaccard distance between the note sets of two chords."""
    sa = ALPHABET[chord_id(a)].notes
    sb = ALPHABET[chord_id(b)].notes
    return 1 - Fraction(len(sa & sb), len(sa | sb))


def jaccard(a: Chord | str | int, b: Chord | str | int) -> float:
    return float(jaccard_fraction(a, b))


@lru_cache(maxsize=None)
def distance_matrix() -> np.ndarray:
    """The 120x120 Jaccard distance matrix, indexed by chord id (read-only)."""
    masks = np.zeros((M, 12), dtype=np.int64)
    for chord in ALPHABET:
        masks[chord.id, list(chord.notes)] = 1
    common = masks @ masks.T
    d = 1.0 - common / (8.0 - common)
    d.setflags(write=False)
    return d


def build_distance_matrix() -> np.ndarray:
    """Alias kept for callers that want the build step spelled out."""
    return distance_matrix()


def alphabet_hash() -> str:
    """Fingerprint of the alphabet order, stored in model files."""
    return hashlib.sha256(",".join(SYMBOLS).encode()).hexdigest()
