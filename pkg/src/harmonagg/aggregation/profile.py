"""Instances and solutions of the chord-sequence aggregation problem."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..chords import M, SYMBOLS, chord_id
from ..errors import InvalidPartition, ProfileFormatError, UnassignedAgent, UnknownChord

X_PLURALITY = 0.5
X_KEMENY = 0.9
X_PAV = 1 - 2e-4
X_CLUSTERED = 0.9


def as_sequence(W) -> np.ndarray:
    """Coerce a Solution, chord symbols or ids into an int array of chord ids."""
    if isinstance(W, Solution):
        return np.asarray(W.W, dtype=np.intp)
    if isinstance(W, np.ndarray):
        return W.astype(np.intp, copy=False)
    return np.asarray([chord_id(c) for c in W], dtype=np.intp)


@dataclass(frozen=True, eq=False)
class Profile:
    """The ``n x k`` matrix of agents' chord choices; ``B[i, j]`` is agent i at position j."""

    B: np.ndarray

    def __post_init__(self):
        B = np.array(self.B, dtype=np.intp)
        if B.ndim != 2 or B.shape[0] < 1 or B.shape[1] < 1:
            raise ValueError(f"profile must be a non-empty n x k matrix, got shape {B.shape}")
        if B.min() < 0 or B.max() >= M:
            raise UnknownChord("profile contains chord ids outside the alphabet")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence]) -> "Profile":
        """Build from rows of chord symbols, Chords or ids."""
        rows = [list(as_sequence(r)) for r in rows]
        lengths = {len(r) for r in rows}
        if len(lengths) > 1:
            raise ValueError(f"agent rows have different lengths: {sorted(lengths)}")
        return cls(np.array(rows, dtype=np.intp))

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def k(self) -> int:
        return self.B.shape[1]

    def row_symbols(self, i: int) -> list[str]:
        return [SYMBOLS[c] for c in self.B[i]]

    def __eq__(self, other):
        if not isinstance(other, Profile):
            return NotImplemented
        return np.array_equal(self.B, other.B)

    __hash__ = None


@dataclass
class Solution:
    W: tuple[int, ...]
    scores: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.W = tuple(int(c) for c in as_sequence(self.W))

    @property
    def k(self) -> int:
        return len(self.W)

    @property
    def symbols(self) -> list[str]:
        return [SYMBOLS[c] for c in self.W]

    def __str__(self):
        return " ".join(self.symbols)


@dataclass(frozen=True)
class ObjectiveWeights:
    """Mixing weights between agent agreement and the 2-gram term."""

    x_M: float = X_PLURALITY
    x_K: float = X_KEMENY
    x_P: float = X_PAV
    x_KC: float = X_CLUSTERED

    def __post_init__(self):
        for name in ("x_M", "x_K", "x_P", "x_KC"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class SectionPartition:
    """Contiguous sections of positions ``0..k-1``, given by their 0-based start indices."""

    starts: tuple[int, ...]
    k: int
    x_max: int | None = None

    def __post_init__(self):
        starts = tuple(int(s) for s in self.starts)
        object.__setattr__(self, "starts", starts)
        if not starts or starts[0] != 0:
            raise InvalidPartition("the first section must start at position 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise InvalidPartition(f"section starts must be strictly increasing: {starts}")
        if starts[-1] >= self.k:
            raise InvalidPartition(f"section start {starts[-1]} is beyond k={self.k}")
        if self.x_max is not None and len(starts) > self.x_max:
            raise InvalidPartition(f"{len(starts)} sections exceed x_max={self.x_max}")

    @classmethod
    def even(cls, k: int, sections: int) -> "SectionPartition":
        sizes = [len(a) for a in np.array_split(np.arange(k), min(sections, k))]
        return cls(tuple(np.cumsum([0] + sizes[:-1])), k)

    @property
    def n_sections(self) -> int:
        return len(self.starts)

    def sections(self) -> list[range]:
        ends = self.starts[1:] + (self.k,)
        return [range(a, b) for a, b in zip(self.starts, ends)]

    def position_sections(self) -> np.ndarray:
        """Section index of every position."""
        return np.searchsorted(np.asarray(self.starts), np.arange(self.k), side="right") - 1


@dataclass(frozen=True)
class ClusterAssignment:
    section_of: tuple[int, ...]
    off_section_weight: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "section_of", tuple(int(z) for z in self.section_of))
        if not 0.0 <= self.off_section_weight <= 1.0:
            raise ValueError("off_section_weight must lie in [0, 1]")

    def validate(self, n: int, partition: SectionPartition) -> None:
        if len(self.section_of) != n:
            raise UnassignedAgent(f"{len(self.section_of)} assignments for {n} agents")
        bad = [i for i, z in enumerate(self.section_of) if not 0 <= z < partition.n_sections]
        if bad:
            raise UnassignedAgent(f"agents {bad} are not assigned to a valid section")

    def weights(self, partition: SectionPartition) -> np.ndarray:
        """``q[i, j]``: 1 where agent i's section covers position j, else the off-section weight."""
        zpos = partition.position_sections()
        asg = np.asarray(self.section_of)
        return np.where(asg[:, None] == zpos[None, :], 1.0, self.off_section_weight)


_HEADER = re.compile(r"^\s*k\s*=\s*(\d+)\s+n\s*=\s*(\d+)\s*$|^\s*n\s*=\s*(\d+)\s+k\s*=\s*(\d+)\s*$")


def parse_profile(lines: Iterable[str]) -> Profile:
    """Read the profile text format: a ``k=<int> n=<int>`` header, then n rows of k chords."""
    header = None
    rows = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            match = _HEADER.match(line)
            if not match:
                raise ProfileFormatError("expected header 'k=<int> n=<int>'", line=lineno)
            g = match.groups()
            header = (int(g[0]), int(g[1])) if g[0] is not None else (int(g[3]), int(g[2]))
            continue
        tokens = line.split()
        if len(tokens) != header[0]:
            raise ProfileFormatError(f"expected {header[0]} chords, found {len(tokens)}", line=lineno)
        try:
            rows.append([chord_id(t) for t in tokens])
        except UnknownChord as exc:
            raise ProfileFormatError(str(exc), line=lineno) from None
    if header is None:
        raise ProfileFormatError("empty profile")
    k, n = header
    if k < 1 or n < 1:
        raise ProfileFormatError("k and n must be positive")
    if len(rows) != n:
        raise ProfileFormatError(f"header declares n={n} agents but {len(rows)} rows follow")
    return Profile(np.array(rows, dtype=np.intp))


def load_profile(path) -> Profile:
    with open(path, encoding="utf-8") as fh:
        return parse_profile(fh)


def format_profile(profile: Profile) -> str:
    lines = [f"k={profile.k} n={profile.n}"]
    lines += [" ".join(profile.row_symbols(i)) for i in range(profile.n)]
    return "\n".join(lines) + "\n"


def save_profile(profile: Profile, path) -> None:
    Path(path).write_text(format_profile(profile), encoding="utf-8")
