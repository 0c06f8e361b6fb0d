"""Aggregation of several agents' chord-sequence suggestions into one harmonization."""

from .chords import ALPHABET, Chord, distance_matrix, format_chord, jaccard, note_set, parse_chord
from .transitions import TransitionModel, load_corpus, load_model, save_model, train

__version__ = "0.1.0"
