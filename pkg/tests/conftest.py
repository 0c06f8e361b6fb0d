import numpy as np
import pytest

from harmonagg.aggregation import Profile
from harmonagg.chords import M, SYMBOLS, chord_id
from harmonagg.transitions import TransitionModel

DATA = __import__("pathlib").Path(__file__).parent / "data"

# toy instance: three agents, four positions
TOY_ROWS = [
    ["CMaj7", "Dm7", "G7", "CMaj7"],
    ["Am7", "Dm7", "E7", "Am7"],
    ["CMaj7", "FMaj7", "G7", "Am7"],
]
# worked satisfaction example: agent 1 differs from the toy in positions 3 and 4
SATISFACTION_ROWS = [
    ["CMaj7", "Dm7", "Db7", "CMaj7"],
    ["Am7", "Dm7", "E7", "Am7"],
    ["CMaj7", "FMaj7", "G7", "Am7"],
]
SATISFACTION_W = ["CMaj7", "Dm7", "E7", "Am7"]

# transition probabilities quoted alongside the toy example
G_FIXTURE = {("CMaj7", "Dm7"): 0.0252903, ("Dm7", "G7"): 0.199777, ("G7", "Am7"): 0.0053198}
G_EXPECTED = 10.524207


def injected_model(pairs) -> TransitionModel:
    """Uniform rows, except that each (u, v) in ``pairs`` gets the given
    probability and the rest of row u is spread evenly over the other chords."""
    probs = np.full((M, M), 1.0 / M)
    for (u, v), p in pairs.items():
        u, v = chord_id(u), chord_id(v)
        probs[u, :] = (1.0 - p) / (M - 1)
        probs[u, v] = p
    return TransitionModel(probs, alpha=0.0, trained_on="fixture")


def random_model(rng, sparsity=0.0) -> TransitionModel:
    probs = rng.random((M, M)) + 1e-3
    if sparsity:
        probs[rng.random((M, M)) < sparsity] = 0.0
        probs[np.arange(M), rng.integers(M, size=M)] += 1.0
    probs /= probs.sum(axis=1, keepdims=True)
    return TransitionModel(probs, alpha=0.0, trained_on="random")


def random_profile(rng, n, k, alphabet) -> Profile:
    return Profile(rng.choice(np.asarray(alphabet), size=(n, k)))


def write_corpus(path, songs, title="song"):
    """Write integer chord sequences as a corpus file with two chords per bar."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, s in enumerate(songs):
            bars = [" ".join(SYMBOLS[c] for c in s[j:j + 2]) for j in range(0, len(s), 2)]
            fh.write(f"{title} {i} | " + " | ".join(bars) + " |\n")
    return path


@pytest.fixture
def toy_profile():
    return Profile.from_rows(TOY_ROWS)


@pytest.fixture
def satisfaction_profile():
    return Profile.from_rows(SATISFACTION_ROWS)


@pytest.fixture
def g_model():
    return injected_model(G_FIXTURE)


# acceptance criteria report one line each; printed again in the terminal summary
ACCEPTANCE_RESULTS: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_RESULTS[number] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
