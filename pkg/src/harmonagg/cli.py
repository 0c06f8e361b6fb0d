"""Command-line interface: ``harmonagg {train,aggregate,simulate,distance,inspect-model}``.

Exit codes: 0 success, 1 usage or environment problem, 2 malformed input data.
Every subcommand accepts ``--config FILE``, a JSON object whose keys mirror the
long flag names (dashes or underscores); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .aggregation import (
    RULES,
    TWO_GRAM_RULES,
    AnnealingConfig,
    ObjectiveWeights,
    evaluate,
    load_profile,
    solve,
    solve_clustered_kemeny,
)
from .aggregation.profile import X_CLUSTERED, X_KEMENY, X_PAV, X_PLURALITY
from .chords import SYMBOLS, chord_id, jaccard
from .errors import (
    ChecksumError,
    CorpusFormatError,
    DegenerateRow,
    EmptyCorpus,
    HarmonaggError,
    ProfileFormatError,
    UnknownChord,
    VersionMismatch,
)
from .simulation import ErrorRange, ExperimentConfig, run_experiment
from .transitions import DEFAULT_ALPHA, filter_simulation_set, load_corpus, load_model, save_model, train

logger = logging.getLogger("harmonagg")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(t) for t in str(text).split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _error_range(text) -> ErrorRange:
    try:
        lo, hi = (float(t) for t in str(text).split(","))
        return ErrorRange(lo, hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad error range {text!r}: expected 'lo,hi' ({exc})") from None


def _add_weights(p):
    p.add_argument("--x-m", type=float, default=X_PLURALITY, help="plurality weight in plurality2")
    p.add_argument("--x-k", type=float, default=X_KEMENY, help="Kemeny weight in kemeny2")
    p.add_argument("--x-p", type=float, default=X_PAV, help="PAV weight in pav2")
    p.add_argument("--x-kc", type=float, default=X_CLUSTERED, help="Clustered-Kemeny weight in clustered2")


def _add_anneal(p):
    p.add_argument("--seed", type=int, default=0, help="root random seed")
    p.add_argument("--iterations", type=int, default=1000, help="annealing iterations")
    p.add_argument("--t-initial", type=float, default=1.0, help="initial annealing temperature")
    p.add_argument("--cooling", type=float, default=0.995, help="geometric cooling factor")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="harmonagg", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a 2-gram transition model from a chord corpus")
    p.add_argument("corpus", help="corpus text file")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="additive smoothing")
    p.add_argument("--out", required=True, help="model JSON to write")
    p.add_argument("--policy", choices=("skip", "strict"), default="skip", help="unknown-chord policy")
    p.add_argument("--reductions", help="JSON map of corpus symbols to alphabet symbols")
    p.add_argument("--simulation-set-only", action="store_true",
                   help="train only on 32-bar songs instead of every parseable song")
    p.add_argument("--config", help="JSON file with defaults for these flags")

    p = sub.add_parser("aggregate", help="aggregate one profile with one rule")
    p.add_argument("--profile", required=True, help="profile file ('k=.. n=..' header + n rows)")
    p.add_argument("--rule", required=True, choices=RULES)
    p.add_argument("--model", help="model JSON (required for 2-gram rules)")
    _add_weights(p)
    _add_anneal(p)
    p.add_argument("--x-max", type=int, default=3, help="maximum Clustered-Kemeny sections")
    p.add_argument("--off-weight", type=float, default=0.0,
                   help="Clustered-Kemeny weight of positions outside an agent's section")
    p.add_argument("--mode", choices=("auto", "exact", "anneal"), default="auto",
                   help="Clustered-Kemeny search mode")
    p.add_argument("--config", help="JSON file with defaults for these flags")

    p = sub.add_parser("simulate", help="run the perturbation experiment and write a CSV")
    p.add_argument("--corpus", required=True, help="corpus text file")
    p.add_argument("--model", help="model JSON (default: train on the corpus)")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="smoothing when training on the fly")
    p.add_argument("--agents", type=_csv_list(int), nargs="+", default=[[8, 16, 32]],
                   help="agent counts, e.g. 8 16 32 or 8,16,32")
    p.add_argument("--ranges", type=_error_range, nargs="+",
                   default=[ErrorRange(a, a + 1) for a in range(4)],
                   help="error ranges as lo,hi pairs, e.g. 0,1 1,2")
    p.add_argument("--rules", type=_csv_list(str), nargs="+", default=[list(RULES)],
                   help="rules to run (default: all eight)")
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--summary", help="also write per-cell averages to this CSV")
    p.add_argument("--scale", type=float, default=1.0, help="display multiplier for metric columns")
    p.add_argument("--songs", type=int, help="use at most this many songs")
    p.add_argument("--x-max", type=int, default=2, help="maximum Clustered-Kemeny sections")
    p.add_argument("--off-weight", type=float, default=0.0)
    p.add_argument("--workers", type=int, help="worker processes (capped by HARMONAGG_THREADS)")
    p.add_argument("--record-timing", action="store_true",
                   help="fill wall_ms (otherwise 0 so reruns are byte-identical)")
    _add_weights(p)
    _add_anneal(p)
    p.add_argument("--config", help="JSON file with defaults for these flags")

    p = sub.add_parser("distance", help="Jaccard distance between two chords")
    p.add_argument("chord_a")
    p.add_argument("chord_b")

    p = sub.add_parser("inspect-model", help="most probable transitions of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--top", type=int, default=5)
    p.add_argument("chords", nargs="*", help="chords to inspect (default: all)")
    return parser


def _apply_config_file(parser, argv, args):
    """Re-parse with defaults taken from ``args.config`` so explicit flags still win."""
    path = getattr(args, "config", None)
    if not path:
        return args
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    subparser = _subparser(parser, args.command)
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise UsageError(f"unknown key {key!r} in config file {path}")
        defaults[dest] = _convert(actions[dest], value, key)
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _convert(action, value, key):
    """Run a JSON config value through the flag's own argparse type."""
    def one(v):
        if action.type is None:
            return v
        if isinstance(v, (list, tuple)):
            v = ",".join(str(x) for x in v)
        try:
            return action.type(str(v)) if not isinstance(v, bool) else v
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
    if action.nargs in ("+", "*"):
        return [one(v) for v in (value if isinstance(value, list) else [value])]
    return one(value)


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _flatten(values):
    out = []
    for v in values:
        out.extend(v if isinstance(v, (list, tuple)) else [v])
    return out


def _log_config(args):
    resolved = {k: (str(v) if isinstance(v, ErrorRange) else v) for k, v in vars(args).items()}
    if "ranges" in resolved:
        resolved["ranges"] = [str(r) for r in args.ranges]
    logger.info("resolved config: %s", json.dumps(resolved, default=str, sort_keys=True))


def _weights(args) -> ObjectiveWeights:
    return ObjectiveWeights(args.x_m, args.x_k, args.x_p, args.x_kc)


def _anneal_config(args) -> AnnealingConfig:
    return AnnealingConfig(args.iterations, args.t_initial, args.cooling, args.seed)


def _load_reductions(path):
    if not path:
        return None
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise UsageError("reductions file must hold a JSON object")
    return data


def cmd_train(args) -> int:
    if not Path(args.corpus).is_file():
        print(f"error: corpus file not found: {args.corpus}", file=sys.stderr)
        return EXIT_USAGE
    try:
        corpus = load_corpus(args.corpus, args.policy, _load_reductions(args.reductions))
    except (CorpusFormatError, UnknownChord) as exc:
        print(f"error: {args.corpus}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sim = filter_simulation_set(corpus)
    stats = dict(sim.stats)
    print("corpus: " + " ".join(f"{k}={v}" for k, v in stats.items()))
    training = sim if args.simulation_set_only else corpus
    try:
        model = train(training, args.alpha, allow_degenerate=True)
    except EmptyCorpus as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    zero_rows = int((model.probs.sum(axis=1) == 0).sum())
    if zero_rows:
        print(f"warning: {zero_rows} chords have no outgoing transitions (alpha=0); "
              "their rows are all zero and the model cannot score sequences through them",
              file=sys.stderr)
    save_model(model, args.out)
    print(f"model written to {args.out} (alpha={args.alpha}, songs={len(training)})")
    return EXIT_OK


def _load_model_or_fail(path):
    try:
        return load_model(path)
    except FileNotFoundError:
        raise UsageError(f"model file not found: {path}") from None
    except (VersionMismatch, ChecksumError) as exc:
        raise UsageError(str(exc)) from None


def _fmt(value) -> str:
    if isinstance(value, int):
        return str(value)
    return f"{value:.6f}"


def cmd_aggregate(args) -> int:
    if args.rule in TWO_GRAM_RULES and not args.model:
        print(f"error: rule {args.rule} needs --model", file=sys.stderr)
        return EXIT_USAGE
    try:
        profile = load_profile(args.profile)
    except FileNotFoundError:
        print(f"error: profile file not found: {args.profile}", file=sys.stderr)
        return EXIT_USAGE
    except ProfileFormatError as exc:
        print(f"error: {args.profile}: {exc}", file=sys.stderr)
        return EXIT_DATA
    model = _load_model_or_fail(args.model) if args.model else None
    weights = _weights(args)
    config = _anneal_config(args)

    partition = assignment = None
    if args.rule in ("clustered", "clustered2"):
        solution, partition, assignment = solve_clustered_kemeny(
            profile, min(args.x_max, profile.n), args.off_weight, args.mode, weights,
            model if args.rule == "clustered2" else None, config,
        )
    else:
        solution = solve(args.rule, profile, weights, model, config)

    print(" ".join(solution.symbols))
    scores = evaluate(profile, solution.W, model, weights)
    if partition is not None:
        scores.update({k: v for k, v in solution.scores.items() if k.startswith("clustered")})
    for name, value in scores.items():
        print(f"{name} {_fmt(value)}")
    for i in range(profile.n):
        sat = sum(jaccard(a, b) for a, b in zip(profile.B[i], solution.W))
        print(f"satisfaction[{i + 1}] {_fmt(sat)}")
        print(f"similarity[{i + 1}] {_fmt(profile.k - sat)}  # k - satisfaction, a readability aid, not a rule objective")
    if partition is not None:
        sections = " ".join(f"[{s.start + 1}-{s.stop}]" for s in partition.sections())
        print(f"sections {sections}")
        print("assignment " + " ".join(str(z + 1) for z in assignment.section_of))
    return EXIT_OK


def _threads(requested):
    env = os.environ.get("HARMONAGG_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    want = requested if requested is not None else cap
    return max(1, min(want, cap))


def cmd_simulate(args) -> int:
    if not Path(args.corpus).is_file():
        print(f"error: corpus file not found: {args.corpus}", file=sys.stderr)
        return EXIT_USAGE
    try:
        corpus = load_corpus(args.corpus)
    except CorpusFormatError as exc:
        print(f"error: {args.corpus}: {exc}", file=sys.stderr)
        return EXIT_DATA
    sim = filter_simulation_set(corpus)
    if not sim.songs:
        stats = " ".join(f"{k}={v}" for k, v in sim.stats.items())
        print(f"error: no 32-bar songs left after filtering ({stats})", file=sys.stderr)
        return EXIT_USAGE
    if args.model:
        model = _load_model_or_fail(args.model)
    else:
        model = train(corpus, args.alpha)

    rules = tuple(_flatten(args.rules))
    for rule in rules:
        if rule not in RULES:
            raise UsageError(f"unknown rule {rule!r}")
    config = ExperimentConfig(
        agent_counts=tuple(_flatten(args.agents)),
        error_ranges=tuple(args.ranges),
        rules=rules,
        weights=_weights(args),
        anneal=_anneal_config(args),
        seed=args.seed,
        x_max=args.x_max,
        off_section_weight=args.off_weight,
        record_timing=args.record_timing,
    )
    songs = [s.normalized for s in sim.songs]
    if args.songs is not None:
        songs = songs[: args.songs]

    def progress(done, total):
        print(f"song {done}/{total} done", file=sys.stderr)

    report = run_experiment(config, songs, model, workers=_threads(args.workers), progress=progress)
    report.to_csv(args.out, scale=args.scale)
    if args.summary:
        report.summary_csv(args.summary, scale=args.scale)
    for key, reason in report.failures:
        print(f"warning: cell {key} failed: {reason}", file=sys.stderr)
    print(f"{len(report.cells)} cells written to {args.out}")
    return EXIT_OK


def cmd_distance(args) -> int:
    print(f"{jaccard(args.chord_a, args.chord_b):.6f}")
    return EXIT_OK


def cmd_inspect_model(args) -> int:
    model = _load_model_or_fail(args.model)
    chords = [chord_id(c) for c in args.chords] or range(len(SYMBOLS))
    for c in chords:
        row = ", ".join(f"{SYMBOLS[v]} {p:.6f}" for v, p in model.most_likely(c, args.top))
        print(f"{SYMBOLS[c]} -> {row}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "aggregate": cmd_aggregate,
    "simulate": cmd_simulate,
    "distance": cmd_distance,
    "inspect-model": cmd_inspect_model,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args = _apply_config_file(parser, argv, args)
        _log_config(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownChord as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateRow, HarmonaggError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
