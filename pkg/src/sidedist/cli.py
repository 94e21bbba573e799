"""Batch command-line front end.

Every data-emitting command writes a manifest JSON next to its output; the
`replay` command re-executes a manifest and reproduces the output files
byte for byte. Errors go to standard error as `code: message`; data goes to
standard output or named files only.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from typing import Callable, Sequence

import numpy as np

from . import __version__, checks
from . import bounds as bounds_mod
from . import corpus as corpus_mod
from . import estimators, sim
from .core import (
    BallSideInfo,
    ConstructionError,
    Distribution,
    EstimatorError,
    InputError,
    PartitionSideInfo,
    RiskReport,
    SimulationError,
    ball_contains,
    read_distribution_csv,
    write_distribution_csv,
)

MANIFEST_SCHEMA = "manifest-v1"


# ---------------------------------------------------------------------------
# Small parsing and output helpers
# ---------------------------------------------------------------------------


def _parse_int_list(text: str, what: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise InputError(f"{what} must be a comma-separated integer list, got {text!r}")
    if not values:
        raise InputError(f"{what} must be nonempty")
    return values


def _parse_float_list(text: str, what: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise InputError(f"{what} must be a comma-separated number list, got {text!r}")
    if not values:
        raise InputError(f"{what} must be nonempty")
    return values


def _load_distribution_spec(spec: str) -> Distribution:
    """A distribution source: a CSV path, `uniform:D`, or `point:D`."""
    if spec.startswith("uniform:"):
        return Distribution.uniform(int(spec.split(":", 1)[1]))
    if spec.startswith("point:"):
        return Distribution.point_mass(int(spec.split(":", 1)[1]))
    return read_distribution_csv(spec)


def _read_partition_csv(path: str, d: int) -> PartitionSideInfo:
    """One low-side index per line (optional `index` header)."""
    indices = []
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                text = line.strip().split(",")[0]
                if not text or (lineno == 1 and text == "index"):
                    continue
                try:
                    indices.append(int(text))
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not indices:
        raise InputError(f"{path}: no indices found")
    return PartitionSideInfo.from_low_set(np.array(indices), d)


def _format_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, schema: str, header: Sequence[str],
               rows: Sequence[Sequence[object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# schema: {schema}\n")
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_format_cell(cell) for cell in row) + "\n")


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def _write_manifest(out_path: str, command: str, argv: Sequence[str],
                    seed: int, parameters: dict,
                    input_paths: Sequence[str] = ()) -> None:
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "artifact_version": __version__,
        "command": command,
        "argv": list(argv),
        "seed": seed,
        "parameters": parameters,
        "input_digests": {path: _sha256(path) for path in sorted(set(input_paths))},
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8", newline="") as handle:
        json.dump(manifest, handle, sort_keys=True, indent=2)
        handle.write("\n")


def _risk_rows(reports: Sequence[RiskReport],
               overlays: dict[int, dict[str, float]] | None,
               bound_names: Sequence[str]) -> list[list[object]]:
    rows: list[list[object]] = []
    for report in sorted(reports, key=lambda r: r.estimator_name):
        for point in report.grid:
            row: list[object] = [report.estimator_name, point.n,
                                 point.loss, point.stderr, point.trials]
            for name in bound_names:
                value = None
                if overlays is not None:
                    value = overlays.get(point.n, {}).get(name)
                row.append(value)
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# simulate model1
# ---------------------------------------------------------------------------


def cmd_simulate_model1(args: argparse.Namespace, argv: Sequence[str]) -> int:
    inputs: list[str] = []
    if args.corpus is not None:
        tokens = corpus_mod.read_corpus(args.corpus, case_fold=not args.no_case_fold)
        inputs.append(args.corpus)
        guesses = args.guess_context or ["large"]
        target_lex = corpus_mod.Lexicon.from_tokens(
            corpus_mod.bigram_table(tokens, args.target_context).counts.keys())
        union = target_lex
        for guess in guesses:
            union = union.union(corpus_mod.Lexicon.from_tokens(
                corpus_mod.bigram_table(tokens, guess).counts.keys()))
        truth, _ = corpus_mod.conditional_distribution(
            tokens, args.target_context, lexicon=union)
        pi0, _ = corpus_mod.pooled_conditional_distribution(
            tokens, guesses, lexicon=union)
        if args.delta is not None:
            delta = args.delta
        elif args.embeddings is not None:
            emb = corpus_mod.read_embeddings(args.embeddings)
            inputs.append(args.embeddings)
            delta = max(corpus_mod.delta_from_embeddings(emb, args.target_context, g)
                        for g in guesses)
        else:
            raise InputError("corpus mode needs --delta or --embeddings")
        info = BallSideInfo(pi0, delta)

        def sampler(n: int, seed: int) -> np.ndarray:
            window = corpus_mod.contiguous_window(tokens, args.target_context, n, seed)
            return corpus_mod.successor_samples(window, args.target_context, union)
    else:
        if args.pi0 is None:
            raise InputError("need --pi0 (or --corpus)")
        if args.delta is None:
            raise InputError("synthetic mode needs an explicit --delta")
        pi0 = _load_distribution_spec(args.pi0)
        if not args.pi0.startswith(("uniform:", "point:")):
            inputs.append(args.pi0)
        delta = args.delta
        info = BallSideInfo(pi0, delta)
        if args.pi is not None:
            truth = read_distribution_csv(args.pi)
            inputs.append(args.pi)
            if truth.d != pi0.d:
                raise InputError(f"truth has d={truth.d}, guess has d={pi0.d}")
            if not ball_contains(info, truth):
                raise InputError("--pi lies outside the side-information ball")
        else:
            # Fixed truth draw; n=0 never collides with grid trial seeds.
            truth = sim.sample_in_ball(info, sim.trial_seed(args.seed, 0, 0))
        sampler = None

    config = sim.SimConfig(master_seed=args.seed, trials=args.trials,
                           n_grid=_parse_int_list(args.n_grid, "--n-grid"))
    named: list[tuple[str, Callable]] = [
        ("empirical", estimators.empirical),
        ("add_sqrt_n_over_d", estimators.add_constant),
        ("interpolation", lambda profile: estimators.interpolation(profile, info)),
    ]
    reports = [sim.mc_risk(truth, fn, config, name=name, sampler=sampler,
                           workers=args.workers)
               for name, fn in named]
    norm = pi0.l2_norm()
    overlays = {n: {"ub_interp": bounds_mod.ub_interpolation(n, pi0.d, norm, delta).value}
                for n in config.n_grid}

    _write_csv(args.out, "riskreport-v1",
               ["estimator", "n", "loss", "stderr", "trials", "ub_interp"],
               _risk_rows(reports, overlays, ["ub_interp"]))
    _write_manifest(args.out, "simulate model1", argv, args.seed, {
        "delta": delta,
        "center_norm": norm,
        "d": pi0.d,
        "n_grid": list(config.n_grid),
        "trials": args.trials,
        "workers": args.workers,
        "mode": "corpus" if args.corpus else "synthetic",
    }, inputs)
    return 0


# ---------------------------------------------------------------------------
# simulate model2
# ---------------------------------------------------------------------------


def cmd_simulate_model2(args: argparse.Namespace, argv: Sequence[str]) -> int:
    inputs: list[str] = []
    sampler = None
    if args.corpus is not None:
        tokens = corpus_mod.read_corpus(args.corpus, case_fold=not args.no_case_fold)
        inputs.append(args.corpus)
        truth, lexicon = corpus_mod.unigram_distribution(tokens)

        def sampler(n: int, seed: int) -> np.ndarray:
            return lexicon.encode(corpus_mod.token_window(tokens, n, seed))
    elif args.synthetic_d is not None:
        truth = sim.two_level_synthetic(args.synthetic_d)
    else:
        raise InputError("need --synthetic-d or --corpus")

    if args.partition is not None:
        part = _read_partition_csv(args.partition, truth.d)
        inputs.append(args.partition)
    elif args.threshold is not None:
        part = corpus_mod.threshold_partition(truth, args.threshold)
    elif args.synthetic_d is not None:
        part = sim.two_level_partition(args.synthetic_d)
    else:
        raise InputError("need --partition or --threshold")

    config = sim.SimConfig(master_seed=args.seed, trials=args.trials,
                           n_grid=_parse_int_list(args.n_grid, "--n-grid"),
                           loss_kind="level",
                           levels=_parse_int_list(args.levels, "--levels"))
    comparison = sim.compare_level_estimators(truth, part, config,
                                              sampler=sampler, workers=args.workers)

    header = ["level", "n", "trials",
              "one_level_loss", "one_level_stderr",
              "two_level_loss", "two_level_stderr",
              "oracle_one_loss", "oracle_two_loss",
              "mean_gain", "mean_one_est_err",
              "mean_two_est_err_low", "mean_two_est_err_high", "mean_regret"]
    rows = [[c.level, c.n, c.trials, c.one_loss, c.one_stderr, c.two_loss,
             c.two_stderr, c.oracle_one_loss, c.oracle_two_loss, c.mean_gain,
             c.mean_one_est_err, c.mean_two_est_err_low, c.mean_two_est_err_high,
             c.mean_regret]
            for c in sorted(comparison, key=lambda c: (c.level, c.n))]
    _write_csv(args.out, "model2-v1", header, rows)
    _write_manifest(args.out, "simulate model2", argv, args.seed, {
        "d": truth.d,
        "low_set_size": int(part.low_set.size),
        "levels": list(config.levels),
        "n_grid": list(config.n_grid),
        "trials": args.trials,
        "workers": args.workers,
        "mode": "corpus" if args.corpus else "synthetic",
    }, inputs)
    return 0


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def cmd_bounds(args: argparse.Namespace, argv: Sequence[str]) -> int:
    inputs: list[str] = []
    ns = _parse_int_list(args.n_grid, "--n-grid")
    deltas = _parse_float_list(args.delta_grid, "--delta-grid")
    if args.pi0 is not None:
        pi0 = _load_distribution_spec(args.pi0)
        if not args.pi0.startswith(("uniform:", "point:")):
            inputs.append(args.pi0)
        combos = [(pi0.d, pi0.l2_norm())]
    else:
        if args.d_grid is None or args.norm_grid is None:
            raise InputError("need --pi0, or both --d-grid and --norm-grid")
        ds = _parse_int_list(args.d_grid, "--d-grid")
        norms = _parse_float_list(args.norm_grid, "--norm-grid")
        combos = [(d, norm) for d in ds for norm in norms]

    for n in ns:
        if n < 1:
            raise InputError(f"sample sizes must be positive, got {n}")
    for delta in deltas:
        if not 0.0 < delta <= 1.0:
            raise InputError(f"radii must be in (0, 1], got {delta!r}")
    for d, norm in combos:
        if d < 2:
            raise InputError(f"alphabet sizes must be at least 2, got {d}")
        if not 0.0 <= norm <= 1.0 + 1e-12:
            raise InputError(f"center norms must be in [0, 1], got {norm!r}")

    rows = []
    for n in ns:
        for d, norm in combos:
            for delta in deltas:
                feasible_norm = norm >= 1.0 / math.sqrt(d) - 1e-12
                ub = (bounds_mod.ub_interpolation(n, d, norm, delta).value
                      if feasible_norm else None)
                lecam = bounds_mod.lb_lecam(n, delta).value
                # The uniform-center bound applies only when the center is
                # actually uniform.
                uniform_center = abs(norm - 1.0 / math.sqrt(d)) <= 1e-9
                uniform = (bounds_mod.lb_uniform(n, d, delta).value
                           if uniform_center and n >= d and d % 2 == 0 else None)
                general = bounds_mod.lb_general(n, d, norm, delta).value
                rows.append([n, d, delta, norm, ub, lecam, uniform, general])

    _write_csv(args.out, "bounds-v1",
               ["n", "d", "delta", "center_norm",
                "ub_interp", "lb_lecam", "lb_uniform", "lb_general"],
               rows)
    _write_manifest(args.out, "bounds", argv, 0, {
        "n_grid": list(ns),
        "delta_grid": list(deltas),
        "combos": [[d, norm] for d, norm in combos],
    }, inputs)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace, argv: Sequence[str]) -> int:
    results = checks.run_checks(seed=args.seed)
    header = ["check", "statistic", "tolerance", "status"]
    rows = [[r.name, r.statistic, r.tolerance, "pass" if r.passed else "FAIL"]
            for r in results]
    for r in results:
        print(f"{'pass' if r.passed else 'FAIL'}  {r.name}  "
              f"statistic={r.statistic:.3e}  tolerance={r.tolerance:.1e}",
              file=sys.stderr)
    if args.out is not None:
        _write_csv(args.out, "verify-v1", header, rows)
        _write_manifest(args.out, "verify", argv, args.seed, {})
    else:
        sys.stdout.write(f"# schema: verify-v1\n{','.join(header)}\n")
        for row in rows:
            sys.stdout.write(",".join(_format_cell(c) for c in row) + "\n")
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# corpus subcommands
# ---------------------------------------------------------------------------


def cmd_corpus_bigram(args: argparse.Namespace, argv: Sequence[str]) -> int:
    tokens = corpus_mod.read_corpus(args.corpus, case_fold=not args.no_case_fold)
    dist, lexicon = corpus_mod.conditional_distribution(tokens, args.context)
    write_distribution_csv(dist, args.out)
    lex_out = args.lexicon_out or args.out + ".lexicon.csv"
    corpus_mod.write_lexicon_csv(lexicon, lex_out)
    _write_manifest(args.out, "corpus bigram", argv, 0,
                    {"context": args.context, "d": dist.d,
                     "lexicon_out": lex_out}, [args.corpus])
    return 0


def cmd_corpus_unigram(args: argparse.Namespace, argv: Sequence[str]) -> int:
    tokens = corpus_mod.read_corpus(args.corpus, case_fold=not args.no_case_fold)
    dist, lexicon = corpus_mod.unigram_distribution(tokens)
    write_distribution_csv(dist, args.out)
    lex_out = args.lexicon_out or args.out + ".lexicon.csv"
    corpus_mod.write_lexicon_csv(lexicon, lex_out)
    _write_manifest(args.out, "corpus unigram", argv, 0,
                    {"d": dist.d, "lexicon_out": lex_out}, [args.corpus])
    return 0


def cmd_corpus_delta(args: argparse.Namespace, argv: Sequence[str]) -> int:
    emb = corpus_mod.read_embeddings(args.embeddings)
    delta = corpus_mod.delta_from_embeddings(emb, args.w1, args.w2)
    _write_csv(args.out, "delta-v1", ["w1", "w2", "delta"],
               [[args.w1, args.w2, delta]])
    _write_manifest(args.out, "corpus delta", argv, 0,
                    {"w1": args.w1, "w2": args.w2, "delta": delta},
                    [args.embeddings])
    return 0


def cmd_corpus_window(args: argparse.Namespace, argv: Sequence[str]) -> int:
    tokens = corpus_mod.read_corpus(args.corpus, case_fold=not args.no_case_fold)
    window = corpus_mod.contiguous_window(tokens, args.context,
                                          args.occurrences, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        for token in window:
            handle.write(token + "\n")
    _write_manifest(args.out, "corpus window", argv, args.seed,
                    {"context": args.context, "occurrences": args.occurrences,
                     "window_tokens": len(window)}, [args.corpus])
    return 0


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def cmd_replay(args: argparse.Namespace, argv: Sequence[str]) -> int:
    try:
        with open(args.manifest, "r", encoding="utf-8") as handle:
            manifest = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest {args.manifest}: {exc}") from exc
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise InputError(f"unsupported manifest schema {manifest.get('schema')!r}")
    stored = manifest.get("argv")
    if not isinstance(stored, list) or not stored or stored[0] == "replay":
        raise InputError("manifest does not carry a replayable command line")
    return main([str(part) for part in stored])


# ---------------------------------------------------------------------------
# Argument parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sidedist",
        description="Distribution estimation with side information: "
                    "simulations, bound evaluation, and corpus tooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Monte Carlo experiments")
    sim_sub = simulate.add_subparsers(dest="model", required=True)

    m1 = sim_sub.add_parser("model1", help="ball side information: empirical vs "
                                           "smoothed vs interpolation")
    m1.add_argument("--pi0", help="guess distribution: CSV file, uniform:D, or point:D")
    m1.add_argument("--pi", help="true distribution CSV (default: seeded ball draw)")
    m1.add_argument("--delta", type=float, help="ball radius in (0, 1]")
    m1.add_argument("--corpus", help="corpus mode: plain-text file")
    m1.add_argument("--target-context", default="big",
                    help="corpus mode: word whose successors are estimated")
    m1.add_argument("--guess-context", action="append",
                    help="corpus mode: guess word(s); repeatable; default large")
    m1.add_argument("--embeddings",
                    help="corpus mode: embeddings file; radius = max over guess "
                         "words of 1 - positive cosine similarity to the target")
    m1.add_argument("--no-case-fold", action="store_true")
    m1.add_argument("--n-grid", default="10,100,1000")
    m1.add_argument("--trials", type=int, default=10)
    m1.add_argument("--seed", type=int, default=0)
    m1.add_argument("--workers", type=int, default=1)
    m1.add_argument("--out", required=True)
    m1.set_defaults(func=cmd_simulate_model1)

    m2 = sim_sub.add_parser("model2", help="partition side information: one-level "
                                           "vs two-level Good-Turing")
    m2.add_argument("--synthetic-d", type=int,
                    help="two-valued synthetic distribution of this size")
    m2.add_argument("--corpus", help="corpus mode: unigram target from this file")
    m2.add_argument("--partition", help="CSV of low-side indices")
    m2.add_argument("--threshold", type=float,
                    help="low side = symbols with probability <= threshold")
    m2.add_argument("--no-case-fold", action="store_true")
    m2.add_argument("--levels", default="0,1")
    m2.add_argument("--n-grid", default="500,1000,2000,4000")
    m2.add_argument("--trials", type=int, default=100)
    m2.add_argument("--seed", type=int, default=0)
    m2.add_argument("--workers", type=int, default=1)
    m2.add_argument("--out", required=True)
    m2.set_defaults(func=cmd_simulate_model2)

    b = sub.add_parser("bounds", help="evaluate bound formulas over a grid")
    b.add_argument("--n-grid", required=True)
    b.add_argument("--delta-grid", required=True)
    b.add_argument("--d-grid")
    b.add_argument("--norm-grid")
    b.add_argument("--pi0", help="take d and the center norm from this distribution")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("verify", help="run the numeric validity suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("corpus", help="corpus preparation utilities")
    c_sub = c.add_subparsers(dest="subcommand", required=True)

    cb = c_sub.add_parser("bigram", help="next-token distribution for a context")
    cb.add_argument("--corpus", required=True)
    cb.add_argument("--context", required=True)
    cb.add_argument("--no-case-fold", action="store_true")
    cb.add_argument("--lexicon-out")
    cb.add_argument("--out", required=True)
    cb.set_defaults(func=cmd_corpus_bigram)

    cu = c_sub.add_parser("unigram", help="token distribution of the corpus")
    cu.add_argument("--corpus", required=True)
    cu.add_argument("--no-case-fold", action="store_true")
    cu.add_argument("--lexicon-out")
    cu.add_argument("--out", required=True)
    cu.set_defaults(func=cmd_corpus_unigram)

    cd = c_sub.add_parser("delta", help="ball radius from embedding similarity")
    cd.add_argument("--embeddings", required=True)
    cd.add_argument("--w1", required=True)
    cd.add_argument("--w2", required=True)
    cd.add_argument("--out", required=True)
    cd.set_defaults(func=cmd_corpus_delta)

    cw = c_sub.add_parser("window", help="contiguous window around context occurrences")
    cw.add_argument("--corpus", required=True)
    cw.add_argument("--context", required=True)
    cw.add_argument("--occurrences", type=int, required=True)
    cw.add_argument("--no-case-fold", action="store_true")
    cw.add_argument("--seed", type=int, default=0)
    cw.add_argument("--out", required=True)
    cw.set_defaults(func=cmd_corpus_window)

    r = sub.add_parser("replay", help="re-run a manifest, reproducing its outputs")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_replay)

    return parser


_ERROR_CODES: tuple[tuple[type, str], ...] = (
    (InputError, "input"),
    (EstimatorError, "estimator"),
    (ConstructionError, "construction"),
    (SimulationError, "simulation"),
    (OSError, "io"),
)


def main(argv: Sequence[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    argv = list(argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except Exception as exc:  # noqa: BLE001 - single reporting point
        for exc_type, code in _ERROR_CODES:
            if isinstance(exc, exc_type):
                print(f"{code}: {exc}", file=sys.stderr)
                return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
