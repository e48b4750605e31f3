#!/usr/bin/env python3

"""usage: evodata { run | rank | distribute | payoff | fit | strategies }

  evodata run --input <csv> [--schema <file>] --strategy <name> -o <output>

  evodata rank { genes | organisms } --input <csv> --strategy <name>

  evodata distribute --input <csv> --strategy <name>

  evodata payoff --input <csv> --strategy <name>

  evodata fit --train <csv> <targets csv> [--train ...] -o <output>

  evodata strategies

Exit status: 0 converged, 2 no convergence, 1 error.

"""


import argparse
import csv
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

import evodata
from evodata import analysis, engine, fs
from evodata.dataset import DEFAULT_NORM, DEFAULT_PAIRING, NORMS, PAIRINGS
from evodata.exceptions import (ConfigurationError, DimensionError,
                                EvoDataError, NotConvergedError,
                                TableParseError)
from evodata.strategies import StrategyMix
from evodata.tables import FITNESS_FUNCTIONS, STRATEGIES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


@dataclass(frozen=True)
class RunManifest:
    input: Path
    schema: Path
    strategy: str = "dombal"
    mix: StrategyMix | None = None
    config: engine.ReplicatorConfig = field(
        default_factory=engine.ReplicatorConfig)
    output: Path = Path(".", "data", "evodata")
    init: str = "uniform"
    seed: int | None = None
    starts: int = 1
    norm: str = DEFAULT_NORM
    pairing: str = DEFAULT_PAIRING
    export_trajectory: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(
                f"Invalid argument strategy={self.strategy}")
        if self.strategy == "mixed" and self.mix is None:
            raise ConfigurationError("Strategy 'mixed' needs --mix weights")
        if self.strategy != "mixed" and self.mix is not None:
            raise ConfigurationError(
                f"--mix needs --strategy mixed, not {self.strategy}")
        if not Path(self.input).is_file():
            raise ConfigurationError(f"Input file not found: {self.input}")
        if self.starts < 1:
            raise ConfigurationError(f"Invalid argument starts={self.starts}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunManifest":
        schema = args.schema or args.input.with_suffix(".schema")
        return cls(
            input=args.input,
            schema=schema,
            strategy=args.strategy,
            mix=StrategyMix.parse(args.mix) if args.mix else None,
            config=engine.ReplicatorConfig(
                step_size=args.h,
                max_iterations=args.max_iter,
                convergence_tol=args.tol,
            ),
            output=args.path,
            init=args.init,
            seed=args.seed,
            starts=args.starts,
            norm=args.norm,
            pairing=args.pairing,
            export_trajectory=getattr(args, "export_trajectory", False),
        )


def read_initial_gamma(path: Path) -> np.ndarray:
    """One weight per line or one comma separated line"""
    try:
        return np.loadtxt(path, delimiter=",", ndmin=1).ravel()
    except ValueError as e:
        raise ConfigurationError(
            f"Invalid initial weights in {path}: {e}") from None


def engine_config(manifest: RunManifest, m: int) -> engine.ReplicatorConfig:
    if manifest.init == "uniform":
        return manifest.config
    if manifest.init == "random":
        rng = np.random.default_rng(manifest.seed)
        gamma = engine.random_interior(m, rng)
    else:
        path = Path(manifest.init)
        if not path.is_file():
            raise ConfigurationError(
                f"--init must be uniform, random or a file; not found: {path}")
        gamma = read_initial_gamma(path)
    logger.info("Starting from %s", np.array2string(gamma, precision=4))
    return replace(manifest.config, initial_gamma=gamma)


def _solve(manifest: RunManifest):
    phi = evodata.load(manifest.input, manifest.schema)
    game = evodata.game(
        phi, manifest.strategy, manifest.mix,
        norm=manifest.norm, pairing=manifest.pairing,
    )
    trajectory, rest_point = engine.run(game, engine_config(manifest, phi.m))
    return phi, game, trajectory, rest_point


def _written(path: Path):
    print(f"  {path}")


# =============================================================================
# -------------------------------------RUN-------------------------------------
# =============================================================================
def cmd_run(manifest: RunManifest) -> int:
    phi, game, trajectory, rest_point = _solve(manifest)
    root, src, name = manifest.output, manifest.input, manifest.strategy

    record = rest_point.as_dict()
    record["strategy"] = manifest.strategy
    record["mix"] = game.mix.as_dict()
    record["norm"] = manifest.norm
    record["pairing"] = manifest.pairing
    record["dropped"] = list(phi.report.dropped)
    record["merged"] = [list(pair) for pair in phi.report.merged]
    if manifest.starts > 1:
        report = engine.multi_start(
            game, starts=manifest.starts, seed=manifest.seed,
            config=manifest.config,
        )
        record["multi_start"] = {
            "starts": manifest.starts,
            "spread": report.spread,
            "unique": report.unique,
        }

    paths = [
        fs.write_json(fs.path_restpoint(root, src, name), record),
        fs.write_csv(
            fs.path_trajectory(root, src, name),
            ["iteration", "gene", "gamma"],
            trajectory.rows(phi.columns),
        ),
        fs.write_json(
            fs.path_persistence(root, src, name),
            analysis.persistence_report(trajectory, rest_point).as_dict(),
        ),
    ]
    if manifest.export_trajectory:
        paths.append(fs.write_csv(
            fs.path_trajectory(root, src, name, organisms=True),
            ["iteration", "organism", "fitness"],
            analysis.organism_trajectory(trajectory, phi),
        ))
    if rest_point.converged:
        paths.append(fs.write_json(
            fs.path_report(root, src, name),
            analysis.report_bundle(rest_point, phi),
        ))

    print(f"\n{name}: {rest_point.tail} after {rest_point.iterations} "
          "iterations")
    for path in paths:
        _written(path)
    return EXIT_OK if rest_point.converged else EXIT_NOT_CONVERGED


def run_strategy(args: argparse.Namespace) -> int:
    return cmd_run(RunManifest.from_args(args))


# =============================================================================
# ---------------------------------RANK/DISTRIBUTE-----------------------------
# =============================================================================
def cmd_rank(manifest: RunManifest, axis: str) -> int:
    phi, _, _, rest_point = _solve(manifest)
    try:
        if axis == "genes":
            ranking = analysis.rank_genes(rest_point)
        else:
            ranking = analysis.rank_organisms(rest_point, phi)
    except NotConvergedError as e:
        sys.stderr.write(f"evodata: {e}\n")
        return EXIT_NOT_CONVERGED
    path = fs.write_csv(
        fs.path_ranking(manifest.output, manifest.input, manifest.strategy,
                        axis),
        ["label", "score", "rank"],
        ranking.rows(),
    )
    print(f"\nFirst: {ranking.entries[0].label}")
    _written(path)
    return EXIT_OK


def rank_axis(args: argparse.Namespace) -> int:
    return cmd_rank(RunManifest.from_args(args), args.axis)


def cmd_distribute(manifest: RunManifest) -> int:
    phi, _, _, rest_point = _solve(manifest)
    try:
        plan = analysis.distribution(rest_point, phi)
    except NotConvergedError as e:
        sys.stderr.write(f"evodata: {e}\n")
        return EXIT_NOT_CONVERGED
    path = fs.write_csv(
        fs.path_distribution(
            manifest.output, manifest.input, manifest.strategy),
        ["label", "share", "deviation"],
        plan.rows(),
    )
    _written(path)
    return EXIT_OK


def distribute(args: argparse.Namespace) -> int:
    return cmd_distribute(RunManifest.from_args(args))


# =============================================================================
# ------------------------------------PAYOFF-----------------------------------
# =============================================================================
def cmd_payoff(manifest: RunManifest) -> int:
    phi = evodata.load(manifest.input, manifest.schema)
    matrices = evodata.payoff(
        phi, manifest.strategy, norm=manifest.norm, pairing=manifest.pairing)
    for matrix_name, matrix in matrices.items():
        path = fs.write_csv(
            fs.path_payoff(manifest.output, manifest.input,
                           manifest.strategy, matrix_name),
            ["gene", *phi.columns],
            fs.matrix_rows(matrix, phi.columns),
        )
        _written(path)
    return EXIT_OK


def payoff(args: argparse.Namespace) -> int:
    return cmd_payoff(RunManifest.from_args(args))


# =============================================================================
# -------------------------------------FIT-------------------------------------
# =============================================================================
def read_targets(path: Path, labels) -> np.ndarray:
    """Target scores from a `label,target` CSV, in the order of `labels`"""
    with open(path, newline="", encoding="utf-8") as f:
        rows = [row for row in csv.reader(f) if row]
    targets = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise TableParseError(
                f"expected 2 fields, got {len(row)}", row=lineno)
        try:
            targets[row[0].strip()] = float(row[1])
        except ValueError:
            raise TableParseError(
                f"non-numeric target {row[1]!r}", row=lineno, column="target",
            ) from None
    missing = [label for label in labels if label not in targets]
    if missing or len(targets) != len(labels):
        raise DimensionError(
            f"{path}: {len(targets)} targets for {len(labels)} organisms"
            + (f", missing {', '.join(missing)}" if missing else "")
        )
    return np.array([targets[label] for label in labels])


def fit(args: argparse.Namespace) -> int:
    training_sets = []
    for input_path, target_path in args.train:
        input_path = Path(input_path)
        phi = evodata.load(input_path)
        training_sets.append((phi, read_targets(Path(target_path), phi.rows)))
    config = analysis.FitConfig(
        resolution=args.resolution,
        engine=engine.ReplicatorConfig(
            step_size=args.h,
            max_iterations=args.max_iter,
            convergence_tol=args.tol,
            record_trajectory=False,
        ),
        workers=args.workers,
        norm=args.norm,
        pairing=args.pairing,
    )
    mix = analysis.fit_mix(training_sets, config)
    record = {
        "mix": mix.as_dict(),
        "mse": analysis.evaluate_mix(training_sets, mix, config),
        "resolution": args.resolution,
        "training_sets": [list(pair) for pair in args.train],
    }
    path = fs.write_json(
        fs.path_fit(args.path, Path(args.train[0][0])), record)
    print(f"\nBest mix: {mix.as_dict()}")
    _written(path)
    return EXIT_OK


# =============================================================================
# ----------------------------------CATALOGUE----------------------------------
# =============================================================================
def _print_entries(title: str, entries: dict):
    print(f"\n{title}:")
    for key, entry in entries.items():
        print(f"\n  {key: <11}{entry['name']}")
        description = entry["description"]
        i = 0
        if len(description) > 70:
            print(13 * " ", end="")
            for word in description.split(" "):
                i += len(word) + 1
                if i < 70:
                    print(word, end=" ")
                else:
                    print(word)
                    print(13 * " ", end="")
                    i = 0
            print("")
        else:
            print(12 * " ", description)


def print_strategies(args: argparse.Namespace = None) -> int:
    _print_entries("Available strategies", STRATEGIES)
    _print_entries("Gene fitness functions", FITNESS_FUNCTIONS)
    print("")
    return EXIT_OK


def evodata_help(args: argparse.Namespace) -> int:
    print(__doc__)
    return EXIT_OK


# =============================================================================
# ------------------------------------PARSERS----------------------------------
# =============================================================================
def add_engine_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--h", type=float, default=0.5,
                        help="Step size, 0 < h < 1")
    parser.add_argument("--max-iter", type=int, default=10000,
                        dest="max_iter")
    parser.add_argument("--tol", type=float, default=1e-10,
                        help="Stop when no gene weight moves more than this")
    parser.add_argument("--norm", choices=NORMS, default=DEFAULT_NORM,
                        help="Distance used by the kinship matrices")
    parser.add_argument("--pairing", choices=PAIRINGS,
                        default=DEFAULT_PAIRING,
                        help="Pairs averaged by the dispersions")


def add_run_arguments(
    parser: argparse.ArgumentParser,
    default_output: Path,
):
    parser.add_argument("--input", type=Path, required=True,
                        help="CSV table with a header row")
    parser.add_argument(
        "--schema", type=Path, default=None,
        help="Schema sidecar, by default the input with a .schema suffix")
    parser.add_argument("--strategy", choices=list(STRATEGIES),
                        default="dombal")
    parser.add_argument("--mix", default=None,
                        help="Weights of a mixed strategy: g:dom=..,w:bal=..")
    parser.add_argument(
        "--init", default="uniform",
        help="Starting gene weights: uniform, random or a file")
    parser.add_argument("--seed", type=int, default=None,
                        help="Seed for --init random and --starts")
    parser.add_argument("--starts", type=int, default=1,
                        help="Random restarts used to check uniqueness")
    add_engine_arguments(parser)
    parser.add_argument(
        "-o", "--out",
        action="store",
        dest="path",
        type=Path,
        default=default_output,
        help="Output path directory where files will be saved",
    )


def set_run_subparser(subs, default_output: Path):
    run_parser = subs.add_parser(
        "run", description="Iterate a strategy until it comes to rest")
    add_run_arguments(run_parser, default_output)
    run_parser.add_argument(
        "--export-trajectory", action="store_true", dest="export_trajectory",
        help="Also write organism fitness for every iteration")
    run_parser.set_defaults(func=run_strategy)


def set_rank_subparser(subs, default_output: Path):
    rank_parser = subs.add_parser(
        "rank", description="Rank genes or organisms at the rest point")
    rank_parser.add_argument("axis", choices=("genes", "organisms"))
    add_run_arguments(rank_parser, default_output)
    rank_parser.set_defaults(func=rank_axis)


def set_distribute_subparser(subs, default_output: Path):
    distribute_parser = subs.add_parser(
        "distribute", description="Delivery shares per organism")
    add_run_arguments(distribute_parser, default_output)
    distribute_parser.set_defaults(func=distribute)


def set_payoff_subparser(subs, default_output: Path):
    payoff_parser = subs.add_parser(
        "payoff", description="Write the precomputed payoff matrices")
    add_run_arguments(payoff_parser, default_output)
    payoff_parser.set_defaults(func=payoff)


def set_fit_subparser(subs, default_output: Path):
    fit_parser = subs.add_parser(
        "fit", description="Grid search the strategy mix against targets")
    fit_parser.add_argument(
        "--train", nargs=2, action="append", required=True,
        metavar=("INPUT", "TARGETS"),
        help="Input CSV (schema next to it) and a label,target CSV",
    )
    fit_parser.add_argument("--resolution", type=float, default=0.1)
    fit_parser.add_argument("--workers", type=int, default=1)
    add_engine_arguments(fit_parser)
    fit_parser.add_argument(
        "-o", "--out",
        action="store",
        dest="path",
        type=Path,
        default=default_output,
        help="Output path directory where files will be saved",
    )
    fit_parser.set_defaults(func=fit)


def set_strategies_subparser(subs):
    strategies_parser = subs.add_parser(
        "strategies", description="List strategies and fitness functions")
    strategies_parser.set_defaults(func=print_strategies)


def set_parser() -> argparse.ArgumentParser:
    default_output = Path(
        os.environ.get("EVODATA_OUTPUT", Path(".", "data", "evodata")))

    parser = argparse.ArgumentParser(
        description="Evolutionary games played on tabular data")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.set_defaults(func=evodata_help)

    subparsers = parser.add_subparsers()

    set_run_subparser(subparsers, default_output)
    set_rank_subparser(subparsers, default_output)
    set_distribute_subparser(subparsers, default_output)
    set_payoff_subparser(subparsers, default_output)
    set_fit_subparser(subparsers, default_output)
    set_strategies_subparser(subparsers)

    return parser


def set_logging(verbose: int):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    parser = set_parser()
    args = parser.parse_args(argv)
    set_logging(args.verbose)

    try:
        return args.func(args)
    except (EvoDataError, OSError) as e:
        sys.stderr.write(f"evodata: {e}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt as ki:
        print(f"\n\n{ki}\n\n")
        print("\n\n\nEXITING...\n\n\n")
