"""Command-line interface of the engine.

Every command can write a run directory (``--record-dir``) holding a
manifest with the command line and the resulting library checksum,
the cassette of all model exchanges and the transcript. ``replay``
re-runs such a directory against its cassette and checks that the
library checksum is reproduced.
"""
from __future__ import annotations

import argparse
import json
import logging
import pathlib
import sys
from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Any

from optinsight.config import EngineConfig, load_config
from optinsight.evaluation.datasets import load_dataset, stratified_split
from optinsight.evaluation.metrics import evaluate, objective_trace
from optinsight.evaluation.reports import (
    export_library,
    format_insight,
    format_taxonomy_report,
    taxonomy_report,
)
from optinsight.evaluation.synthetic import synthetic_provider, synthetic_tasks
from optinsight.evolution.evolver import Evolver
from optinsight.exceptions import OptInsightError
from optinsight.insights.task import Task
from optinsight.learning.training import Learner
from optinsight.library.commits import Commit, Origin, RetireInsight
from optinsight.library.persistence import (
    load_library,
    save_library,
    seeded_snapshot,
)
from optinsight.library.snapshot import LibrarySnapshot
from optinsight.library.store import LibraryStore
from optinsight.llm.cassette import open_cassette, record_cassette
from optinsight.llm.gateway import Gateway, Transcript
from optinsight.llm.providers import LiveProvider, Provider, ProviderKind
from optinsight.solving.solver import TaskSolver
from optinsight.version import __version__

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

SYNTHETIC = "synthetic"
LIBRARY = "library.json"
MANIFEST = "manifest.json"
CASSETTE = "cassette.json"
TRANSCRIPT = "transcript.json"


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML configuration file.")
    parser.add_argument("--library", help="Library file to start from.")
    parser.add_argument(
        "--dataset",
        help=f"Task file, or '{SYNTHETIC}' for the bundled corpus.",
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--cassette", help="Replay model answers.")
    source.add_argument(
        "--live", action="store_true", help="Call the live endpoint."
    )
    source.add_argument(
        "--scripted",
        action="store_true",
        help="Answer with the synthetic rule book (dry run).",
    )
    parser.add_argument("--record-dir", help="Write a run directory.")
    parser.add_argument("--output", help="Where to write the result.")
    parser.add_argument("--tol-rel", type=float)
    parser.add_argument("--tol-abs", type=float)
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--max-iterations", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--no-retrieval", action="store_true")
    parser.add_argument("--no-self-debug", action="store_true")
    parser.add_argument("--no-taxonomy", action="store_true")
    parser.add_argument("--no-examples", action="store_true")
    parser.add_argument("--no-split", action="store_true")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with all subcommands."""
    parser = argparse.ArgumentParser(
        prog="optinsight",
        description="Learn and evolve a library of modeling insights.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("train", "Learn a library from the training split."),
        ("evolve", "Run one evolution round on a library."),
        ("eval", "Evaluate a library on a dataset."),
        ("export", "Write the library as a Markdown audit document."),
    ):
        _common(commands.add_parser(name, help=text))
    inspect = commands.add_parser("inspect", help="Show library content.")
    _common(inspect)
    what = inspect.add_mutually_exclusive_group(required=True)
    what.add_argument("--insight", type=int, help="Show one insight.")
    what.add_argument(
        "--taxonomy", action="store_true", help="Show the distribution."
    )
    what.add_argument("--retire", type=int, help="Retire an insight.")
    inspect.add_argument("--reason", default="retired by hand")
    replay = commands.add_parser("replay", help="Re-run a run directory.")
    replay.add_argument("run_dir")
    verbosity = replay.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    return parser


def apply_overrides(
    config: EngineConfig, args: argparse.Namespace
) -> EngineConfig:
    """Apply the command-line flags to a configuration."""
    execution = config.execution
    if args.tol_rel is not None:
        execution = replace(execution, tolerance_rel=args.tol_rel)
    if args.tol_abs is not None:
        execution = replace(execution, tolerance_abs=args.tol_abs)
    retrieval = config.retrieval
    if args.no_retrieval:
        retrieval = replace(retrieval, enabled=False)
    if args.no_taxonomy:
        retrieval = replace(retrieval, use_taxonomy=False)
    solve = config.solve
    if args.no_self_debug:
        solve = replace(solve, self_debug_enabled=False)
    if args.no_examples:
        solve = replace(solve, include_examples=False)
    learning = config.learning
    evolution = config.evolution
    evaluation = config.evaluation
    if args.seed is not None:
        learning = replace(learning, seed=args.seed)
        evaluation = replace(evaluation, seed=args.seed)
    if args.batch_size is not None:
        learning = replace(learning, batch_size=args.batch_size)
    if args.max_iterations is not None:
        learning = replace(learning, max_iterations=args.max_iterations)
    if args.workers is not None:
        learning = replace(learning, workers=args.workers)
        evolution = replace(evolution, workers=args.workers)
        evaluation = replace(evaluation, workers=args.workers)
    if args.lam is not None:
        evaluation = replace(evaluation, complexity_weight=args.lam)
    return replace(
        config,
        execution=execution,
        retrieval=retrieval,
        solve=solve,
        learning=learning,
        evolution=evolution,
        evaluation=evaluation,
    )


def make_provider(config: EngineConfig, args: argparse.Namespace) -> Provider:
    """Pick the provider from the flags, falling back to the config."""
    settings = config.provider
    kind = ProviderKind(settings.kind)
    if args.cassette:
        kind = ProviderKind.CASSETTE
    elif args.live:
        kind = ProviderKind.LIVE
    elif args.scripted:
        kind = ProviderKind.SCRIPTED
    if kind == ProviderKind.CASSETTE:
        path = args.cassette or settings.cassette
        if not path:
            raise ValueError("Cassette mode needs a cassette file")
        return open_cassette(path, strict=settings.strict)
    if kind == ProviderKind.LIVE:
        return LiveProvider(
            model=settings.model,
            endpoint=settings.endpoint,
            api_key_env=settings.api_key_env,
            max_attempts=settings.max_attempts,
            backoff_s=settings.backoff_s,
        )
    return synthetic_provider()


@dataclass
class Run:
    """Everything a command needs."""

    args: argparse.Namespace
    config: EngineConfig
    gateway: Gateway
    solver: TaskSolver
    run_dir: pathlib.Path | None

    def path(self, default: str) -> pathlib.Path:
        """Where an output goes: --output, the run dir or the cwd."""
        if self.args.output:
            return pathlib.Path(self.args.output)
        if self.run_dir is not None:
            return self.run_dir / default
        return pathlib.Path(default)

    def report(self, name: str, data: dict[str, Any]):
        if self.run_dir is not None:
            (self.run_dir / name).write_text(
                json.dumps(data, indent=1, sort_keys=True),
                encoding="utf-8",
            )


def load_tasks(dataset: str | None) -> list[Task]:
    if not dataset:
        raise ValueError("This command needs --dataset")
    if dataset == SYNTHETIC:
        return synthetic_tasks()
    return list(load_dataset(dataset).tasks)


def load_start(library: str | None) -> LibrarySnapshot:
    return seeded_snapshot() if not library else load_library(library)


def cmd_train(run: Run) -> LibrarySnapshot:
    tasks = load_tasks(run.args.dataset)
    evaluation = run.config.evaluation
    if run.args.no_split:
        train_tasks, test_tasks = tasks, []
    else:
        train_tasks, test_tasks = stratified_split(
            tasks, evaluation.train_fraction, evaluation.seed
        )
    with LibraryStore(load_start(run.args.library)) as store:
        evolver = None
        if run.config.evolution.enabled:
            evolver = Evolver(run.solver, store, run.config.evolution)
        learner = Learner(
            train_tasks,
            store,
            run.solver,
            config=run.config.learning,
            evolver=evolver,
            exe_dir=run.run_dir,
        )
        report = learner.train()
        snapshot = store.snapshot
    save_library(snapshot, run.path(LIBRARY))
    run.report("train_report.json", report.to_dict())
    print(
        f"Stopped after {len(report.iterations)} iteration(s) "
        f"({report.stop_reason}), {report.omega} active insight(s)"
    )
    if test_tasks:
        result = evaluate(
            snapshot,
            test_tasks,
            run.solver,
            workers=evaluation.workers,
            header={"config": run.config.fingerprint()},
        )
        trace = objective_trace(
            snapshot,
            result,
            evaluation.complexity_weight,
            iteration=len(report.iterations),
        )
        run.report("eval_report.json", result.to_dict())
        run.report("objective.json", trace.to_dict())
        print(f"Test micro average: {result.micro}")
    return snapshot


def cmd_evolve(run: Run) -> LibrarySnapshot:
    if not run.args.library:
        raise ValueError("evolve needs --library")
    tasks = load_tasks(run.args.dataset)
    with LibraryStore(load_library(run.args.library)) as store:
        evolver = Evolver(run.solver, store, run.config.evolution)
        anchors = {i.id: i.gold_program for i in tasks if i.gold_program}
        report = evolver.evolve(tasks, anchors)
        snapshot = store.snapshot
    save_library(snapshot, run.path(LIBRARY))
    run.report("evolution_report.json", report.to_dict())
    print(f"Accepted {len(report.accepted)} refinement(s)")
    return snapshot


def cmd_eval(run: Run) -> LibrarySnapshot:
    snapshot = load_start(run.args.library)
    tasks = load_tasks(run.args.dataset)
    result = evaluate(
        snapshot,
        tasks,
        run.solver,
        workers=run.config.evaluation.workers,
        header={"config": run.config.fingerprint()},
    )
    trace = objective_trace(
        snapshot, result, run.config.evaluation.complexity_weight
    )
    result.save(run.path("eval_report.json"))
    run.report("objective.json", trace.to_dict())
    print(
        f"Solved {result.successes}/{result.total}: "
        f"micro {result.micro}, macro {result.macro}, F {trace.F}"
    )
    return snapshot


def cmd_inspect(run: Run) -> LibrarySnapshot:
    snapshot = load_start(run.args.library)
    if run.args.insight is not None:
        if run.args.insight not in snapshot.insights:
            raise ValueError(f"No insight {run.args.insight}")
        print(format_insight(snapshot, run.args.insight))
        return snapshot
    if run.args.taxonomy:
        print(format_taxonomy_report(taxonomy_report(snapshot)))
        return snapshot
    if not run.args.library:
        raise ValueError("Retiring needs --library")
    with LibraryStore(snapshot) as store:
        result = store.commit(
            Commit(
                RetireInsight(run.args.retire, run.args.reason),
                Origin(worker_id="cli"),
            )
        )
        snapshot = store.snapshot
    if not result.applied:
        raise ValueError(f"Could not retire: {result.rejected}")
    target = run.args.library
    if run.args.output or run.run_dir is not None:
        target = run.path(LIBRARY)
    save_library(snapshot, target)
    print(f"Retired insight {run.args.retire}")
    return snapshot


def cmd_export(run: Run) -> LibrarySnapshot:
    snapshot = load_start(run.args.library)
    text = export_library(snapshot)
    if run.args.output:
        pathlib.Path(run.args.output).write_text(text, encoding="utf-8")
    else:
        print(text)
    return snapshot


COMMANDS = {
    "train": cmd_train,
    "evolve": cmd_evolve,
    "eval": cmd_eval,
    "inspect": cmd_inspect,
    "export": cmd_export,
}


def execute(args: argparse.Namespace, argv: Sequence[str]) -> str:
    """Run a command and return the checksum of the resulting library."""
    config = apply_overrides(load_config(args.config), args)
    gateway = Gateway(
        make_provider(config, args),
        transcript=Transcript(),
        decoding=config.provider.decoding(),
        overrides=config.provider.decoding_overrides(),
    )
    solver = TaskSolver(
        gateway, config.execution.runner(), config.solve_config()
    )
    run_dir = None
    if args.record_dir:
        run_dir = pathlib.Path(args.record_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
    run = Run(args, config, gateway, solver, run_dir)
    snapshot = COMMANDS[args.command](run)
    checksum = snapshot.checksum()
    if run_dir is not None:
        record_cassette(gateway.transcript, run_dir / CASSETTE)
        gateway.transcript.save(run_dir / TRANSCRIPT)
        manifest = {
            "argv": list(argv),
            "command": args.command,
            "library_checksum": checksum,
            "config_fingerprint": config.fingerprint(),
            "provider": gateway.provider.kind.value,
            "version": __version__,
        }
        (run_dir / MANIFEST).write_text(
            json.dumps(manifest, indent=1), encoding="utf-8"
        )
    return checksum


def replay(run_dir: str | pathlib.Path) -> bool:
    """Re-run a run directory from its cassette and compare checksums."""
    run_dir = pathlib.Path(run_dir)
    manifest = json.loads((run_dir / MANIFEST).read_text(encoding="utf-8"))
    argv = list(manifest["argv"])
    args = build_parser().parse_args(argv)
    args.cassette = str(run_dir / CASSETTE)
    args.live = args.scripted = False
    args.record_dir = str(run_dir / "replay")
    args.output = None
    checksum = execute(args, argv)
    if checksum != manifest["library_checksum"]:
        LOGGER.error(
            "Replay gave library %s, expected %s",
            checksum,
            manifest["library_checksum"],
        )
        return False
    LOGGER.info("Replay reproduced library %s", checksum)
    return True


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    try:
        if args.command == "replay":
            return 0 if replay(args.run_dir) else 1
        execute(args, argv)
    except (OptInsightError, ValueError, OSError) as error:
        LOGGER.error("%s failed: %s", args.command, error)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
