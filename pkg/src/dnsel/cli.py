"""Command-line entry point wiring the full pipeline.

Subcommands: info, golf, select, train, experiment, sweep, compare.  Output
is machine-first (JSON/CSV); every run also writes a manifest with the
resolved configuration, input checksums, artifact paths and per-stage wall
times.  Exit codes: 0 ok, 2 usage, 3 parse/validation, 4 infeasible
parameters, 5 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .experiment import (
    run_experiment,
    sensitivity_sweep,
    sweep_csv,
    write_csv,
)
from .gcn import TrainConfig, evaluate, train
from .golf import (
    assign_leading_nodes,
    compute_aggregated_features,
    compute_delta,
    compute_density,
    compute_gamma,
    cut_forest,
)
from .graph_io import (
    Graph,
    GraphFormatError,
    GraphValidationError,
    karate_club,
    load_container,
    load_edgelist,
    validate,
)
from .select import (
    InfeasibleSelectionError,
    SelectionConfig,
    SizeGuardError,
    budget_for_rate,
    dns,
    resolve_trees,
    select_labels,
)
from .synth import synthetic_citation_benchmark

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4
EXIT_RUNTIME = 5

DATA_DIR_ENV = "DNSEL_DATA_DIR"


class _Timings(dict):
    """Stage wall-times; use as ``with timings.stage("name"): ...``."""

    class _Stage:
        def __init__(self, store, name):
            self.store, self.name = store, name

        def __enter__(self):
            self.start = time.perf_counter()

        def __exit__(self, *exc):
            self.store[self.name] = self.store.get(self.name, 0.0) \
                + time.perf_counter() - self.start
            return False

    def stage(self, name: str):
        return self._Stage(self, name)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _resolve_dataset(name: str, features: str | None,
                     timings: _Timings) -> tuple[Graph, dict]:
    """Dataset argument: builtin name, container path, or edge list + TSV."""
    inputs: dict[str, str] = {}
    with timings.stage("load"):
        if name == "karate":
            return karate_club(), {"builtin": "karate"}
        if name == "synthetic":
            return synthetic_citation_benchmark(), {"builtin": "synthetic"}
        path = Path(name)
        if not path.exists():
            data_dir = os.environ.get(DATA_DIR_ENV)
            if data_dir:
                for candidate in (Path(data_dir) / name, Path(data_dir) / f"{name}.bin"):
                    if candidate.exists():
                        path = candidate
                        break
        if not path.exists():
            raise GraphFormatError(f"dataset not found: {name}")
        if features is not None:
            graph = load_edgelist(path, features)
            inputs[str(path)] = _sha256(path)
            inputs[str(features)] = _sha256(Path(features))
        else:
            graph = load_container(path)
            inputs[str(path)] = _sha256(path)
    return graph, inputs


def _selection_from_args(args, budget: int) -> SelectionConfig:
    return SelectionConfig(
        budget=budget,
        min_per_group=args.k,
        alpha=args.alpha,
        sigma=args.sigma,
        trees=args.trees,
        group_mode=args.groups,
    )


def _write_manifest(args, command: str, inputs: dict, artifacts: list[str],
                    timings: _Timings, resolved: dict) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "resolved_config": resolved,
        "inputs": inputs,
        "artifacts": artifacts,
        "timings_sec": dict(timings),
    }
    path = args.manifest
    if path is None:
        path = f"{args.out}.manifest.json" if getattr(args, "out", None) \
            else f"dnsel-{command}.manifest.json"
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _resolved(args, skip=("manifest", "func")) -> dict:
    return {k: v for k, v in vars(args).items()
            if k not in skip and not callable(v)}


def _build_forest_timed(graph: Graph, sigma: float, trees: int, timings: _Timings):
    with timings.stage("aggregate_features"):
        aggregated = compute_aggregated_features(graph)
    with timings.stage("build_forest"):
        rho = compute_density(aggregated, sigma)
        parent = assign_leading_nodes(graph, rho)
        delta = compute_delta(graph, rho, parent)
        gamma = compute_gamma(rho, delta)
        forest = cut_forest(graph, rho, parent, gamma, trees)
    return forest


# ---------------------------------------------------------------------------
# subcommands

def cmd_info(args) -> int:
    timings = _Timings()
    graph, inputs = _resolve_dataset(args.dataset, args.features, timings)
    stats = graph.stats()
    violations = validate(graph)
    print(f"nodes:    {stats.nodes}")
    print(f"edges:    {stats.edges}")
    print(f"classes:  {stats.classes}")
    print(f"features: {stats.features}")
    print(f"valid:    {'yes' if not violations else 'no'}")
    for v in violations:
        print(f"  violation: {v}")
    _write_manifest(args, "info", inputs, [], timings, _resolved(args))
    return EXIT_VALIDATION if violations else EXIT_OK


def cmd_golf(args) -> int:
    timings = _Timings()
    graph, inputs = _resolve_dataset(args.dataset, args.features, timings)
    trees = args.trees if args.trees is not None \
        else resolve_trees(SelectionConfig(budget=1, trees=None), graph).trees
    forest = _build_forest_timed(graph, args.sigma, trees, timings)
    forest.save_json(args.out)
    print(f"forest: {forest.num_trees} trees (requested {trees}), "
          f"max layer {int(forest.layer.max())} -> {args.out}")
    _write_manifest(args, "golf", inputs, [args.out], timings, _resolved(args))
    return EXIT_OK


def cmd_select(args) -> int:
    timings = _Timings()
    graph, inputs = _resolve_dataset(args.dataset, args.features, timings)
    if (args.rate is None) == (args.budget is None):
        raise argparse.ArgumentTypeError("give exactly one of --rate / --budget")
    budget = args.budget if args.budget is not None \
        else budget_for_rate(args.rate, graph.num_nodes)
    config = resolve_trees(_selection_from_args(args, budget), graph)
    forest = _build_forest_timed(graph, config.sigma, config.trees, timings)
    with timings.stage("select"):
        labels = graph.labels if config.group_mode == "oracle" else None
        label_set = select_labels(forest, config, labels)
    label_set.save_json(args.out)
    print(f"selected {len(label_set.nodes)} nodes "
          f"({len(label_set.typical)} typical, {len(label_set.divergent)} divergent), "
          f"objective {label_set.objective:.6f} -> {args.out}")
    _write_manifest(args, "select", inputs, [args.out], timings, _resolved(args))
    return EXIT_OK


def cmd_train(args) -> int:
    timings = _Timings()
    graph, inputs = _resolve_dataset(args.dataset, args.features, timings)
    if graph.labels is None:
        raise GraphValidationError("training requires ground-truth labels")
    if args.labels:
        picked = json.loads(Path(args.labels).read_text())
        nodes = np.asarray(picked["typical"] + picked["divergent"], dtype=np.int64)
        inputs[args.labels] = _sha256(Path(args.labels))
        known = nodes[graph.labels[nodes] >= 0]
        if known.size < nodes.size:
            print(f"note: dropped {nodes.size - known.size} selected nodes "
                  "without ground-truth labels")
            nodes = known
    else:
        rate = args.rate if args.rate is not None else 0.04
        budget = budget_for_rate(rate, graph.num_nodes)
        rng = np.random.default_rng(args.seed)
        eligible = np.flatnonzero(graph.labels >= 0)
        nodes = np.sort(rng.choice(eligible, size=budget, replace=False))
    layers = args.layers if args.layers is not None else 2
    config = TrainConfig(num_layers=layers, seed=args.seed,
                         epochs=args.epochs, dropout=args.dropout,
                         learning_rate=args.lr)
    with timings.stage("train"):
        model, curve = train(graph, (nodes, graph.labels[nodes]), config)
    eligible = np.flatnonzero(graph.labels >= 0)
    pool = np.setdiff1d(eligible, nodes)
    rng = np.random.default_rng([args.seed, 1])
    test = rng.choice(pool, size=min(1000, pool.size), replace=False)
    acc = evaluate(model, graph, test, nodes)
    result = {"final_loss": curve[-1], "test_accuracy": acc,
              "label_count": int(nodes.size), "epochs": config.epochs}
    Path(args.out).write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(f"trained {layers}-layer model: loss {curve[-1]:.4f}, "
          f"test accuracy {acc:.4f} -> {args.out}")
    _write_manifest(args, "train", inputs, [args.out], timings, _resolved(args))
    return EXIT_OK


def cmd_experiment(args) -> int:
    timings = _Timings()
    graph, inputs = _resolve_dataset(args.dataset, args.features, timings)
    selection = _selection_from_args(args, budget=1)
    with timings.stage("experiment"):
        report = run_experiment(
            graph, args.rate, args.mode, runs=args.runs, base_seed=args.seed,
            selection=selection if args.mode == "dns" else None,
            num_layers=args.layers, layer_schedule=args.schedule,
            test_size=args.test_size, stratified=args.stratified, jobs=args.jobs)
    Path(args.out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    artifacts = [args.out]
    if args.csv:
        write_csv([report], args.csv)
        artifacts.append(args.csv)
    print(f"{args.mode} @ rate {args.rate}: mean {report.mean:.4f} "
          f"std {report.std:.4f} over {report.runs} runs -> {args.out}")
    _write_manifest(args, "experiment", inputs, artifacts, timings, _resolved(args))
    return EXIT_OK


def cmd_sweep(args) -> int:
    timings = _Timings()
    graph, inputs = _resolve_dataset(args.dataset, args.features, timings)
    values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    selection = _selection_from_args(args, budget=1)
    with timings.stage("sweep"):
        entries = sensitivity_sweep(
            graph, args.rate, args.param, values, runs=args.runs,
            base_seed=args.seed, selection=selection,
            num_layers=args.layers, layer_schedule=args.schedule,
            test_size=args.test_size, jobs=args.jobs)
    Path(args.out).write_text(sweep_csv(entries))
    done = sum(1 for e in entries if e.report is not None)
    print(f"sweep {args.param}: {done}/{len(entries)} values completed -> {args.out}")
    for entry in entries:
        if entry.skipped:
            print(f"  skipped {args.param}={entry.value}: {entry.skipped}")
    _write_manifest(args, "sweep", inputs, [args.out], timings, _resolved(args))
    return EXIT_OK


def cmd_compare(args) -> int:
    timings = _Timings()
    graph, inputs = _resolve_dataset(args.dataset, args.features, timings)
    selection = _selection_from_args(args, budget=1)
    with timings.stage("experiment_random"):
        base = run_experiment(graph, args.rate, "random", runs=args.runs,
                              base_seed=args.seed, num_layers=args.layers,
                              layer_schedule=args.schedule,
                              test_size=args.test_size, jobs=args.jobs)
    with timings.stage("experiment_dns"):
        det = run_experiment(graph, args.rate, "dns", runs=args.runs,
                             base_seed=args.seed, selection=selection,
                             num_layers=args.layers, layer_schedule=args.schedule,
                             test_size=args.test_size, jobs=args.jobs)
    # soft timing check: selecting the label set should be cheaper than one
    # training run; reported, never asserted
    with timings.stage("select"):
        dns(graph, resolve_trees(_selection_from_args(args, det.budget), graph))
    selection_sec = timings["select"]
    mean_train = float(np.mean(det.runtimes))
    d_mean = 100 * (det.mean - base.mean)
    d_std = 100 * (det.std - base.std)
    print(f"label rate {args.rate:.2%}, {args.runs} paired runs")
    print(f"  baseline   {100 * base.mean:5.1f} ± {100 * base.std:.1f}")
    print(f"  +selection ({d_mean:+.1f}) ± ({d_std:+.1f})")
    print(f"  selection {selection_sec:.2f}s vs {mean_train:.2f}s mean training"
          f"{'' if selection_sec < mean_train else ' (selection slower)'}")
    payload = {"random": base.to_dict(), "dns": det.to_dict(),
               "delta_mean": d_mean, "delta_std": d_std,
               "selection_sec": selection_sec, "mean_train_sec": mean_train}
    artifacts = []
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        artifacts.append(args.out)
    _write_manifest(args, "compare", inputs, artifacts, timings, _resolved(args))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True,
                   help="container path, edge-list path (with --features), "
                        "'karate', 'synthetic', or a name under $" + DATA_DIR_ENV)
    p.add_argument("--features", default=None,
                   help="feature TSV for edge-list datasets")
    p.add_argument("--manifest", default=None, help="manifest output path")
    p.add_argument("--config", default=None,
                   help="JSON file of option defaults (flags override it)")


def _add_selection_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=1, help="min typical picks per group")
    p.add_argument("--alpha", type=float, default=0.5,
                   help="typical-vs-divergent emphasis in [0,1]")
    p.add_argument("--sigma", type=float, default=1.0, help="density bandwidth")
    p.add_argument("--trees", type=int, default=None,
                   help="tree count (default: class count)")
    p.add_argument("--groups", choices=("tree", "oracle"), default="tree",
                   help="group constraint source")


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layers", type=int, default=None,
                   help="override the per-rate layer schedule")
    p.add_argument("--schedule", default="cora",
                   help="layer schedule name (cora/citeseer/pubmed/none)")
    p.add_argument("--test-size", type=int, default=1000)
    p.add_argument("--jobs", type=int, default=1, help="parallel runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnsel",
        description="Deterministic node selection and GCN split benchmarking")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="print dataset statistics")
    _add_dataset_args(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("golf", help="build and export the leading forest")
    _add_dataset_args(p)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--trees", type=int, default=None)
    p.add_argument("--out", default="forest.json")
    p.set_defaults(func=cmd_golf)

    p = sub.add_parser("select", help="select a label set deterministically")
    _add_dataset_args(p)
    _add_selection_args(p)
    p.add_argument("--rate", type=float, default=None, help="label rate")
    p.add_argument("--budget", type=int, default=None, help="label budget")
    p.add_argument("--jobs", type=int, default=1,
                   help="accepted for interface parity; selection is sequential")
    p.add_argument("--out", default="labels.json")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="train one GCN on a label set")
    _add_dataset_args(p)
    p.add_argument("--labels", default=None, help="labels.json from 'select'")
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--out", default="train.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("experiment", help="multi-run split benchmark")
    _add_dataset_args(p)
    _add_selection_args(p)
    _add_experiment_args(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--mode", choices=("random", "dns"), required=True)
    p.add_argument("--stratified", action="store_true",
                   help="class-stratified random splits")
    p.add_argument("--out", default="report.json")
    p.add_argument("--csv", default=None, help="also write flat CSV rows")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", help="parameter sensitivity sweep")
    _add_dataset_args(p)
    _add_selection_args(p)
    _add_experiment_args(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--param", choices=("sigma", "trees", "k", "alpha"), required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="random vs deterministic side by side")
    _add_dataset_args(p)
    _add_selection_args(p)
    _add_experiment_args(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    return parser


def _apply_config_file(args, argv) -> None:
    """Merge option defaults from --config; explicit flags win."""
    if not getattr(args, "config", None):
        return
    overrides = json.loads(Path(args.config).read_text())
    if not isinstance(overrides, dict):
        raise GraphFormatError(f"{args.config}: config must be a JSON object")
    given = {tok.split("=", 1)[0] for tok in argv if tok.startswith("--")}
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if hasattr(args, dest) and f"--{key}" not in given:
            setattr(args, dest, value)


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args, argv)
        return args.func(args)
    except (InfeasibleSelectionError, SizeGuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (GraphFormatError, GraphValidationError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
