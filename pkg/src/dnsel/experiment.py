"""Benchmark protocol: random label splits vs deterministic selection.

Each experiment trains one GCN per run and evaluates on a fresh 1000-node
test split.  Random mode draws a new label split every run; deterministic
mode reuses the single selected label set in every run while test splits
still vary.  Run seeds are paired across modes so the comparison is like
for like, and aggregation is order-independent (accuracies keyed by run).
"""

from __future__ import annotations

import csv
import io
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .gcn import TrainConfig, evaluate, train
from .graph_io import Graph
from .select import (
    InfeasibleSelectionError,
    SelectionConfig,
    budget_for_rate,
    dns,
    resolve_trees,
)

DEFAULT_TEST_SIZE = 1000
DEFAULT_RUNS = 10

# layers per label rate for the two citation benchmarks; small-rate runs on
# the large benchmark use 4 layers across the board
LAYER_SCHEDULES = {
    "cora": {0.005: 4, 0.01: 3, 0.02: 3, 0.03: 2, 0.04: 2},
    "citeseer": {0.005: 3, 0.01: 3, 0.02: 3, 0.03: 2, 0.04: 2},
    "pubmed": {0.0003: 4, 0.0005: 4, 0.001: 4},
}


def layers_for_rate(rate: float, schedule: str = "cora", default: int = 2) -> int:
    """Layer count for a label rate; falls back to ``default`` off-schedule."""
    table = LAYER_SCHEDULES.get(schedule)
    if not table:
        return default
    for known, layers in table.items():
        if abs(known - rate) < 1e-12:
            return layers
    return default


@dataclass
class ExperimentReport:
    """Per-run accuracies for one (dataset, rate, mode) cell."""
    mode: str
    rate: float
    budget: int
    base_seed: int
    accuracies: list[float]
    runtimes: list[float]
    split: dict
    notes: list[str] = field(default_factory=list)

    @property
    def runs(self) -> int:
        return len(self.accuracies)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        """Sample standard deviation of the per-run accuracies."""
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "rate": self.rate,
            "budget": self.budget,
            "base_seed": self.base_seed,
            "runs": self.runs,
            "accuracies": self.accuracies,
            "mean": self.mean,
            "std": self.std,
            "runtimes_sec": self.runtimes,
            "split": self.split,
            "notes": self.notes,
        }


def _rng(*path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(path)))


def _train_seed(base_seed: int, run: int) -> int:
    return int(np.random.SeedSequence([base_seed, run, 2]).generate_state(1)[0])


def _random_label_split(eligible: np.ndarray, labels: np.ndarray, budget: int,
                        rng: np.random.Generator, stratified: bool) -> np.ndarray:
    if not stratified:
        return np.sort(rng.choice(eligible, size=budget, replace=False))
    classes = np.unique(labels[eligible])
    quotas = {}
    for c in classes:
        members = eligible[labels[eligible] == c]
        quotas[int(c)] = members
    picked: list[int] = []
    # proportional quota, then top off uniformly from the rest
    for c, members in quotas.items():
        take = min(len(members), int(round(budget * len(members) / eligible.size)))
        if take:
            picked.extend(rng.choice(members, size=take, replace=False).tolist())
    picked = picked[:budget]
    if len(picked) < budget:
        rest = np.setdiff1d(eligible, np.asarray(picked, dtype=np.int64))
        picked.extend(rng.choice(rest, size=budget - len(picked), replace=False).tolist())
    return np.sort(np.asarray(picked, dtype=np.int64))


def _test_split(eligible: np.ndarray, labeled: np.ndarray, test_size: int,
                rng: np.random.Generator, notes: list[str]) -> np.ndarray:
    pool = np.setdiff1d(eligible, labeled)
    if pool.size < test_size:
        msg = (f"test pool has {pool.size} nodes, below the requested "
               f"{test_size}; using all of them")
        warnings.warn(msg)
        notes.append(msg)
        return pool
    return np.sort(rng.choice(pool, size=test_size, replace=False))


def run_experiment(graph: Graph, rate: float, mode: str,
                   runs: int = DEFAULT_RUNS, base_seed: int = 0,
                   train_config: TrainConfig | None = None,
                   selection: SelectionConfig | None = None,
                   num_layers: int | None = None,
                   layer_schedule: str = "cora",
                   test_size: int = DEFAULT_TEST_SIZE,
                   stratified: bool = False,
                   jobs: int = 1) -> ExperimentReport:
    """Train/evaluate ``runs`` GCNs under one split policy.

    ``mode`` is ``"random"`` (fresh uniform label split each run) or
    ``"dns"`` (one deterministic label set shared by all runs).  Paired run
    seeds drive test sampling and model initialization identically in both
    modes.
    """
    if mode not in ("random", "dns"):
        raise ValueError(f"unknown mode {mode!r}")
    if graph.labels is None:
        raise ValueError("experiment requires ground-truth labels")
    budget = budget_for_rate(rate, graph.num_nodes)
    eligible = np.flatnonzero(graph.labels >= 0)
    if budget > eligible.size:
        raise ValueError(f"budget {budget} exceeds {eligible.size} labeled nodes")

    layers = num_layers if num_layers is not None \
        else layers_for_rate(rate, layer_schedule)
    base_train = train_config or TrainConfig()
    notes: list[str] = []

    dns_nodes = None
    split: dict = {"policy": mode, "stratified": stratified}
    if mode == "dns":
        sel = selection or SelectionConfig(budget=budget)
        if sel.budget != budget:
            sel = replace(sel, budget=budget)
        sel = resolve_trees(sel, graph)
        label_set = dns(graph, sel)
        dns_nodes = np.asarray(label_set.nodes, dtype=np.int64)
        unlabeled = dns_nodes[graph.labels[dns_nodes] < 0]
        if unlabeled.size:
            msg = (f"{unlabeled.size} selected nodes have no ground-truth label "
                   "and are dropped from the train set")
            warnings.warn(msg)
            notes.append(msg)
            dns_nodes = dns_nodes[graph.labels[dns_nodes] >= 0]
        dns_nodes = np.sort(dns_nodes)
        split.update({
            "selection": {
                "budget": sel.budget, "min_per_group": sel.min_per_group,
                "alpha": sel.alpha, "sigma": sel.sigma, "trees": sel.trees,
                "group_mode": sel.group_mode,
            },
            "typical": label_set.typical,
            "divergent": label_set.divergent,
            "objective": label_set.objective,
        })
    else:
        split["seeds"] = [base_seed + r for r in range(runs)]

    def one_run(run: int) -> tuple[float, float]:
        run_notes: list[str] = []
        if mode == "random":
            label_nodes = _random_label_split(
                eligible, graph.labels, budget, _rng(base_seed, run, 0), stratified)
        else:
            label_nodes = dns_nodes
        test_nodes = _test_split(eligible, label_nodes, test_size,
                                 _rng(base_seed, run, 1), run_notes)
        cfg = replace(base_train, num_layers=layers,
                      seed=_train_seed(base_seed, run))
        start = time.perf_counter()
        model, _ = train(graph, (label_nodes, graph.labels[label_nodes]), cfg)
        elapsed = time.perf_counter() - start
        acc = evaluate(model, graph, test_nodes, label_nodes)
        notes.extend(run_notes)
        return acc, elapsed

    indices = list(range(runs))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one_run, indices))
    else:
        results = [one_run(r) for r in indices]
    accuracies = [float(a) for a, _ in results]
    runtimes = [float(t) for _, t in results]
    return ExperimentReport(mode=mode, rate=rate, budget=budget,
                            base_seed=base_seed, accuracies=accuracies,
                            runtimes=runtimes, split=split, notes=notes)


def report_rows(report: ExperimentReport) -> list[dict]:
    """Flat CSV rows: rate, mode, run, accuracy."""
    return [
        {"rate": report.rate, "mode": report.mode, "run": run,
         "accuracy": acc}
        for run, acc in enumerate(report.accuracies)
    ]


def write_csv(reports: list[ExperimentReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["rate", "mode", "run", "accuracy"])
        writer.writeheader()
        for report in reports:
            for row in report_rows(report):
                writer.writerow(row)


@dataclass
class SweepEntry:
    param: str
    value: float
    report: ExperimentReport | None
    skipped: str | None = None


def sensitivity_sweep(graph: Graph, rate: float, param: str, values,
                      runs: int = DEFAULT_RUNS, base_seed: int = 0,
                      selection: SelectionConfig | None = None,
                      **experiment_kwargs) -> list[SweepEntry]:
    """One deterministic-split experiment per parameter value.

    ``param`` is one of sigma/trees/k/alpha; infeasible values (for example a
    per-group minimum that overshoots the budget) are skipped with a warning
    instead of aborting the sweep.
    """
    if param not in ("sigma", "trees", "k", "alpha"):
        raise ValueError(f"unknown sweep parameter {param!r}")
    if not values:
        raise ValueError("values must be nonempty")
    budget = budget_for_rate(rate, graph.num_nodes)
    base = selection or SelectionConfig(budget=budget)
    entries: list[SweepEntry] = []
    for value in values:
        if param == "sigma":
            sel = replace(base, sigma=float(value))
        elif param == "trees":
            sel = replace(base, trees=int(value))
        elif param == "k":
            sel = replace(base, min_per_group=int(value))
        else:
            sel = replace(base, alpha=float(value))
        try:
            report = run_experiment(graph, rate, "dns", runs=runs,
                                    base_seed=base_seed, selection=sel,
                                    **experiment_kwargs)
            entries.append(SweepEntry(param=param, value=float(value),
                                      report=report))
        except (InfeasibleSelectionError, ValueError) as exc:
            warnings.warn(f"sweep {param}={value} skipped: {exc}")
            entries.append(SweepEntry(param=param, value=float(value),
                                      report=None, skipped=str(exc)))
    return entries


def sweep_csv(entries: list[SweepEntry]) -> str:
    """CSV text for a sweep: one row per run plus status for skipped values."""
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=["param", "value", "run", "accuracy", "mean", "std", "status"])
    writer.writeheader()
    for entry in entries:
        if entry.report is None:
            writer.writerow({"param": entry.param, "value": entry.value,
                             "run": "", "accuracy": "", "mean": "", "std": "",
                             "status": f"skipped: {entry.skipped}"})
            continue
        for run, acc in enumerate(entry.report.accuracies):
            writer.writerow({"param": entry.param, "value": entry.value,
                             "run": run, "accuracy": acc,
                             "mean": entry.report.mean,
                             "std": entry.report.std, "status": "ok"})
    return buf.getvalue()
