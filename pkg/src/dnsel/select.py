"""Deterministic label-set selection over a leading forest.

The objective to minimize is

    J = alpha * sum_{i in typical} 1/log(gamma_i)
        + (1 - alpha) * sum_{j in divergent} rho_j / layer_j

subject to a total budget and a minimum number of typical picks per group
(trees by default, true classes in oracle mode).  ``select_labels`` solves
it with an O(n log n) two-stream greedy; ``brute_force_select`` enumerates
exactly on size-guarded instances and serves as the test oracle.

The typical term is negative on gamma in (0, 1) while the divergent term is
positive, so with 0 < alpha < 1 the greedy fills the free budget from the
typical stream; the alpha = 0 and alpha = 1 extremes skip the zero-cost
stream entirely so the emphasis parameter stays meaningful.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .golf import LeadingForest, build_forest
from .graph_io import Graph

GAMMA_CLAMP = 1e-12

BRUTE_FORCE_GUARD = 10_000_000

DEFAULT_TREES_FALLBACK = 8


class InfeasibleSelectionError(ValueError):
    """Budget and per-group constraints cannot be satisfied together."""


class SizeGuardError(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class SelectionConfig:
    """Selection parameters.

    ``trees`` defaults to the dataset's class count when known (else 8);
    ``group_mode`` is ``"tree"`` (label-free, trees as group surrogates) or
    ``"oracle"`` (true classes, requires labels).
    """
    budget: int
    min_per_group: int = 1
    alpha: float = 0.5
    sigma: float = 1.0
    trees: int | None = None
    group_mode: str = "tree"

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.min_per_group < 0:
            raise ValueError(f"min_per_group must be >= 0, got {self.min_per_group}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.trees is not None and self.trees < 1:
            raise ValueError(f"trees must be >= 1, got {self.trees}")
        if self.group_mode not in ("tree", "oracle"):
            raise ValueError(f"unknown group_mode {self.group_mode!r}")


@dataclass
class LabelSet:
    """Selected nodes, split into typical and divergent, with the objective."""
    typical: list[int]
    divergent: list[int]
    objective: float
    config: SelectionConfig
    num_groups: int = 0

    @property
    def nodes(self) -> list[int]:
        return self.typical + self.divergent

    def to_json(self) -> str:
        payload = {
            "typical": self.typical,
            "divergent": self.divergent,
            "objective": self.objective,
            "num_groups": self.num_groups,
            "config": {
                "budget": self.config.budget,
                "min_per_group": self.config.min_per_group,
                "alpha": self.config.alpha,
                "sigma": self.config.sigma,
                "trees": self.config.trees,
                "group_mode": self.config.group_mode,
            },
        }
        return json.dumps(payload, sort_keys=True)

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def budget_for_rate(rate: float, num_nodes: int) -> int:
    """Label budget for a labeling rate: round(rate * n)."""
    if not 0 < rate <= 1:
        raise ValueError(f"label rate must be in (0, 1], got {rate}")
    return int(round(rate * num_nodes))


def typicality_cost(gamma: np.ndarray) -> np.ndarray:
    """q(gamma) = 1/log(gamma), clamped away from the singularities at 0 and 1."""
    g = np.clip(gamma, GAMMA_CLAMP, 1.0 - GAMMA_CLAMP)
    return 1.0 / np.log(g)


def divergence_cost(forest: LeadingForest) -> np.ndarray:
    """rho / layer; low density deep in a tree means cheap to pick as divergent."""
    return forest.rho / forest.layer


def evaluate_objective(forest: LeadingForest, typical, divergent, alpha: float) -> float:
    """Objective value for an explicit typical/divergent assignment."""
    typ = np.asarray(sorted(typical), dtype=np.int64)
    div = np.asarray(sorted(divergent), dtype=np.int64)
    if np.intersect1d(typ, div).size:
        raise ValueError("typical and divergent sets overlap")
    total = 0.0
    if typ.size:
        total += alpha * float(typicality_cost(forest.gamma[typ]).sum())
    if div.size:
        total += (1.0 - alpha) * float(divergence_cost(forest)[div].sum())
    return total


def _group_assignment(forest: LeadingForest, config: SelectionConfig,
                      labels: np.ndarray | None) -> np.ndarray:
    if config.group_mode == "oracle":
        if labels is None:
            raise ValueError("group_mode='oracle' requires node labels")
        return np.asarray(labels, dtype=np.int64)
    return forest.tree_id.astype(np.int64)


def _check_budget(forest: LeadingForest, config: SelectionConfig) -> None:
    if config.budget > forest.num_nodes:
        raise ValueError(
            f"budget {config.budget} exceeds node count {forest.num_nodes}")


def _forced_typical(forest: LeadingForest, config: SelectionConfig,
                    groups: np.ndarray) -> tuple[list[int], np.ndarray]:
    """Per-group top-gamma picks satisfying the minimum-k constraint."""
    k = config.min_per_group
    group_ids, counts = np.unique(groups[groups >= 0], return_counts=True)
    if k == 0:
        return [], group_ids
    if k * group_ids.size > config.budget:
        raise InfeasibleSelectionError(
            f"min_per_group={k} over {group_ids.size} groups exceeds "
            f"budget {config.budget}")
    if counts.size and counts.min() < k:
        small = group_ids[int(np.argmin(counts))]
        raise InfeasibleSelectionError(
            f"group {small} has fewer than {k} members")
    # one pass: nodes ordered by (group, gamma desc, index), then the first
    # k per group sliced out
    gamma = forest.gamma
    eligible = np.flatnonzero(groups >= 0)
    order = eligible[np.lexsort((eligible, -gamma[eligible], groups[eligible]))]
    starts = np.searchsorted(groups[order], group_ids, side="left")
    typical: list[int] = []
    for start in starts:
        typical.extend(int(x) for x in order[start:start + k])
    return typical, group_ids


def select_labels(forest: LeadingForest, config: SelectionConfig,
                  labels: np.ndarray | None = None) -> LabelSet:
    """Greedy minimization of the selection objective.

    Step 1 takes each group's top-k gamma nodes as typical; the remaining
    budget is filled by comparing the heads of two cost-sorted streams
    (typical cost alpha*q(gamma), divergent cost (1-alpha)*rho/layer), ties
    preferring the typical stream and then the lower node index.
    """
    _check_budget(forest, config)
    groups = _group_assignment(forest, config, labels)
    typical, group_ids = _forced_typical(forest, config, groups)
    picked = np.zeros(forest.num_nodes, dtype=bool)
    picked[typical] = True

    alpha = config.alpha
    typ_cost = alpha * typicality_cost(forest.gamma)
    div_cost = (1.0 - alpha) * divergence_cost(forest)
    remaining = np.flatnonzero(~picked)
    typ_order = remaining[np.lexsort((remaining, typ_cost[remaining]))]
    div_order = remaining[np.lexsort((remaining, div_cost[remaining]))]

    divergent: list[int] = []
    ti = di = 0
    for _ in range(config.budget - len(typical)):
        while picked[typ_order[ti]]:
            ti += 1
        while picked[div_order[di]]:
            di += 1
        if alpha == 0.0:
            take_typical = False
        elif alpha == 1.0:
            take_typical = True
        else:
            take_typical = typ_cost[typ_order[ti]] <= div_cost[div_order[di]]
        node = int(typ_order[ti]) if take_typical else int(div_order[di])
        (typical if take_typical else divergent).append(node)
        picked[node] = True

    objective = evaluate_objective(forest, typical, divergent, alpha)
    return LabelSet(typical=typical, divergent=divergent, objective=objective,
                    config=config, num_groups=int(group_ids.size))


def brute_force_select(forest: LeadingForest, config: SelectionConfig,
                       labels: np.ndarray | None = None) -> LabelSet:
    """Exact minimizer by exhaustive enumeration; test oracle only.

    Enumerates every size-l node subset and every typical/divergent
    bipartition satisfying the per-group constraint.  Refuses instances
    where subsets times bipartitions exceeds the 1e7 guard.
    """
    _check_budget(forest, config)
    n, l = forest.num_nodes, config.budget
    work = math.comb(n, l) * (2 ** l)
    if work > BRUTE_FORCE_GUARD:
        raise SizeGuardError(
            f"{work} assignments exceed the {BRUTE_FORCE_GUARD} guard")
    groups = _group_assignment(forest, config, labels)
    k = config.min_per_group
    group_ids = np.unique(groups[groups >= 0])
    if k > 0 and k * group_ids.size > l:
        raise InfeasibleSelectionError(
            f"min_per_group={k} over {group_ids.size} groups exceeds budget {l}")

    qv = typicality_cost(forest.gamma)
    dv = divergence_cost(forest)
    masks = ((np.arange(2 ** l)[:, None] >> np.arange(l)) & 1).astype(bool)

    best_key = None
    best_sets = None
    for combo in itertools.combinations(range(n), l):
        sub = np.asarray(combo, dtype=np.int64)
        feasible = np.ones(masks.shape[0], dtype=bool)
        if k > 0:
            counts_ok = True
            for g in group_ids:
                member = groups[sub] == g
                if member.sum() < k:
                    counts_ok = False
                    break
                feasible &= masks[:, member].sum(axis=1) >= k
            if not counts_ok or not feasible.any():
                continue
        scores = masks @ (config.alpha * qv[sub]) \
            + (~masks) @ ((1.0 - config.alpha) * dv[sub])
        scores[~feasible] = np.inf
        for m in np.flatnonzero(scores == scores.min()):
            typ = tuple(int(x) for x in sub[masks[m]])
            div = tuple(int(x) for x in sub[~masks[m]])
            key = (float(scores[m]), typ, div)
            if best_key is None or key < best_key:
                best_key = key
                best_sets = (typ, div)
    if best_sets is None:
        raise InfeasibleSelectionError("no feasible assignment exists")
    typ, div = best_sets
    objective = evaluate_objective(forest, typ, div, config.alpha)
    return LabelSet(typical=list(typ), divergent=list(div), objective=objective,
                    config=config, num_groups=int(group_ids.size))


def resolve_trees(config: SelectionConfig, graph: Graph) -> SelectionConfig:
    """Fill the default tree count: class count when known, else 8."""
    if config.trees is not None:
        return config
    trees = graph.num_classes if graph.num_classes > 0 else DEFAULT_TREES_FALLBACK
    return replace(config, trees=min(trees, graph.num_nodes))


def dns(graph: Graph, config: SelectionConfig) -> LabelSet:
    """End-to-end deterministic node selection on a graph.

    Pure function of (graph, config): aggregation, density, leading links,
    cut, then greedy selection.  No randomness anywhere.
    """
    config = resolve_trees(config, graph)
    forest = build_forest(graph, config.sigma, config.trees)
    labels = graph.labels if config.group_mode == "oracle" else None
    return select_labels(forest, config, labels)
