"""
d_k probing: how large must the out-degree be before every grounded tree on
k vertices shows up in random out-regular digraphs.

Evidence is one-sided. A cell counts a trial as "found" when the heuristic
returned an embedding, as "proven_absent" only when the search exhausted the
whole space, and as "unresolved" otherwise.
"""
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from copy import deepcopy
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from services.digraph import Digraph
from services.embedder import heuristic_embed
from services.errors import InvalidInput
from services.generators import canonical_form, enumerate_grounded_trees, gen_out_regular

logger = logging.getLogger(__name__)

FOUND = "found"
PROVEN_ABSENT = "proven_absent"
UNRESOLVED = "unresolved"

CSV_FIELDS = ["k", "tree", "canonical", "d", "trials", "found", "proven_absent", "unresolved", "success_rate"]


@dataclass
class DkCell:
    tree: int
    d: int
    trials: int = 0
    found: int = 0
    proven_absent: int = 0
    unresolved: int = 0

    @property
    def success_rate(self) -> float:
        return self.found / self.trials if self.trials else 0.0

    def record(self, status: str) -> None:
        self.trials += 1
        if status == FOUND:
            self.found += 1
        elif status == PROVEN_ABSENT:
            self.proven_absent += 1
        else:
            self.unresolved += 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tree": self.tree,
            "d": self.d,
            "trials": self.trials,
            "found": self.found,
            "proven_absent": self.proven_absent,
            "unresolved": self.unresolved,
            "success_rate": round(self.success_rate, 6),
        }


@dataclass
class DkEstimate:
    k: int
    n: int
    d_values: List[int]
    trials: int
    budget: int
    seed: int
    trees: List[Digraph]
    cells: List[DkCell]
    warnings: List[str] = field(default_factory=list)

    def cell(self, tree: int, d: int) -> DkCell:
        for c in self.cells:
            if c.tree == tree and c.d == d:
                return c
        raise KeyError((tree, d))

    def min_d_all_found(self, tree: int) -> Optional[int]:
        """Smallest tested d at which every sampled digraph contained the tree"""
        for d in self.d_values:
            c = self.cell(tree, d)
            if c.trials and c.found == c.trials:
                return d
        return None

    def verdict(self) -> Dict[str, Any]:
        # upper: every tree seen in every trial at this d (sampling evidence only)
        # lower: some tree provably missing from a d-out-regular digraph, so d_k > d
        per_tree = [self.min_d_all_found(i) for i in range(len(self.trees))]
        upper = max(per_tree) if per_tree and all(d is not None for d in per_tree) else None
        absent = [c.d for c in self.cells if c.proven_absent]
        return {
            "upper_observation": upper,
            "lower_bound": max(absent) + 1 if absent else None,
            "unresolved_cells": sum(1 for c in self.cells if c.unresolved),
        }

    def csv_rows(self) -> List[Dict[str, Any]]:
        rows = []
        for c in sorted(self.cells, key=lambda c: (c.tree, c.d)):
            rows.append({
                "k": self.k,
                "tree": json.dumps([list(a) for a in _arcs(self.trees[c.tree])]),
                "canonical": canonical_form(self.trees[c.tree]),
                **{key: value for key, value in c.to_dict().items() if key != "tree"},
            })
        return rows

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "n": self.n,
            "d_values": list(self.d_values),
            "trials": self.trials,
            "budget": self.budget,
            "seed": self.seed,
            "trees": [
                {
                    "index": i,
                    "arcs": [list(a) for a in _arcs(T)],
                    "canonical": canonical_form(T),
                    "min_d_all_found": self.min_d_all_found(i),
                }
                for i, T in enumerate(self.trees)
            ],
            "cells": [c.to_dict() for c in self.cells],
            "verdict": self.verdict(),
            "warnings": list(self.warnings),
        }


def _arcs(T: Digraph) -> List[Tuple[int, int]]:
    return sorted(T.arcs)


def trial_seed(seed: int, d_index: int, trial: int) -> int:
    """Independent of scheduling: the same (seed, cell) always gives the same host"""
    return int(np.random.SeedSequence([seed, d_index, trial]).generate_state(1)[0])


# Top level so the process pool can pickle it
def _run_trial(job: Tuple[int, int, int, int, int, int, int, List[Digraph]]) -> Tuple[int, int, List[str]]:
    d_index, trial, n, d, budget, restarts, seed, trees = job
    s = trial_seed(seed, d_index, trial)
    D = gen_out_regular(n, d, seed=s)
    statuses = []
    for T in trees:
        result = heuristic_embed(D, T, budget=budget, restarts=restarts, seed=s)
        if result.found:
            statuses.append(FOUND)
        elif result.stats.get("complete"):
            statuses.append(PROVEN_ABSENT)
        else:
            statuses.append(UNRESOLVED)
    return d_index, trial, statuses


def estimate_dk(k: int, d_values: Sequence[int], n: int, trials: int, budget: Optional[int] = None,
                seed: Optional[int] = None, restarts: Optional[int] = None,
                workers: Optional[int] = None) -> DkEstimate:
    if k < 1 or k > Config.DK_MAX_ORDER:
        raise InvalidInput(f"k must lie in 1..{Config.DK_MAX_ORDER}, got {k}")
    d_values = sorted({int(d) for d in d_values})
    if not d_values:
        raise InvalidInput("d_values must not be empty")
    if d_values[0] < 0 or d_values[-1] >= n:
        raise InvalidInput(f"every d must satisfy 0 <= d < n={n}, got {d_values}")
    if trials < 1:
        raise InvalidInput(f"trials must be positive, got {trials}")
    budget = Config.HEURISTIC_BUDGET if budget is None else budget
    restarts = Config.HEURISTIC_RESTARTS if restarts is None else restarts
    seed = Config.WORKBENCH_SEED if seed is None else seed
    workers = Config.DK_WORKERS if workers is None else workers

    trees = enumerate_grounded_trees(k)
    logger.info(f"estimate_dk: k={k}, {len(trees)} grounded trees, d={d_values}, n={n}, "
                f"trials={trials}, budget={budget}, workers={workers}")

    jobs = [(i, t, n, d, budget, restarts, seed, trees) for i, d in enumerate(d_values) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial, jobs))
    else:
        outcomes = [_run_trial(job) for job in jobs]

    cells = {(ti, d): DkCell(ti, d) for ti in range(len(trees)) for d in d_values}
    # sort so aggregation order never depends on the pool
    for d_index, _, statuses in sorted(outcomes, key=lambda o: (o[0], o[1])):
        for ti, status in enumerate(statuses):
            cells[(ti, d_values[d_index])].record(status)

    estimate = DkEstimate(k, n, d_values, trials, budget, seed, trees,
                          [cells[key] for key in sorted(cells)])

    # soft check: success rate should not drop as d grows
    for ti in range(len(trees)):
        rates = [cells[(ti, d)].success_rate for d in d_values]
        for (d0, r0), (d1, r1) in zip(zip(d_values, rates), zip(d_values[1:], rates[1:])):
            if r1 < r0:
                message = f"tree {ti}: success rate fell from {r0:.3f} at d={d0} to {r1:.3f} at d={d1}"
                logger.warning(message)
                estimate.warnings.append(message)

    logger.info(f"estimate_dk done: {estimate.verdict()}")
    return estimate


# ==================== GRIDS ====================

def product_grid(base: Dict[str, Any], grid: Dict[str, Sequence[Any]]) -> Iterator[Tuple[Dict[str, Any], str]]:
    """
    Yields (params, description) for every combination of the grid values
    layered over a copy of base.
    """
    keys = sorted(grid)
    for values in itertools.product(*(grid[key] for key in keys)):
        params = deepcopy(base)
        parts = []
        for key, value in zip(keys, values):
            params[key] = deepcopy(value)
            label = "-".join(str(v) for v in value) if isinstance(value, (list, tuple)) else str(value)
            parts.append(f"{key}-{label}")
        yield params, "_".join(parts) or "base"


def load_grid(path: str) -> Iterator[Tuple[Dict[str, Any], str]]:
    """JSON file: {"base": {...estimate_dk kwargs}, "grid": {name: [values]}}"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            grid = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidInput(f"cannot read experiment grid {path}: {e}")
    if not isinstance(grid, dict) or not isinstance(grid.get("base", {}), dict) \
            or not isinstance(grid.get("grid", {}), dict):
        raise InvalidInput(f"experiment grid {path} must hold 'base' and 'grid' objects")
    return product_grid(grid.get("base", {}), grid.get("grid", {}))


_ESTIMATE_KEYS = {"k", "d_values", "n", "trials", "budget", "seed", "restarts", "workers"}


def run_grid(path: str, storage=None) -> List[Tuple[str, DkEstimate]]:
    results = []
    for params, description in load_grid(path):
        unknown = set(params) - _ESTIMATE_KEYS
        if unknown:
            raise InvalidInput(f"grid point {description} has unknown parameters {sorted(unknown)}")
        logger.info(f"grid point {description}")
        try:
            estimate = estimate_dk(**params)
        except TypeError as e:
            raise InvalidInput(f"grid point {description}: {e}")
        if storage is not None:
            storage.save_result(estimate.to_dict(), name=description, csv_rows=estimate.csv_rows(),
                                csv_fields=CSV_FIELDS)
        results.append((description, estimate))
    return results
