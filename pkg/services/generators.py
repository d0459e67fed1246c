"""
Instance Generators
Seeded random out-regular digraphs, brooms, broom digraphs and grounded trees,
exhaustive oriented-tree enumeration, and the favorable broom digraphs the
constructive embedder is exercised on.
"""
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config import Config
from services.brooms import Broom, BroomDigraph, assemble_broom_digraph, validate_broom
from services.digraph import Digraph, from_arcs
from services.errors import InternalBug, InvalidInput, PipelineFailure
from services.grounded import grounded_profile, is_oriented_tree
from services.models import GenModel
from services.lll_subsample import SubsampleParams
from services.restructure import CleanUpParams

logger = logging.getLogger(__name__)


def _rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(Config.WORKBENCH_SEED if seed is None else seed)


# ==================== DIGRAPHS ====================

def gen_out_regular(n: int, d: int, seed: Optional[int] = None) -> Digraph:
    """Every vertex picks d distinct out-neighbors uniformly among the others"""
    if n < 1 or d < 0:
        raise InvalidInput(f"need n >= 1 and d >= 0, got n={n}, d={d}")
    if d >= n:
        raise InvalidInput(f"out-degree {d} needs more than {n} vertices")
    rng = _rng(seed)
    arcs = []
    for v in range(n if d else 0):
        picks = rng.choice(n - 1, size=d, replace=False)
        arcs.extend((v, int(w) + (1 if w >= v else 0)) for w in picks)
    return Digraph(n, arcs)


# ==================== BROOMS ====================

def _grow(arcs: List[Tuple[int, int]], v: int, height: int, d: int, next_id: List[int]) -> List[int]:
    """Balanced d-ary subtree below v in preorder ids; returns its leaves"""
    if height == 0:
        return [v]
    leaves = []
    for _ in range(d):
        c = next_id[0]
        next_id[0] += 1
        arcs.append((v, c))
        leaves.extend(_grow(arcs, c, height - 1, d, next_id))
    return leaves


def _broom_arcs(k: int, d: int, ell: int, subdivisions: Sequence[int], root: int,
                next_id: List[int]) -> Tuple[List[Tuple[int, int]], List[int]]:
    arcs: List[Tuple[int, int]] = []
    if ell <= k:
        return arcs, _grow(arcs, root, ell, d, next_id)
    leaves = []
    for s in subdivisions:
        v = next_id[0]
        next_id[0] += 1
        arcs.append((root, v))
        for _ in range(s):
            w = next_id[0]
            next_id[0] += 1
            arcs.append((v, w))
            v = w
        leaves.extend(_grow(arcs, v, k, d, next_id))
    return arcs, leaves


def _check_broom_params(k: int, d: int, ell: int) -> None:
    if k < 0 or d < 1:
        raise InvalidInput(f"need k >= 0 and d >= 1, got k={k}, d={d}")
    if not 1 <= ell <= k + 1:
        raise InvalidInput(f"ell must lie in 1..{k + 1}, got {ell}")


def gen_broom(k: int, d: int, ell: int, subdivisions: Optional[Sequence[int]] = None,
              seed: Optional[int] = None, max_subdivision: int = 2) -> Broom:
    """
    (k,d)-broom rooted at 0 with preorder ids. For ell = k+1 the root's i-th
    out-arc carries subdivisions[i] extra vertices (random when omitted).
    """
    _check_broom_params(k, d, ell)
    if ell == k + 1:
        if subdivisions is None:
            subdivisions = [int(s) for s in _rng(seed).integers(0, max_subdivision + 1, size=d)]
        if len(subdivisions) != d or any(s < 0 for s in subdivisions):
            raise InvalidInput(f"need {d} non-negative subdivision counts, got {list(subdivisions)}")
    elif subdivisions:
        raise InvalidInput(f"subdivisions only apply when ell = k+1 = {k + 1}")
    next_id = [1]
    arcs, _ = _broom_arcs(k, d, ell, subdivisions or (), 0, next_id)
    report = validate_broom(from_arcs(next_id[0], arcs), 0, k, d)
    if not report.valid:
        raise InternalBug("generated broom is invalid", report.to_dict())
    return report.value


def broom_leaf_count(k: int, d: int, ell: int) -> int:
    return d ** ell if ell <= k else d ** (k + 1)


def gen_broom_digraph(k: int, d: int, n_roots: int, mix: Optional[Sequence[int]] = None,
                      seed: Optional[int] = None, max_subdivision: int = 2) -> BroomDigraph:
    """
    Roots 0..n_roots-1, each owning a broom with its own height drawn from `mix`
    (default 1..k+1) and fresh internal vertices; leaves are distinct other roots.
    Heights needing more leaves than n_roots - 1 are left out of the draw.
    """
    if n_roots < 2:
        raise InvalidInput(f"a broom digraph needs at least 2 roots, got {n_roots}")
    mix = list(mix) if mix else list(range(1, k + 2))
    for ell in mix:
        _check_broom_params(k, d, ell)
    feasible = [ell for ell in mix if broom_leaf_count(k, d, ell) <= n_roots - 1]
    if not feasible:
        raise InvalidInput(f"no broom height in {mix} fits {n_roots} roots at d={d}")
    rng = _rng(seed)
    next_id = [n_roots]
    plans = []
    for r in range(n_roots):
        ell = int(rng.choice(feasible))
        subdivisions = [int(s) for s in rng.integers(0, max_subdivision + 1, size=d)] if ell == k + 1 else ()
        arcs, leaf_slots = _broom_arcs(k, d, ell, subdivisions, r, next_id)
        others = [v for v in range(n_roots) if v != r]
        chosen = rng.choice(len(others), size=len(leaf_slots), replace=False)
        rename = {slot: others[int(i)] for slot, i in zip(leaf_slots, chosen)}
        plans.append((r, [(u, rename.get(v, v)) for u, v in arcs]))

    # leaf slots were given ids too; squeeze the internal ids down
    used = sorted({v for _, arcs in plans for a in arcs for v in a if v >= n_roots})
    compact = {v: n_roots + i for i, v in enumerate(used)}
    n = n_roots + len(used)
    trees = {r: from_arcs(n, [(compact.get(u, u), compact.get(v, v)) for u, v in arcs]) for r, arcs in plans}
    result = assemble_broom_digraph(n, trees, k, d)
    logger.info(f"generated ({k},{d})-broom digraph: {result.summary()}")
    return result


# ==================== TREES ====================

def _orient(edges: Sequence[Tuple[int, int]], mask: int) -> List[Tuple[int, int]]:
    return [(u, v) if mask >> i & 1 else (v, u) for i, (u, v) in enumerate(edges)]


def gen_grounded_tree(order: int, seed: Optional[int] = None, max_grounded_only: bool = False,
                      attempts: Optional[int] = None) -> Digraph:
    """Random oriented tree (uniform labelled shape, uniform orientation) kept when grounded"""
    if order < 1:
        raise InvalidInput(f"tree order must be positive, got {order}")
    if order == 1:
        return Digraph(1, [])
    attempts = Config.GROUNDED_SAMPLE_ATTEMPTS if attempts is None else attempts
    rng = _rng(seed)
    for _ in range(attempts):
        if order == 2:
            edges = [(0, 1)]
        else:
            sequence = [int(x) for x in rng.integers(0, order, size=order - 2)]
            edges = sorted(nx.from_prufer_sequence(sequence).edges())
        mask = int(rng.integers(0, 2 ** len(edges)))
        T = Digraph(order, _orient(edges, mask))
        profile = grounded_profile(T)
        if profile.max_grounded if max_grounded_only else profile.grounded:
            return T
    raise PipelineFailure(f"no grounded tree of order {order} in {attempts} attempts", step="sample")


def canonical_form(T: Digraph) -> str:
    """Direction-aware AHU code, minimized over all choices of root"""
    if not is_oriented_tree(T):
        raise InvalidInput(f"expected an oriented tree, got {T!r}")

    def encode(v: int, parent: Optional[int]) -> str:
        parts = []
        for c in T.out_neighbors(v):
            if c != parent:
                parts.append(">" + encode(c, v))
        for c in T.in_neighbors(v):
            if c != parent:
                parts.append("<" + encode(c, v))
        return "(" + "".join(sorted(parts)) + ")"

    return min(encode(v, None) for v in T.vertices())


def enumerate_oriented_trees(order: int) -> List[Digraph]:
    """One oriented tree per isomorphism class, ordered by canonical form"""
    if order < 1:
        raise InvalidInput(f"tree order must be positive, got {order}")
    if order > Config.ENUMERATION_MAX_ORDER:
        raise InvalidInput(f"enumeration is limited to order {Config.ENUMERATION_MAX_ORDER}, got {order}")
    if order == 1:
        return [Digraph(1, [])]
    shapes = [[(0, 1)]] if order == 2 else [sorted(g.edges()) for g in nx.nonisomorphic_trees(order)]
    found: Dict[str, Digraph] = {}
    for edges in shapes:
        for mask in range(2 ** len(edges)):
            T = Digraph(order, _orient(edges, mask))
            found.setdefault(canonical_form(T), T)
    return [found[code] for code in sorted(found)]


def enumerate_grounded_trees(order: int, max_grounded_only: bool = False) -> List[Digraph]:
    trees = []
    for T in enumerate_oriented_trees(order):
        profile = grounded_profile(T)
        if profile.max_grounded if max_grounded_only else profile.grounded:
            trees.append(T)
    return trees


# ==================== FAVORABLE INSTANCES ====================

def favorable_degree(order: int) -> int:
    levels = order - 1
    return 2 if levels <= 1 else 2 * 4 ** (levels - 1)


def favorable_schedule(d: int, levels: int, cap: int = 1000,
                       seed: Optional[int] = None) -> Tuple[List[CleanUpParams], List[int]]:
    """Keep every arc; each level halves the degree twice (extraction, then typing at k=2)"""
    base = Config.WORKBENCH_SEED if seed is None else seed
    schedule, degrees = [], [d]
    for j in range(levels):
        broom_target = math.ceil(degrees[-1] / 2)
        target = math.ceil(broom_target / 2)
        params = SubsampleParams(p_keep=1.0, outdeg_floor=1, indeg_root_threshold=2,
                                 broom_target=broom_target, resample_cap=cap, rng_seed=base + j)
        schedule.append(CleanUpParams(params, target))
        degrees.append(target)
    return schedule, degrees


def gen_favorable(T: Digraph, seed: Optional[int] = None) -> Tuple[BroomDigraph, List[CleanUpParams], Dict[str, Any]]:
    """
    Complete height-2 broom digraph on d^2+1 roots: root i owns d internal
    vertices whose leaf blocks partition the other roots in id order, so every
    root has in-degree d^2 and every root reaches every other root in 2 arcs.
    """
    if not is_oriented_tree(T) or not grounded_profile(T).max_grounded:
        raise InvalidInput("favorable instances are built for max-grounded trees")
    if T.order > Config.FAVORABLE_MAX_ORDER:
        raise InvalidInput(f"favorable instances support trees up to order {Config.FAVORABLE_MAX_ORDER}, "
                           f"got {T.order}")
    k = 2
    levels = T.order - 1
    d = favorable_degree(T.order)
    m = d * d + 1
    q = d * m
    roots = list(range(q, q + m))
    trees = {}
    for i, r in enumerate(roots):
        leaves = [w for w in roots if w != r]
        arcs = []
        for j in range(d):
            c = d * i + j
            arcs.append((r, c))
            arcs.extend((c, w) for w in leaves[j * d:(j + 1) * d])
        trees[r] = from_arcs(q + m, arcs)
    B = assemble_broom_digraph(q + m, trees, k, d)
    schedule, degrees = favorable_schedule(d, levels, seed=seed)
    manifest = {
        "k": k,
        "d": d,
        "roots": m,
        "levels": levels,
        "degrees": degrees,
        "engineered": [
            "every root has in-degree d^2 >= 2, so the first clean-up keeps all roots",
            "all brooms have height 2, so walks of a fixed length from a root end uniformly",
            "every arc is kept (p_keep = 1), so the subsampling never resamples"
        ]
    }
    return B, schedule, manifest


def uniform_schedule(levels: int, p_keep: float, outdeg_floor: float, indeg_root_threshold: float,
                     broom_target: int, target_degree: int, cap: Optional[int] = None,
                     seed: Optional[int] = None) -> List[CleanUpParams]:
    """Same clean-up parameters at every level, seeds seed, seed+1, ..."""
    base = Config.WORKBENCH_SEED if seed is None else seed
    return [
        CleanUpParams(SubsampleParams(p_keep, outdeg_floor, indeg_root_threshold, broom_target, cap, base + j),
                      target_degree)
        for j in range(levels)
    ]


def generate(model: str, params: Dict[str, Any]) -> Any:
    """Dispatch shared by the CLI and the HTTP layer"""
    try:
        model = GenModel(model)
    except ValueError:
        raise InvalidInput(f"unknown generator model {model!r}; choose from {[m.value for m in GenModel]}")
    seed = params.get("seed")
    try:
        if model == GenModel.OUT_REGULAR:
            return gen_out_regular(int(params["n"]), int(params["d"]), seed)
        if model == GenModel.BROOM:
            return gen_broom(int(params["k"]), int(params["d"]), int(params["ell"]),
                             params.get("subdivisions"), seed)
        if model == GenModel.BROOM_DIGRAPH:
            return gen_broom_digraph(int(params["k"]), int(params["d"]), int(params["n_roots"]),
                                     params.get("mix"), seed)
        if model == GenModel.GROUNDED_TREE:
            return gen_grounded_tree(int(params["order"]), seed, bool(params.get("max_grounded_only", False)))
        return gen_favorable(params["tree"], seed)
    except KeyError as e:
        raise InvalidInput(f"generator {model.value} needs parameter {e.args[0]!r}")
