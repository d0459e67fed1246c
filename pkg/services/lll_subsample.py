"""
Arc Subsampling
Random sub-digraph H of a broom digraph in which every full-degree vertex keeps
more than `outdeg_floor` out-arcs and every low-in-degree root keeps at most one
in-arc, found by local resampling, followed by the deterministic extraction of a
broom digraph whose roots all have high in-degree in the original digraph.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, List, Optional, Set, Tuple

import numpy as np

from config import Config
from services.brooms import BroomDigraph, assemble_broom_digraph
from services.digraph import Digraph, VertexSet, from_arcs, reachable
from services.errors import InternalBug, InvalidInput, SubsampleFailure
from services.restructure import extract_broom, max_extractable_degree

logger = logging.getLogger(__name__)

EVENT_A = "A"
EVENT_B = "B"


@dataclass
class SubsampleParams:
    p_keep: float
    outdeg_floor: float
    indeg_root_threshold: float
    broom_target: int
    resample_cap: Optional[int] = None
    rng_seed: Optional[int] = None

    def __post_init__(self):
        if self.resample_cap is None:
            self.resample_cap = Config.RESAMPLE_CAP
        if self.rng_seed is None:
            self.rng_seed = Config.WORKBENCH_SEED
        if not 0 < self.p_keep <= 1:
            raise InvalidInput(f"p_keep must lie in (0, 1], got {self.p_keep}")
        if self.outdeg_floor < 0:
            raise InvalidInput(f"outdeg_floor must be non-negative, got {self.outdeg_floor}")
        if self.indeg_root_threshold <= 0:
            raise InvalidInput(f"indeg_root_threshold must be positive, got {self.indeg_root_threshold}")
        if self.broom_target < 1:
            raise InvalidInput(f"broom_target must be at least 1, got {self.broom_target}")
        if self.resample_cap < 1:
            raise InvalidInput(f"resample_cap must be at least 1, got {self.resample_cap}")

    @classmethod
    def for_degree(cls, d: int, k: int, seed: Optional[int] = None, cap: Optional[int] = None) -> "SubsampleParams":
        """Parameters of the existence proof for a (k,d)-broom digraph"""
        return cls(
            p_keep=d ** (-2 / 3),
            outdeg_floor=d ** (1 / 3) / 2,
            indeg_root_threshold=d ** 0.1,
            broom_target=max(1, math.floor(d ** (1 / (7 * k)))),
            resample_cap=cap,
            rng_seed=seed
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p_keep": self.p_keep,
            "outdeg_floor": self.outdeg_floor,
            "indeg_root_threshold": self.indeg_root_threshold,
            "broom_target": self.broom_target,
            "resample_cap": self.resample_cap,
            "rng_seed": self.rng_seed
        }


@dataclass(frozen=True)
class ResampleRound:
    round: int
    event: str
    vertex: int
    resampled: int
    remaining: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "round": self.round,
            "event": self.event,
            "vertex": self.vertex,
            "resampled": self.resampled,
            "remaining": self.remaining
        }


@dataclass
class SubsampleState:
    H: Digraph
    U: VertexSet
    W: VertexSet
    violated_A: VertexSet = frozenset()
    violated_B: VertexSet = frozenset()
    rounds_used: int = 0
    round_log: List[ResampleRound] = field(default_factory=list)
    condition: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "arcs_kept": self.H.size,
            "U": len(self.U),
            "W": len(self.W),
            "violated_A": sorted(self.violated_A),
            "violated_B": sorted(self.violated_B),
            "rounds_used": self.rounds_used,
            "local_lemma_condition": self.condition
        }


def local_lemma_condition(d: int) -> Dict[str, Any]:
    """e*p*d <= 1 with p the larger of the two event probability bounds"""
    bound_a = math.exp(-(d ** (1 / 3)) / 8)
    bound_b = d ** (-17 / 15)
    p = max(bound_a, bound_b)
    epd = math.e * p * d
    return {"bound_A": bound_a, "bound_B": bound_b, "epd": epd, "holds": epd <= 1}


# ==================== SAMPLING ====================

def sample_good_subdigraph(B: BroomDigraph, params: SubsampleParams) -> SubsampleState:
    """
    Sample every arc leaving a full-degree vertex with probability p_keep,
    then resample the smallest violated event until none is left.
    """
    D = B.digraph
    d = B.d
    U = frozenset(v for v in D.alive if D.out_degree(v) == d)
    W = frozenset(w for w in B.roots if D.in_degree(w) < params.indeg_root_threshold)
    for w in sorted(B.roots):
        stray = [u for u in D.in_neighbors(w) if u not in U]
        if stray:
            raise InternalBug(f"root {w} has in-neighbors {stray} outside the full-degree set")

    condition = local_lemma_condition(d)
    if not condition["holds"]:
        logger.warning(f"local lemma condition fails at d={d} (e*p*d={condition['epd']:.3g}); "
                       f"resampling anyway and validating the outcome directly")

    rng = np.random.default_rng(params.rng_seed)
    kept: Dict[int, Set[int]] = {}
    in_count: Dict[int, int] = {w: 0 for w in W}

    def sample_out(u: int) -> int:
        out = D.out_neighbors(u)
        draws = rng.random(len(out)) < params.p_keep
        for w in kept.get(u, ()):
            if w in in_count:
                in_count[w] -= 1
        kept[u] = {int(w) for w, keep in zip(out, draws) if keep}
        for w in kept[u]:
            if w in in_count:
                in_count[w] += 1
        return len(out)

    for u in sorted(U):
        sample_out(u)

    def violated_at(u_or_w: int, kind: str) -> bool:
        if kind == EVENT_A:
            return len(kept[u_or_w]) <= params.outdeg_floor
        return in_count[u_or_w] >= 2

    violated: Set[Tuple[int, str]] = {(u, EVENT_A) for u in U if violated_at(u, EVENT_A)}
    violated |= {(w, EVENT_B) for w in W if violated_at(w, EVENT_B)}
    round_log: Deque[ResampleRound] = deque(maxlen=Config.ROUND_LOG_LIMIT)
    rounds = 0

    while violated:
        if rounds >= params.resample_cap:
            history = [entry.to_dict() for entry in list(round_log)[-20:]]
            raise SubsampleFailure(
                f"resampling cap {params.resample_cap} reached with {len(violated)} violated events",
                step="sample",
                details={
                    "violated_A": sorted(v for v, kind in violated if kind == EVENT_A),
                    "violated_B": sorted(v for v, kind in violated if kind == EVENT_B),
                    "last_rounds": history
                })
        rounds += 1
        vertex, kind = min(violated)
        touched_u: Set[int] = set()
        touched_w: Set[int] = set()
        if kind == EVENT_A:
            resampled = sample_out(vertex)
            touched_u.add(vertex)
            touched_w.update(w for w in D.out_neighbors(vertex) if w in in_count)
        else:
            tails = [u for u in D.in_neighbors(vertex) if u in U]
            for u in tails:
                keep = rng.random() < params.p_keep
                had = vertex in kept[u]
                if had and not keep:
                    kept[u].discard(vertex)
                    in_count[vertex] -= 1
                elif keep and not had:
                    kept[u].add(vertex)
                    in_count[vertex] += 1
            resampled = len(tails)
            touched_u.update(tails)
            touched_w.add(vertex)
        for u in touched_u:
            violated.discard((u, EVENT_A))
            if violated_at(u, EVENT_A):
                violated.add((u, EVENT_A))
        for w in touched_w:
            violated.discard((w, EVENT_B))
            if violated_at(w, EVENT_B):
                violated.add((w, EVENT_B))
        round_log.append(ResampleRound(rounds, kind, vertex, resampled, len(violated)))

    arcs = [(u, w) for u in U for w in kept[u]]
    arcs += [(x, w) for x in D.alive - U for w in D.out_neighbors(x)]
    H = Digraph(D.n, arcs, D.alive)

    # recount straight from H
    bad_a = [u for u in U if H.out_degree(u) <= params.outdeg_floor]
    bad_b = [w for w in W if H.in_degree(w) > 1]
    changed = [x for x in D.alive - U if H.out_degree(x) != D.out_degree(x)]
    if bad_a or bad_b or changed or H.min_out_degree() < 1:
        raise InternalBug("sampled sub-digraph fails the recount",
                          {"A": sorted(bad_a), "B": sorted(bad_b), "changed": sorted(changed)})
    logger.info(f"sampled H: {H.size}/{D.size} arcs kept, |U|={len(U)}, |W|={len(W)}, {rounds} resampling rounds")
    return SubsampleState(H, U, W, frozenset(), frozenset(), rounds, list(round_log), condition)


# ==================== EXTRACTION ====================

@dataclass
class LovaszResult:
    broom_digraph: BroomDigraph
    root_in_degrees: Dict[int, int]
    state: SubsampleState
    roots: VertexSet

    def report(self) -> Dict[str, Any]:
        return {
            "roots": len(self.roots),
            "min_root_in_degree": min(self.root_in_degrees.values()),
            "sample": self.state.to_dict()
        }

    def to_dict(self) -> Dict[str, Any]:
        result = self.report()
        result["summary"] = self.broom_digraph.summary()
        result["root_in_degrees"] = {str(r): v for r, v in sorted(self.root_in_degrees.items())}
        return result


def _search_tree(H: Digraph, r: int, U_r: VertexSet) -> Tuple[Digraph, VertexSet]:
    """S_r: what r reaches in H[U_r] without leaving a vertex that lost half its out-arcs"""
    low = set()
    for u in U_r:
        inside = sum(1 for w in H.out_neighbors(u) if w in U_r and w != r)
        if 2 * inside <= H.out_degree(u):
            low.add(u)
    arcs = []
    seen = {r}
    stack = [r]
    while stack:
        x = stack.pop()
        if x in low:
            continue
        for y in H.out_neighbors(x):
            if y in U_r and y != r and y not in seen:
                seen.add(y)
                arcs.append((x, y))
                stack.append(y)
    return from_arcs(H.n, arcs, vertices=[r]), frozenset(low)


def lovasz_trick(B: BroomDigraph, params: SubsampleParams) -> LovaszResult:
    """(k, broom_target)-broom digraph on the roots of in-degree >= 2 in a good H"""
    state = sample_good_subdigraph(B, params)
    H, D, k, width = state.H, B.digraph, B.k, params.broom_target

    new_roots = frozenset(v for v in H.alive if H.in_degree(v) >= 2)
    if not new_roots <= B.roots:
        raise InternalBug("a vertex outside R has in-degree >= 2 in H", {"vertices": sorted(new_roots - B.roots)})
    if new_roots & state.W:
        raise InternalBug("a low in-degree root survived", {"vertices": sorted(new_roots & state.W)})
    if not new_roots:
        raise SubsampleFailure("no high-in-degree roots: every vertex has in-degree <= 1 in H", step="roots")

    trees: Dict[int, Digraph] = {}
    owner: Dict[int, int] = {}
    for r in sorted(new_roots):
        U_r = reachable(H, r, blocked=new_roots - {r})
        for u in U_r:
            if u in owner:
                raise InternalBug(f"vertex {u} is reachable from roots {owner[u]} and {r}")
            owner[u] = r
        S_r, low = _search_tree(H, r, U_r)
        leaves = sorted(S_r.sinks())
        for leaf in leaves:
            if not any(w in B.roots for w in H.out_neighbors(leaf)):
                logger.warning(f"leaf {leaf} below root {r} has no out-neighbor in R")

        if S_r.order == 1:
            arcs = []
        else:
            if k < 2:
                raise SubsampleFailure(f"root {r} needs an extracted broom but k={k} < 2",
                                       step="extract", details={"vertex": r})
            d_max = max_extractable_degree(S_r, r, k)
            if width > math.ceil(d_max / k):
                raise SubsampleFailure(
                    f"search tree at {r} supports out-degree {math.ceil(d_max / k)} < broom_target {width}",
                    step="extract", details={"vertex": r, "max_degree": d_max})
            broom = extract_broom(S_r, r, k, d_max, out_degree=width)
            arcs = sorted(broom.tree.arcs)
            leaves = sorted(broom.leaves)

        targets = new_roots - {r}
        used: Set[int] = set()
        for leaf in leaves:
            fresh = [w for w in H.out_neighbors(leaf) if w in targets and w not in used][:width]
            if len(fresh) < width:
                raise SubsampleFailure(
                    f"leaf {leaf} of the broom at {r} has {len(fresh)} free out-neighbors among the new roots, "
                    f"needs {width}", step="extend", details={"leaf": leaf, "root": r})
            used.update(fresh)
            arcs.extend((leaf, w) for w in fresh)
        trees[r] = from_arcs(D.n, arcs)

    result = assemble_broom_digraph(D.n, trees, k, width)
    in_degrees = {r: D.in_degree(r) for r in sorted(new_roots)}
    low_roots = [r for r, degree in in_degrees.items() if degree < params.indeg_root_threshold]
    if low_roots:
        raise InternalBug("surviving roots with low in-degree in D", {"roots": low_roots})
    logger.info(f"extracted ({k},{width})-broom digraph on {len(new_roots)} roots from {len(B.roots)}")
    return LovaszResult(result, in_degrees, state, new_roots)
