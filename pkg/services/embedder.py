"""
Embedder
Copies of grounded trees inside digraphs:

  - max_grounded_core / extend_by_peels: strip and restore high out-leaves
  - check_proper: the proper-copy conditions against a broom digraph
  - brute_embed: exhaustive oracle for small hosts
  - heuristic_embed(_forest): randomized-restart backtracking
  - constructive_embed: leaf-by-leaf recursion through repeated clean-ups
  - embed_grounded_tree: the whole pipeline on an out-regular digraph
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Set, Union

import numpy as np

from config import Config
from services.brooms import BroomDigraph, from_out_regular, source_path, trim_out_regular
from services.digraph import Digraph, Walk, delete, induced, shortest_path_to_set, walks_of_length
from services.errors import (
    EmbeddingFailure, InternalBug, InvalidInput, PreconditionViolation, StrictConstantError,
)
from services.grounded import grounded_profile, height_function, is_oriented_forest, is_oriented_tree
from services.models import CleanUpMode, EmbedCase, ValidationReport, Violation, ViolationClause
from services.restructure import CleanUpParams, clean_up

logger = logging.getLogger(__name__)


# ==================== MODELS ====================

@dataclass
class Embedding:
    """Tree vertex -> host vertex"""
    iota: Dict[int, int]
    host: Digraph
    tree: Digraph

    def problems(self) -> List[str]:
        found = []
        missing = sorted(set(self.tree.alive) - set(self.iota))
        if missing:
            found.append(f"tree vertices {missing} are not mapped")
        images = list(self.iota.values())
        if len(set(images)) != len(images):
            found.append("map is not injective")
        for v in sorted(self.iota):
            if not self.host.is_alive(self.iota[v]):
                found.append(f"vertex {v} maps to {self.iota[v]}, which is not in the host")
        for x, y in sorted(self.tree.arcs):
            if x in self.iota and y in self.iota and not self.host.has_arc(self.iota[x], self.iota[y]):
                found.append(f"arc ({x},{y}) maps to ({self.iota[x]},{self.iota[y]}), which is not a host arc")
        return found

    def validate(self) -> ValidationReport:
        problems = self.problems()
        if not problems:
            return ValidationReport.ok(self)
        return ValidationReport(valid=False, violations=[
            Violation(ViolationClause.NOT_EMBEDDING, p) for p in problems
        ])

    def to_dict(self) -> Dict[str, Any]:
        return {"map": {str(x): self.iota[x] for x in sorted(self.iota)}}


@dataclass(frozen=True)
class EmbedStep:
    tree_order: int
    leaf: int
    neighbor: Optional[int]
    case: EmbedCase
    image: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tree_order": self.tree_order,
            "leaf": self.leaf,
            "neighbor": self.neighbor,
            "case": self.case.value,
            "image": self.image
        }


@dataclass
class ProperCopyWitness:
    embedding: Embedding
    broom_host: BroomDigraph
    source_paths: Dict[int, Walk] = field(default_factory=dict)
    steps: List[EmbedStep] = field(default_factory=list)

    def to_dict(self, proper: Optional[bool] = None) -> Dict[str, Any]:
        result = self.embedding.to_dict()
        if proper is not None:
            result["proper"] = proper
        result["source_paths"] = {str(x): list(w.vertices) for x, w in sorted(self.source_paths.items())}
        if self.steps:
            result["cases"] = [step.to_dict() for step in self.steps]
        return result


@dataclass(frozen=True)
class Peel:
    leaf: int
    neighbor: int
    direction: str = "out"  # leaf is an out-neighbor of neighbor


@dataclass
class PeelSequence:
    peels: List[Peel]
    core: Digraph
    tree: Digraph

    def to_dict(self) -> Dict[str, Any]:
        return {
            "peels": [[p.leaf, p.neighbor, p.direction] for p in self.peels],
            "core": sorted(self.core.alive)
        }


@dataclass
class HeuristicResult:
    embedding: Optional[Embedding]
    stats: Dict[str, Any] = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.embedding is not None


# ==================== CORE REDUCTION ====================

def max_grounded_core(T: Digraph) -> PeelSequence:
    """Peel highest vertices (smallest id first) until the tree is max-grounded"""
    if not is_oriented_tree(T):
        raise InvalidInput(f"expected an oriented tree, got {T!r}")
    profile = grounded_profile(T)
    if not profile.grounded:
        raise InvalidInput("tree is not grounded", {"G": sorted(profile.G)})
    peels: List[Peel] = []
    current = T
    while not profile.max_grounded:
        h = profile.height
        v = max(h, key=lambda x: (h[x], -x))
        if current.in_degree(v) != 1 or current.out_degree(v) != 0:
            raise InternalBug(f"highest vertex {v} is not an in-leaf",
                              {"in": current.in_degree(v), "out": current.out_degree(v)})
        peels.append(Peel(v, current.in_neighbors(v)[0]))
        current = delete(current, [v])
        profile = grounded_profile(current)
    return PeelSequence(peels, current, T)


def extend_by_peels(W: Union[ProperCopyWitness, Embedding], peels: PeelSequence, D: Digraph) -> Embedding:
    """Restore peeled leaves, each on the smallest unused out-neighbor of its neighbor's image"""
    embedding = W.embedding if isinstance(W, ProperCopyWitness) else W
    need = peels.tree.order
    if D.min_out_degree() < need:
        low = min(D.alive, key=lambda v: (D.out_degree(v), v))
        raise PreconditionViolation(
            f"host needs minimum out-degree {need}, vertex {low} has {D.out_degree(low)}", witness=low)
    iota = dict(embedding.iota)
    used = set(iota.values())
    for peel in reversed(peels.peels):
        image = iota[peel.neighbor]
        z = next((w for w in D.out_neighbors(image) if w not in used), None)
        if z is None:
            raise InternalBug(f"no free out-neighbor of {image} for peeled leaf {peel.leaf}")
        iota[peel.leaf] = z
        used.add(z)
    result = Embedding(iota, D, peels.tree)
    problems = result.problems()
    if problems:
        raise InternalBug("restored embedding is invalid", {"problems": problems})
    return result


# ==================== PROPER COPIES ====================

def check_proper(W: ProperCopyWitness) -> ValidationReport:
    """
    A copy is proper when height-0 tree vertices land in R and the broom paths
    from R to the images of the sources are pairwise disjoint and avoid every
    other image. Supplied source paths are compared against the recomputed ones.
    """
    B = W.broom_host
    embedding = W.embedding
    T = embedding.tree
    report = Embedding(embedding.iota, B.digraph, T).validate()
    if not report.valid:
        return report

    violations: List[Violation] = []
    iota = embedding.iota
    h = height_function(T)
    outside = sorted(x for x in T.alive if h[x] == 0 and iota[x] not in B.roots)
    if outside:
        violations.append(Violation(ViolationClause.HEIGHT_ZERO_OUTSIDE_ROOTS,
                                    "height-0 tree vertices mapped outside R", outside))

    sources = sorted(T.sources())
    paths: Dict[int, Walk] = {}
    for x in sources:
        try:
            paths[x] = source_path(B, iota[x])
        except InvalidInput as e:
            violations.append(Violation(ViolationClause.NOT_EMBEDDING, e.message, [x]))
    if len(paths) != len(sources):
        return ValidationReport(valid=False, violations=violations)

    for i, x in enumerate(sources):
        for y in sources[i + 1:]:
            shared = set(paths[x]) & set(paths[y])
            if shared:
                violations.append(Violation(ViolationClause.SOURCE_PATHS_OVERLAP,
                                            f"source paths of {x} and {y} share vertices",
                                            [x, y, sorted(shared)]))
    inner_images = {iota[y] for y in T.alive if y not in paths}
    for x in sources:
        hit = set(paths[x]) & inner_images
        if hit:
            violations.append(Violation(ViolationClause.SOURCE_PATH_HITS_COPY,
                                        f"source path of {x} meets non-source images", [x, sorted(hit)]))
    for x, walk in sorted(W.source_paths.items()):
        if x not in paths or walk.vertices != paths[x].vertices:
            violations.append(Violation(ViolationClause.SOURCE_PATH_MISMATCH,
                                        f"supplied source path of {x} differs from the broom path",
                                        [x, list(walk.vertices)]))
    if violations:
        return ValidationReport(valid=False, violations=violations)
    return ValidationReport.ok(W)


def witness_for(embedding: Embedding, B: BroomDigraph) -> ProperCopyWitness:
    """Witness carrying the broom paths of the source images (empty when some image is not coverable)"""
    paths = {}
    for x in sorted(embedding.tree.sources()):
        try:
            paths[x] = source_path(B, embedding.iota[x])
        except InvalidInput:
            return ProperCopyWitness(embedding, B)
    return ProperCopyWitness(embedding, B, paths)


# ==================== BRUTE FORCE ====================

def _degree_fits(D: Digraph, T: Digraph, x: int, c: int) -> bool:
    return D.out_degree(c) >= T.out_degree(x) and D.in_degree(c) >= T.in_degree(x)


def _arcs_agree(D: Digraph, T: Digraph, iota: Dict[int, int], x: int, c: int) -> bool:
    for y in T.out_neighbors(x):
        if y in iota and not D.has_arc(c, iota[y]):
            return False
    for y in T.in_neighbors(x):
        if y in iota and not D.has_arc(iota[y], c):
            return False
    return True


def brute_embed(D: Digraph, T: Digraph, proper_in: Optional[BroomDigraph] = None,
                guard: Optional[int] = None, force: bool = False) -> Optional[Embedding]:
    """
    Lexicographically first copy of T in D over the tree order
    (degree descending, then id) and ascending host ids, or None.
    """
    guard = Config.BRUTE_EMBED_GUARD if guard is None else guard
    if D.order > guard and not force:
        raise InvalidInput(f"brute force refuses hosts above {guard} vertices (got {D.order})")
    if proper_in is not None and proper_in.digraph != D:
        raise InvalidInput("proper_in must be a broom digraph on the host")
    order = sorted(T.alive, key=lambda x: (-len(T.neighbors(x)), x))
    hosts = D.vertices()
    iota: Dict[int, int] = {}
    used: Set[int] = set()

    def search(i: int) -> bool:
        if i == len(order):
            if proper_in is None:
                return True
            return check_proper(witness_for(Embedding(dict(iota), D, T), proper_in)).valid
        x = order[i]
        for c in hosts:
            if c in used or not _degree_fits(D, T, x, c) or not _arcs_agree(D, T, iota, x, c):
                continue
            iota[x] = c
            used.add(c)
            if search(i + 1):
                return True
            del iota[x]
            used.discard(c)
        return False

    if not search(0):
        return None
    return Embedding(dict(iota), D, T)


# ==================== HEURISTIC ====================

class _BudgetExhausted(Exception):
    pass


def _search_order(T: Digraph, G: Set[int]) -> List[int]:
    """Connected order from the largest in-degree vertex, branching vertices explored first"""
    start = min(T.alive, key=lambda x: (-T.in_degree(x), x))
    order = [start]
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in sorted(T.neighbors(x), key=lambda v: (v not in G, v)):
            if y not in seen:
                seen.add(y)
                order.append(y)
                queue.append(y)
    return order


def _heuristic_core(D: Digraph, T: Digraph, budget: int, restarts: int, seed: int) -> HeuristicResult:
    G = {x for x in T.alive if T.in_degree(x) >= 2}
    order = _search_order(T, G)
    position = {x: i for i, x in enumerate(order)}
    per_restart = max(1, budget // restarts)
    stats = {"nodes": 0, "restarts": 0, "complete": False}

    for attempt in range(restarts):
        rng = np.random.default_rng([seed, attempt])
        nodes = [0]
        iota: Dict[int, int] = {}
        used: Set[int] = set()

        def candidates(x: int) -> List[int]:
            if not iota:
                pool = [c for c in D.vertices() if _degree_fits(D, T, x, c)]
                pool = [pool[i] for i in rng.permutation(len(pool))]
                return sorted(pool, key=lambda c: -D.in_degree(c))
            anchor = next(y for y in T.neighbors(x) if y in iota and position[y] < position[x])
            pool = D.out_neighbors(iota[anchor]) if T.has_arc(anchor, x) else D.in_neighbors(iota[anchor])
            pool = [c for c in pool if c not in used and _degree_fits(D, T, x, c)
                    and _arcs_agree(D, T, iota, x, c)]
            return [pool[i] for i in rng.permutation(len(pool))]

        def search(i: int) -> bool:
            nodes[0] += 1
            if nodes[0] > per_restart:
                raise _BudgetExhausted()
            if i == len(order):
                return True
            x = order[i]
            for c in candidates(x):
                iota[x] = c
                used.add(c)
                if search(i + 1):
                    return True
                del iota[x]
                used.discard(c)
            return False

        stats["restarts"] = attempt + 1
        try:
            found = search(0)
        except _BudgetExhausted:
            stats["nodes"] += nodes[0]
            continue
        stats["nodes"] += nodes[0]
        if found:
            return HeuristicResult(Embedding(dict(iota), D, T), stats)
        stats["complete"] = True
        break
    return HeuristicResult(None, stats)


def heuristic_embed(D: Digraph, T: Digraph, budget: Optional[int] = None, restarts: Optional[int] = None,
                    seed: Optional[int] = None) -> HeuristicResult:
    """
    Randomized-restart backtracking. A returned embedding is always valid; a
    missing one only proves absence when stats['complete'] is set.
    """
    if not is_oriented_tree(T):
        raise InvalidInput(f"expected an oriented tree, got {T!r}")
    budget = Config.HEURISTIC_BUDGET if budget is None else budget
    restarts = Config.HEURISTIC_RESTARTS if restarts is None else restarts
    seed = Config.WORKBENCH_SEED if seed is None else seed
    if budget < 1 or restarts < 1:
        raise InvalidInput("budget and restarts must be positive")
    if D.order == 0:
        return HeuristicResult(None, {"nodes": 0, "restarts": 0, "complete": True})

    peels = None
    target = T
    if grounded_profile(T).grounded and D.min_out_degree() >= T.order:
        peels = max_grounded_core(T)
        target = peels.core

    result = _heuristic_core(D, target, budget, restarts, seed)
    result.stats["core_order"] = target.order
    if result.embedding is None:
        return result
    embedding = extend_by_peels(result.embedding, peels, D) if peels and peels.peels else result.embedding
    problems = embedding.problems()
    if problems:
        raise InternalBug("heuristic produced an invalid embedding", {"problems": problems})
    return HeuristicResult(embedding, result.stats)


def heuristic_embed_forest(D: Digraph, F: Digraph, budget: Optional[int] = None,
                           restarts: Optional[int] = None, seed: Optional[int] = None) -> HeuristicResult:
    """Embed the components of F one after another into disjoint parts of D"""
    forest, components = is_oriented_forest(F)
    if not forest:
        raise InvalidInput(f"expected an oriented forest, got {F!r}")
    iota: Dict[int, int] = {}
    stats = {"nodes": 0, "restarts": 0, "complete": False, "components": len(components)}
    remaining = D
    for component in components:
        result = heuristic_embed(remaining, induced(F, component), budget, restarts, seed)
        stats["nodes"] += result.stats.get("nodes", 0)
        stats["restarts"] += result.stats.get("restarts", 0)
        if result.embedding is None:
            return HeuristicResult(None, stats)
        iota.update(result.embedding.iota)
        remaining = delete(remaining, result.embedding.iota.values())
    embedding = Embedding(iota, D, F)
    problems = embedding.problems()
    if problems:
        raise InternalBug("forest embedding is invalid", {"problems": problems})
    return HeuristicResult(embedding, stats)


# ==================== CONSTRUCTIVE ====================

def strict_embed_exponent(k: int, order: int) -> int:
    return 13 * k ** 3 * (8 * k) ** order


def check_strict_embed(B: BroomDigraph, T: Digraph) -> None:
    if B.k < T.order:
        raise StrictConstantError(f"strict embedding needs k >= |V(T)| = {T.order}, got k={B.k}",
                                  required=f"k >= {T.order}")
    exponent = strict_embed_exponent(B.k, T.order)
    if math.log10(B.d) < exponent:
        raise StrictConstantError(f"strict embedding needs d >= 10^{exponent}, got d={B.d}",
                                  required=f"10^{exponent}")


def _undirected_path(T: Digraph, start: int, targets: Set[int]) -> List[int]:
    parent = {start: start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in T.neighbors(x):
            if y in parent:
                continue
            parent[y] = x
            if y in targets:
                path = [y]
                while path[-1] != start:
                    path.append(parent[path[-1]])
                return list(reversed(path))
            queue.append(y)
    raise InternalBug(f"no path from {start} to {sorted(targets)}")


def _path_union(B: BroomDigraph, images) -> Set[int]:
    covered: Set[int] = set()
    for image in images:
        covered.update(source_path(B, image).vertices)
    return covered


def _attach_leaf(B: BroomDigraph, T: Digraph, mode: CleanUpMode,
                 schedule: Sequence[CleanUpParams]) -> ProperCopyWitness:
    n = T.order
    if n == 1:
        x = min(T.alive)
        r = min(B.roots)
        witness = ProperCopyWitness(Embedding({x: r}, B.digraph, T), B, {x: Walk((r,))},
                                    [EmbedStep(1, x, None, EmbedCase.BASE, r)])
        return _checked(witness)

    h = height_function(T)
    leaves = [x for x in T.alive if len(T.neighbors(x)) == 1]
    l = min(leaves, key=lambda x: (h[x], x))
    others = {x for x in T.alive if x != l and h[x] == 0}
    if not others:
        raise InternalBug(f"no height-0 vertex besides leaf {l}")
    P = _undirected_path(T, l, others)
    s = min(P, key=lambda x: h[x])
    ell1 = -h[s]
    ell2 = h[l] - h[s]
    if not ell1 >= ell2 >= 0:
        raise InternalBug(f"path split at {s} has lengths {ell1} < {ell2}", {"path": P})
    u = T.neighbors(l)[0]
    T_rest = delete(T, [l])

    params = schedule[0] if schedule else None
    cleaned = clean_up(B, mode, params).broom_digraph
    inner = _attach_leaf(cleaned, T_rest, mode, schedule[1:])
    iota = dict(inner.embedding.iota)
    inner_images = list(iota.values())

    if T.has_arc(l, u):
        if iota[u] not in cleaned.roots:
            case = EmbedCase.IN_NEIGHBOR_OFF_ROOTS
            path = source_path(cleaned, iota[u])
            if path.length < 1:
                raise InternalBug(f"image {iota[u]} outside R' has a trivial source path")
            z = path.vertices[-2]
        else:
            case = EmbedCase.IN_NEIGHBOR_AT_ROOT
            blocked = _path_union(B, inner_images)
            z = next((c for c in B.digraph.in_neighbors(iota[u])
                      if blocked.isdisjoint(source_path(B, c).vertices)), None)
            if z is None:
                raise EmbeddingFailure(
                    f"root {iota[u]} has no in-neighbor with a free source path",
                    tree_order=n, case=case.value, claim="free in-neighbor",
                    details={"image": iota[u], "in_degree": B.digraph.in_degree(iota[u])})
    else:
        case = EmbedCase.OUT_NEIGHBOR
        ends = walks_of_length(cleaned.digraph, iota[s], ell1)
        if not ends <= cleaned.roots:
            raise EmbeddingFailure(
                f"walks of length {ell1} from {iota[s]} leave the root set",
                tree_order=n, case=case.value, claim="typed walks end in R'",
                details={"start": iota[s], "length": ell1, "outside": sorted(ends - cleaned.roots)})
        to_roots = shortest_path_to_set(cleaned.digraph, iota[u], cleaned.roots)
        if to_roots is None or to_roots.length > cleaned.k:
            raise EmbeddingFailure(
                f"{iota[u]} is not within {cleaned.k} arcs of R'",
                tree_order=n, case=case.value, claim="short path to R'",
                details={"image": iota[u], "path": to_roots})
        blocked = _path_union(cleaned, inner_images)
        z = next((c for c in cleaned.digraph.out_neighbors(iota[u]) if c not in blocked), None)
        if z is None:
            raise EmbeddingFailure(
                f"every out-neighbor of {iota[u]} lies on a source path",
                tree_order=n, case=case.value, claim="free out-neighbor", details={"image": iota[u]})
        if h[l] == 0 and z not in cleaned.roots:
            raise InternalBug(f"height-0 leaf {l} landed on {z} outside R'")

    for image in inner_images:
        outer, deeper = source_path(B, image).vertices, source_path(cleaned, image).vertices
        if len(outer) > len(deeper) or deeper[-len(outer):] != outer:
            raise InternalBug(f"broom path of {image} is not a suffix of its cleaned path")

    iota[l] = z
    paths = {x: source_path(B, iota[x]) for x in sorted(T.sources())}
    steps = inner.steps + [EmbedStep(n, l, u, case, z)]
    logger.info(f"order {n}: leaf {l} via {u} -> {z} (case {case.value}, split {ell1}/{ell2})")
    return _checked(ProperCopyWitness(Embedding(iota, B.digraph, T), B, paths, steps))


def _checked(witness: ProperCopyWitness) -> ProperCopyWitness:
    report = check_proper(witness)
    if not report.valid:
        logger.error(f"constructed copy is not proper: {report.to_dict()}")
        raise InternalBug("constructed copy is not proper", report.to_dict())
    return witness


def constructive_embed(B: BroomDigraph, T: Digraph, mode: CleanUpMode = CleanUpMode.PARAMETRIC,
                       schedule: Optional[Sequence[CleanUpParams]] = None) -> ProperCopyWitness:
    """
    Proper copy of a max-grounded tree, built by removing a lowest leaf,
    cleaning the broom digraph, recursing, and attaching the leaf back.
    Parametric runs take one clean-up parameter set per removed leaf.
    """
    mode = CleanUpMode(mode)
    if not is_oriented_tree(T):
        raise InvalidInput(f"expected an oriented tree, got {T!r}")
    if not grounded_profile(T).max_grounded:
        raise InvalidInput("constructive embedding needs a max-grounded tree")
    if mode == CleanUpMode.STRICT:
        check_strict_embed(B, T)
        schedule = []
    else:
        schedule = list(schedule or [])
        if len(schedule) < T.order - 1:
            raise InvalidInput(f"schedule has {len(schedule)} levels, the tree needs {T.order - 1}")
    return _attach_leaf(B, T, mode, schedule)


def embed_grounded_tree(D: Digraph, T: Digraph, d: int, k: int,
                        mode: CleanUpMode = CleanUpMode.PARAMETRIC,
                        schedule: Optional[Sequence[CleanUpParams]] = None) -> Embedding:
    """Trim D to a d-out-regular digraph, embed the core properly, restore the peels"""
    if not is_oriented_tree(T) or not grounded_profile(T).grounded:
        raise InvalidInput("embed_grounded_tree needs a grounded oriented tree")
    if D.min_out_degree() < T.order:
        raise PreconditionViolation(f"host minimum out-degree {D.min_out_degree()} is below |V(T)| = {T.order}")
    trimmed = trim_out_regular(D, d)
    B = from_out_regular(trimmed, k)
    peels = max_grounded_core(T)
    logger.info(f"embedding tree of order {T.order} (core {peels.core.order}) into {D!r} with d={d}, k={k}")
    witness = constructive_embed(B, peels.core, mode, schedule)
    return extend_by_peels(witness, peels, D)


def embed_summary(result: Union[Embedding, ProperCopyWitness, None]) -> Dict[str, Any]:
    if result is None:
        return {"found": False}
    if isinstance(result, ProperCopyWitness):
        return dict(found=True, **result.to_dict(proper=check_proper(result).valid))
    return dict(found=True, **result.to_dict())
