"""
Restructure
Deterministic pruning and cleaning of brooms and broom digraphs:

  - extract_broom: a (k-1, ceil(d/k))-broom inside a degree-rich out-arborescence
  - monochromatic_prune / monochromatic_broom: keep a one-colored leaf set
  - compute_type(s) / make_typed: t-types and the typing iteration
  - clean_up: subsample, type, prune
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from services.brooms import (
    Broom, BroomDigraph, assemble_broom_digraph, prune_broom_digraph, prune_tree, validate_broom,
)
from services.digraph import Digraph, from_arcs, walks_of_length
from services.errors import InternalBug, InvalidInput, PreconditionViolation, StrictConstantError
from services.models import CleanUpMode

logger = logging.getLogger(__name__)

TypeWord = Tuple[int, ...]
LeafColoring = Dict[int, int]

# walk-end status bits for compute_types
EMPTY, IN_R, OUT_R, MIXED = 0, 1, 2, 3


def _children(T: Digraph, v: int) -> Tuple[int, ...]:
    return T.out_neighbors(v)


def _bfs_order(T: Digraph, r: int) -> List[int]:
    order = [r]
    queue = deque([r])
    while queue:
        x = queue.popleft()
        for y in T.out_neighbors(x):
            order.append(y)
            queue.append(y)
    return order


def _require_arborescence(T: Digraph, r: int) -> List[int]:
    if not T.is_alive(r) or T.in_degree(r) != 0:
        raise InvalidInput(f"vertex {r} is not the root of an out-arborescence")
    if any(T.in_degree(v) != 1 for v in T.alive if v != r):
        raise InvalidInput(f"digraph is not an out-arborescence rooted at {r}")
    order = _bfs_order(T, r)
    if len(order) != T.order or len(set(order)) != len(order):
        raise InvalidInput(f"digraph is not an out-arborescence rooted at {r}")
    return order


# ==================== BROOM EXTRACTION ====================

@dataclass
class LevelLabels:
    phi: Dict[int, int]
    selector: Dict[int, int]
    order: Tuple[int, ...]  # leaves first


def level_labels(T: Digraph, r: int, k: int) -> LevelLabels:
    """
    phi(leaf) = 0; for a non-leaf u the selector is the smallest c such that at
    least ceil(d+(u)/k) children have phi = c, and phi(u) = min(selector + 1, k - 1).
    """
    order = tuple(reversed(_require_arborescence(T, r)))
    phi: Dict[int, int] = {}
    selector: Dict[int, int] = {}
    for u in order:
        children = _children(T, u)
        if not children:
            phi[u] = 0
            continue
        need = math.ceil(len(children) / k)
        counts = [0] * k
        for x in children:
            counts[phi[x]] += 1
        selector[u] = next(c for c in range(k) if counts[c] >= need)
        phi[u] = min(selector[u] + 1, k - 1)
    return LevelLabels(phi, selector, order)


def _leaf_distances(T: Digraph, order: Tuple[int, ...]) -> Dict[int, int]:
    """Distance from each vertex down to its nearest leaf"""
    down: Dict[int, int] = {}
    for u in order:
        children = _children(T, u)
        down[u] = 0 if not children else 1 + min(down[x] for x in children)
    return down


def max_extractable_degree(T: Digraph, r: int, k: int) -> int:
    """Largest d for which extract_broom's degree precondition holds"""
    order = tuple(reversed(_require_arborescence(T, r)))
    down = _leaf_distances(T, order)
    near = [v for v in order if _children(T, v) and down[v] <= k - 1]
    return min([T.out_degree(r)] + [T.out_degree(v) for v in near])


def _check_extract_precondition(T: Digraph, r: int, k: int, d: int, order: Tuple[int, ...]) -> None:
    if T.out_degree(r) < d:
        raise PreconditionViolation(f"root {r} has out-degree {T.out_degree(r)} < {d}", witness=[r])
    down = _leaf_distances(T, order)
    parent = {y: x for x in order for y in _children(T, x)}
    for v in reversed(order):
        children = _children(T, v)
        if children and down[v] <= k - 1 and len(children) < d:
            path = [v]
            while path[0] != r:
                path.insert(0, parent[path[0]])
            x = v
            while _children(T, x):
                x = min(_children(T, x), key=lambda c: (down[c], c))
                path.append(x)
            raise PreconditionViolation(
                f"vertex {v} lies {down[v]} arcs above a leaf with out-degree {len(children)} < {d}",
                witness=path)


def extract_broom(T: Digraph, r: int, k: int, d: int, out_degree: Optional[int] = None) -> Broom:
    """(k-1, ceil(d/k))-broom rooted at r inside T whose leaves are leaves of T"""
    if k < 2:
        raise InvalidInput(f"extraction yields (k-1)-brooms and needs k >= 2, got k={k}")
    if d < 1:
        raise InvalidInput(f"degree must be positive, got {d}")
    order = tuple(reversed(_require_arborescence(T, r)))
    _check_extract_precondition(T, r, k, d, order)
    width = math.ceil(d / k)
    if out_degree is not None:
        if not 1 <= out_degree <= width:
            raise InvalidInput(f"out_degree must lie in 1..{width}, got {out_degree}")
        width = out_degree

    arcs: List[Tuple[int, int]] = []
    labels = level_labels(T, r, k)
    phi, selector = labels.phi, labels.selector

    def h_children(u: int) -> Tuple[int, ...]:
        return tuple(x for x in _children(T, u) if phi[x] == selector[u])

    for u in labels.order:
        if u in selector and len(h_children(u)) < math.ceil(T.out_degree(u) / k):
            raise InternalBug(f"vertex {u} keeps too few children in H")

    def balanced(u: int, height: int, arcs: List[Tuple[int, int]]) -> None:
        if height == 0:
            return
        kept = h_children(u)[:width]
        if len(kept) < width:
            raise InternalBug(f"vertex {u} has {len(kept)} H-children, needs {width}")
        for x in kept:
            arcs.append((u, x))
            balanced(x, height - 1, arcs)

    if selector[r] <= k - 2:
        balanced(r, phi[r], arcs)
    else:
        for x in h_children(r)[:width]:
            arcs.append((r, x))
            current = x
            while selector.get(current) == k - 1:
                step = h_children(current)[0]
                arcs.append((current, step))
                current = step
            balanced(current, phi[current], arcs)
    return _validated_extraction(T, arcs, r, k - 1, width)


def _validated_extraction(T: Digraph, arcs: List[Tuple[int, int]], r: int, k: int, width: int) -> Broom:
    report = validate_broom(from_arcs(T.n, arcs), r, k, width)
    if not report.valid:
        logger.error(f"extracted broom at {r} is not a ({k},{width})-broom: {report.to_dict()}")
        raise InternalBug(f"extracted broom at {r} failed validation", report.to_dict())
    return report.value


# ==================== MONOCHROMATIC PRUNING ====================

def monochromatic_prune(T: Digraph, r: int, coloring: Mapping[int, int], C: int) -> Digraph:
    """
    Sub-arborescence at r whose leaves are T-leaves of one color and where every
    kept vertex keeps at least d+(u)/C of its children. Each non-leaf takes the
    color most common among its children (smallest color id on ties).
    """
    order = _require_arborescence(T, r)
    leaves = {v for v in order if not _children(T, v)}
    if set(coloring) != leaves:
        raise InvalidInput("coloring must cover exactly the leaves")
    if any(not 0 <= c < C for c in coloring.values()):
        raise InvalidInput(f"colors must lie in 0..{C - 1}")

    color: Dict[int, int] = {}
    for u in reversed(order):
        children = _children(T, u)
        if not children:
            color[u] = coloring[u]
            continue
        counts: Dict[int, int] = {}
        for x in children:
            counts[color[x]] = counts.get(color[x], 0) + 1
        color[u] = min(counts, key=lambda c: (-counts[c], c))

    chosen = color[r]
    arcs = []
    stack = [r]
    while stack:
        x = stack.pop()
        for y in _children(T, x):
            if color[y] == chosen:
                arcs.append((x, y))
                stack.append(y)
    return from_arcs(T.n, arcs, vertices=[r])


def monochromatic_broom(T: Broom, coloring: Mapping[int, int], C: int) -> Broom:
    """(k, ceil(d/C))-broom inside T with a monochromatic leaf set"""
    width = math.ceil(T.d / C)
    pruned = prune_tree(monochromatic_prune(T.tree, T.root, coloring, C), T.root, width)
    report = validate_broom(pruned, T.root, T.k, width)
    if not report.valid:
        raise InternalBug(f"monochromatic broom at {T.root} failed validation", report.to_dict())
    return report.value


# ==================== TYPES ====================

def compute_type(B: BroomDigraph, v: int, t: int) -> Optional[TypeWord]:
    """
    t-type of v read literally from the walk sets, None if some length mixes
    root and non-root endpoints. An empty walk set gives bit 0.
    """
    if t < 0:
        raise InvalidInput(f"type length must be non-negative, got {t}")
    bits = []
    for i in range(1, t + 1):
        reached = walks_of_length(B.digraph, v, i)
        if reached and reached <= B.roots:
            bits.append(1)
        elif reached.isdisjoint(B.roots):
            bits.append(0)
        else:
            return None
    return tuple(bits)


def compute_types(B: BroomDigraph, t: int) -> Dict[int, Optional[TypeWord]]:
    """All t-types at once: status_i(v) is the OR of status_{i-1} over out-neighbors"""
    D = B.digraph
    status = {v: IN_R if v in B.roots else OUT_R for v in D.alive}
    words: Dict[int, List[int]] = {v: [] for v in D.alive}
    mixed = set()
    for _ in range(t):
        nxt = {}
        for v in D.alive:
            acc = EMPTY
            for w in D.out_neighbors(v):
                acc |= status[w]
            nxt[v] = acc
            if acc == MIXED:
                mixed.add(v)
            else:
                words[v].append(1 if acc == IN_R else 0)
        status = nxt
    return {v: None if v in mixed else tuple(words[v]) for v in D.alive}


def is_typed(B: BroomDigraph, t: int) -> bool:
    return all(word is not None for word in compute_types(B, t).values())


def _word_color(word: TypeWord) -> int:
    return int("".join(map(str, word)), 2) if word else 0


def make_typed(B: BroomDigraph, t: int) -> BroomDigraph:
    """t-typed (k, ceil(d / 2^(t(t-1)/2)))-broom digraph with the same root set"""
    if t < 0 or t > B.k:
        raise InvalidInput(f"t must lie in 0..k={B.k}, got {t}")
    current = B
    for s in range(1, t + 1):
        types = compute_types(current, s - 1)
        colors = 2 ** (s - 1)
        trees = {}
        for r, broom in current.brooms.items():
            coloring = {}
            for leaf in broom.leaves:
                word = types[leaf]
                if word is None:
                    raise InternalBug(f"leaf {leaf} has no {s - 1}-type")
                coloring[leaf] = _word_color(word)
            trees[r] = monochromatic_broom(broom, coloring, colors).tree
        current = assemble_broom_digraph(B.digraph.n, trees, B.k, math.ceil(current.d / colors))
        logger.info(f"typing round {s}/{t}: {colors} color(s), degree now {current.d}")
    expected = math.ceil(B.d / 2 ** (t * (t - 1) // 2))
    if current.d != expected:
        raise InternalBug(f"typed degree {current.d} differs from {expected}")
    if not is_typed(current, t):
        raise InternalBug(f"digraph is not {t}-typed after the typing rounds")
    return current


# ==================== CLEAN-UP ====================

@dataclass
class CleanUpParams:
    subsample: Any  # SubsampleParams
    target_degree: int

    def __post_init__(self):
        if self.target_degree < 1:
            raise InvalidInput(f"target degree must be positive, got {self.target_degree}")

    @classmethod
    def strict(cls, d: int, k: int, seed: Optional[int] = None) -> "CleanUpParams":
        from services.lll_subsample import SubsampleParams
        return cls(SubsampleParams.for_degree(d, k, seed=seed), math.ceil(d ** (1 / (8 * k))))

    def to_dict(self) -> Dict[str, Any]:
        return {"subsample": self.subsample.to_dict(), "target_degree": self.target_degree}


@dataclass
class CleanUpResult:
    broom_digraph: BroomDigraph
    root_in_degrees: Dict[int, int]
    subsample: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "summary": self.broom_digraph.summary(),
            "root_in_degrees": {str(r): v for r, v in sorted(self.root_in_degrees.items())},
            "subsample": self.subsample
        }


def strict_cleanup_exponent(k: int) -> int:
    return 13 * k ** 3


def check_strict_cleanup(d: int, k: int) -> None:
    exponent = strict_cleanup_exponent(k)
    if d < 10 ** exponent:
        raise StrictConstantError(
            f"strict clean-up needs d >= 10^{exponent} for k={k}, got d={d}",
            required=f"10^{exponent}")


def clean_up(B: BroomDigraph, mode: CleanUpMode, params: Optional[CleanUpParams] = None) -> CleanUpResult:
    """k-typed broom digraph on new roots R' whose in-degrees in B stay high"""
    from services.lll_subsample import lovasz_trick

    mode = CleanUpMode(mode)
    if mode == CleanUpMode.STRICT:
        check_strict_cleanup(B.d, B.k)
        params = CleanUpParams.strict(B.d, B.k)
    elif params is None:
        raise InvalidInput("parametric clean-up needs explicit parameters")

    trick = lovasz_trick(B, params.subsample)
    typed = make_typed(trick.broom_digraph, B.k)
    if params.target_degree > typed.d:
        raise InvalidInput(f"target degree {params.target_degree} exceeds typed degree {typed.d}")
    cleaned = prune_broom_digraph(typed, params.target_degree)
    if not is_typed(cleaned, B.k):
        raise InternalBug("pruning broke typedness")
    in_degrees = {r: B.digraph.in_degree(r) for r in sorted(cleaned.roots)}
    logger.info(f"clean-up: {len(B.roots)} -> {len(cleaned.roots)} roots, degree {B.d} -> {cleaned.d}")
    return CleanUpResult(cleaned, in_degrees, trick.report())
