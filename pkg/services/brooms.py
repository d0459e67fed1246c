"""
Brooms and Broom Digraphs

A (k,d)-broom is a balanced out-arborescence of height l <= k whose non-leaves
all have out-degree d, or a height-(k+1) one whose root out-arcs may be
subdivided. A broom digraph is an internally disjoint union of brooms, one per
root, whose leaves are roots again.
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from services.digraph import Digraph, VertexSet, Walk, bfs_distances, from_arcs
from services.errors import InternalBug, InvalidInput, PreconditionViolation
from services.models import ValidationReport, Violation, ViolationClause

logger = logging.getLogger(__name__)


# ==================== BROOM ====================

@dataclass
class Broom:
    tree: Digraph
    root: int
    k: int
    d: int
    ell: int
    subdivision_vertices: VertexSet = frozenset()
    parent: Dict[int, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.parent = {v: self.tree.in_neighbors(v)[0] for v in self.tree.alive if v != self.root}

    @property
    def vertices(self) -> VertexSet:
        return self.tree.alive

    @property
    def leaves(self) -> VertexSet:
        return self.tree.sinks()

    @property
    def internal(self) -> VertexSet:
        """Neither root nor leaf"""
        return self.tree.alive - self.tree.sinks() - {self.root}

    def path_to(self, u: int) -> Walk:
        if u not in self.tree.alive:
            raise InvalidInput(f"vertex {u} is not in the broom rooted at {self.root}")
        path = [u]
        while path[-1] != self.root:
            path.append(self.parent[path[-1]])
        return Walk(tuple(reversed(path)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "root": self.root,
            "k": self.k,
            "d": self.d,
            "ell": self.ell,
            "subdivision_vertices": sorted(self.subdivision_vertices),
            "arcs": [list(a) for a in sorted(self.tree.arcs)]
        }


def _arborescence_order(candidate: Digraph, r: int) -> Optional[List[int]]:
    """BFS order from r if candidate is an out-arborescence rooted at r"""
    if not candidate.is_alive(r) or candidate.in_degree(r) != 0:
        return None
    if any(candidate.in_degree(v) != 1 for v in candidate.alive if v != r):
        return None
    order = [r]
    seen = {r}
    queue = deque([r])
    while queue:
        x = queue.popleft()
        for y in candidate.out_neighbors(x):
            if y not in seen:
                seen.add(y)
                order.append(y)
                queue.append(y)
    return order if len(order) == candidate.order else None


def _degree_violation(T: Digraph, v: int, d: int) -> Violation:
    degree = T.out_degree(v)
    if degree == 1 and d >= 2:
        return Violation(ViolationClause.ILLEGAL_SUBDIVISION,
                         f"vertex {v} has out-degree 1 below the first branching layer", [v])
    return Violation(ViolationClause.WRONG_DEGREE,
                     f"vertex {v} has out-degree {degree}, expected {d}", [v])


def validate_broom(candidate: Digraph, r: int, k: int, d: int) -> ValidationReport:
    """
    Infer l and the subdivision vertices, or report the first failed clause.

    l is tried as the uniform leaf depth first; otherwise the height-(k+1)
    reading is tested branch by branch below the root.
    """
    if k < 0 or d < 1:
        raise InvalidInput(f"broom parameters need k >= 0 and d >= 1, got k={k}, d={d}")
    order = _arborescence_order(candidate, r)
    if order is None:
        return ValidationReport.fail(ViolationClause.NOT_ARBORESCENCE,
                                     f"not an out-arborescence rooted at {r}", r)
    if len(order) == 1:
        return ValidationReport.fail(ViolationClause.HEIGHT_ZERO, "a bare root is not a broom", r)

    depth = {r: 0}
    for v in order[1:]:
        depth[v] = depth[candidate.in_neighbors(v)[0]] + 1
    leaf_depths = {depth[v] for v in order if candidate.out_degree(v) == 0}

    if len(leaf_depths) == 1 and min(leaf_depths) <= k:
        ell = min(leaf_depths)
        for v in order:
            if 0 < candidate.out_degree(v) != d:
                report = ValidationReport(valid=False)
                report.violations.append(_degree_violation(candidate, v, d))
                return report
        return ValidationReport.ok(Broom(candidate, r, k, d, ell))

    # height k+1 with subdivided root arcs
    if candidate.out_degree(r) != d:
        return ValidationReport.fail(ViolationClause.WRONG_DEGREE,
                                     f"root {r} has out-degree {candidate.out_degree(r)}, expected {d}", r)
    subdivisions = set()
    for b in candidate.out_neighbors(r):
        level = [b]
        branch = []
        while level:
            branch.extend(level)
            level = [y for x in level for y in candidate.out_neighbors(x)]
        branch_leaf_depths = {depth[v] for v in branch if candidate.out_degree(v) == 0}
        if len(branch_leaf_depths) != 1:
            return ValidationReport.fail(ViolationClause.UNBALANCED,
                                         f"leaves below {b} sit at depths {sorted(branch_leaf_depths)}", b)
        branch_depth = branch_leaf_depths.pop()
        if branch_depth < k + 1:
            return ValidationReport.fail(ViolationClause.UNBALANCED,
                                         f"branch {b} has height {branch_depth}, below k+1={k + 1}", b)
        extra = branch_depth - 1 - k
        c = b
        for _ in range(extra):
            if candidate.out_degree(c) != 1:
                return ValidationReport.fail(
                    ViolationClause.WRONG_DEGREE,
                    f"vertex {c} branches above the balanced part (out-degree {candidate.out_degree(c)})", c)
            subdivisions.add(c)
            c = candidate.out_neighbors(c)[0]
        stack = [c]
        while stack:
            x = stack.pop()
            if candidate.out_degree(x) == 0:
                continue
            if candidate.out_degree(x) != d:
                report = ValidationReport(valid=False)
                report.violations.append(_degree_violation(candidate, x, d))
                return report
            stack.extend(candidate.out_neighbors(x))
    return ValidationReport.ok(Broom(candidate, r, k, d, k + 1, frozenset(subdivisions)))


def _ahu(children: Mapping[int, Iterable[int]], v: int) -> str:
    return "(" + "".join(sorted(_ahu(children, c) for c in children.get(v, ()))) + ")"


def _shape(d: int, height: int, extra: Tuple[int, ...] = ()) -> Dict[int, List[int]]:
    """Children lists of a balanced shape, root out-arcs carrying `extra` subdivisions"""
    children: Dict[int, List[int]] = {}
    counter = [0]

    def fresh() -> int:
        counter[0] += 1
        return counter[0]

    def grow(v: int, h: int) -> None:
        if h == 0:
            return
        children[v] = []
        for _ in range(d):
            c = fresh()
            children[v].append(c)
            grow(c, h - 1)

    if not extra:
        grow(0, height)
        return children
    children[0] = []
    for s in extra:
        v = fresh()
        children[0].append(v)
        for _ in range(s):
            w = fresh()
            children[v] = [w]
            v = w
        grow(v, height - 1)
    return children


def _profiles(total: int, parts: int, low: int) -> Iterable[Tuple[int, ...]]:
    """Non-decreasing tuples of `parts` integers >= low summing to total"""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(low, total // parts + 1):
        for rest in _profiles(total - first, parts - 1, first):
            yield (first,) + rest


def brute_broom_shape(candidate: Digraph, r: int, k: int, d: int) -> bool:
    """
    Slow independent checker: enumerate every legal (k,d)-broom shape with
    the candidate's vertex count and compare rooted canonical forms.
    """
    graph = candidate.to_networkx()
    if graph.number_of_nodes() < 2 or r not in graph or graph.in_degree(r) != 0:
        return False
    if not nx.is_arborescence(graph):
        return False
    children = {v: list(graph.successors(v)) for v in graph.nodes}
    target = _ahu(children, r)
    size = graph.number_of_nodes()

    for ell in range(1, k + 1):
        if sum(d ** i for i in range(ell + 1)) == size and _ahu(_shape(d, ell), 0) == target:
            return True
    spare = size - 1 - d * sum(d ** i for i in range(k + 1))
    if spare < 0:
        return False
    for extra in _profiles(spare, d, 0):
        if _ahu(_shape(d, k + 1, extra), 0) == target:
            return True
    return False


# ==================== BROOM DIGRAPH ====================

@dataclass
class BroomDigraph:
    digraph: Digraph
    roots: VertexSet
    brooms: Dict[int, Broom]
    k: int
    d: int
    owner: Dict[int, int] = field(init=False, repr=False)

    def __post_init__(self):
        # root or internal vertex -> root of the unique broom holding it as a non-leaf
        self.owner = {}
        for r, broom in self.brooms.items():
            self.owner[r] = r
            for v in broom.internal:
                self.owner[v] = r

    def certificate(self) -> Dict[str, Any]:
        return {
            "roots": sorted(self.roots),
            "brooms": [
                {"root": r, "arcs": [list(a) for a in sorted(self.brooms[r].tree.arcs)]}
                for r in sorted(self.brooms)
            ],
            "k": self.k,
            "d": self.d
        }

    def summary(self) -> Dict[str, Any]:
        ells: Dict[int, int] = {}
        for broom in self.brooms.values():
            ells[broom.ell] = ells.get(broom.ell, 0) + 1
        return {
            "vertices": self.digraph.order,
            "arcs": self.digraph.size,
            "roots": len(self.roots),
            "k": self.k,
            "d": self.d,
            "ell_counts": {str(e): c for e, c in sorted(ells.items())}
        }


def validate_broom_digraph(D: Digraph, R: Iterable[int], certificate: Mapping[int, Digraph],
                           k: int, d: int) -> ValidationReport:
    """Check every broom plus the three broom-digraph clauses; collects all violations"""
    roots = frozenset(R)
    violations: List[Violation] = []
    if not roots:
        return ValidationReport.fail(ViolationClause.EMPTY_ROOT_SET, "root set is empty")
    missing_roots = sorted(r for r in roots if not D.is_alive(r))
    if missing_roots:
        violations.append(Violation(ViolationClause.CERTIFICATE_MISMATCH,
                                    "roots missing from the digraph", missing_roots))
    keys = frozenset(certificate)
    if keys != roots:
        violations.append(Violation(
            ViolationClause.CERTIFICATE_MISMATCH,
            "certificate roots differ from the root set",
            [sorted(roots - keys), sorted(keys - roots)]))
    if violations:
        return ValidationReport(valid=False, violations=violations)

    brooms: Dict[int, Broom] = {}
    for r in sorted(roots):
        report = validate_broom(certificate[r], r, k, d)
        if not report.valid:
            inner = report.first
            violations.append(Violation(ViolationClause.INVALID_BROOM,
                                        f"broom at {r}: {inner.clause.value}: {inner.message}",
                                        [r] + inner.witnesses))
            continue
        brooms[r] = report.value
    if violations:
        return ValidationReport(valid=False, violations=violations)

    union = set()
    owner: Dict[int, int] = {}
    for r in sorted(brooms):
        broom = brooms[r]
        stray_leaves = sorted(broom.leaves - roots)
        if stray_leaves:
            violations.append(Violation(ViolationClause.LEAF_NOT_IN_ROOTS,
                                        f"broom at {r} has leaves outside R", [r] + stray_leaves))
        inner_roots = sorted(broom.internal & roots)
        if inner_roots:
            violations.append(Violation(ViolationClause.INTERNAL_IN_ROOTS,
                                        f"broom at {r} has internal vertices in R", [r] + inner_roots))
        for v in sorted(broom.internal):
            if v in owner:
                violations.append(Violation(ViolationClause.NOT_INTERNALLY_DISJOINT,
                                            f"vertex {v} is internal to brooms at {owner[v]} and {r}",
                                            [v, owner[v], r]))
            else:
                owner[v] = r
        union |= broom.tree.arcs

    extra = sorted(union - D.arcs)
    if extra:
        violations.append(Violation(ViolationClause.UNION_MISMATCH,
                                    "broom arcs missing from the digraph", [list(a) for a in extra[:10]]))
    uncovered = sorted(D.arcs - union)
    if uncovered:
        violations.append(Violation(ViolationClause.UNION_MISMATCH,
                                    "digraph arcs covered by no broom", [list(a) for a in uncovered[:10]]))
    covered = set(roots) | set(owner)
    loose = sorted(D.alive - covered)
    if loose:
        violations.append(Violation(ViolationClause.UNION_MISMATCH,
                                    "digraph vertices covered by no broom", loose[:10]))

    if violations:
        return ValidationReport(valid=False, violations=violations)
    return ValidationReport.ok(BroomDigraph(D, roots, brooms, k, d))


def assemble_broom_digraph(n: int, trees: Mapping[int, Digraph], k: int, d: int) -> BroomDigraph:
    """Union of brooms built by a construction that guarantees validity"""
    arcs = set()
    for tree in trees.values():
        arcs |= tree.arcs
    D = from_arcs(n, arcs, vertices=trees.keys())
    report = validate_broom_digraph(D, trees.keys(), trees, k, d)
    if not report.valid:
        logger.error(f"assembled broom digraph failed validation: {report.to_dict()}")
        raise InternalBug("assembled broom digraph is invalid", report.to_dict())
    return report.value


def from_out_regular(D: Digraph, k: int) -> BroomDigraph:
    """R = V(D), each root owning its out-star"""
    if D.order == 0:
        raise InvalidInput("digraph has no vertices")
    degrees = {v: D.out_degree(v) for v in D.vertices()}
    d = degrees[min(degrees)]
    for v, degree in degrees.items():
        if degree != d:
            raise PreconditionViolation(
                f"digraph is not out-regular: vertex {v} has out-degree {degree}, vertex {min(degrees)} has {d}",
                witness=v)
    if d < 1:
        raise InvalidInput("out-regular digraph needs out-degree at least 1")
    trees = {r: from_arcs(D.n, [(r, v) for v in D.out_neighbors(r)]) for r in D.vertices()}
    result = assemble_broom_digraph(D.n, trees, k, d)
    if result.digraph != D:
        raise InternalBug("out-stars do not reassemble the digraph")
    return result


def trim_out_regular(D: Digraph, d: int) -> Digraph:
    """Keep the d smallest-id out-neighbors of every vertex"""
    if d < 0:
        raise InvalidInput(f"degree must be non-negative, got {d}")
    for v in D.vertices():
        if D.out_degree(v) < d:
            raise PreconditionViolation(
                f"vertex {v} has out-degree {D.out_degree(v)} < {d}", witness=v)
    arcs = [(v, w) for v in D.vertices() for w in D.out_neighbors(v)[:d]]
    return Digraph(D.n, arcs, D.alive)


def source_path(B: BroomDigraph, u: int) -> Walk:
    """The unique shortest path from R to u inside the broom holding u as a non-leaf"""
    if u in B.roots:
        return Walk((u,))
    owner = B.owner.get(u)
    if owner is None:
        raise InvalidInput(f"vertex {u} is neither a root nor an internal broom vertex")
    return B.brooms[owner].path_to(u)


def lemma_high_degree_check(B: BroomDigraph, v: int) -> bool:
    """Whether v reaches R within k arcs (then its out-degree must be d)"""
    dist = bfs_distances(B.digraph, [v], limit=B.k)
    return any(w in B.roots for w in dist)


def lemma_violations(B: BroomDigraph) -> List[int]:
    """Vertices within distance k of R whose out-degree differs from d"""
    near = bfs_distances(B.digraph, B.roots, reverse=True, limit=B.k)
    return sorted(v for v in near if B.digraph.out_degree(v) != B.d)


# ==================== PRUNING ====================

def prune_tree(tree: Digraph, root: int, width: int) -> Digraph:
    """Keep the `width` smallest children of every vertex, top-down"""
    arcs = []
    stack = [root]
    while stack:
        x = stack.pop()
        for y in tree.out_neighbors(x)[:width]:
            arcs.append((x, y))
            stack.append(y)
    return from_arcs(tree.n, arcs, vertices=[root])


def prune_broom(T: Broom, target: int) -> Broom:
    if not 1 <= target <= T.d:
        raise InvalidInput(f"prune target must lie in 1..{T.d}, got {target}")
    if target == T.d:
        return T
    report = validate_broom(prune_tree(T.tree, T.root, target), T.root, T.k, target)
    if not report.valid:
        raise InternalBug(f"pruned broom at {T.root} is invalid", report.to_dict())
    return report.value


def prune_broom_digraph(B: BroomDigraph, target: int) -> BroomDigraph:
    if target == B.d:
        return B
    trees = {r: prune_broom(broom, target).tree for r, broom in B.brooms.items()}
    return assemble_broom_digraph(B.digraph.n, trees, B.k, target)
