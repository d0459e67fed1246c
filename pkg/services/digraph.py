"""
Digraph Core
Immutable simple digraphs over stable integer ids, with the traversals every
pipeline stage shares (BFS paths, exact-length walk sets, reachability).

Vertex ids never change: deleting a vertex only drops it from the live set, so
subdigraphs taken deep inside a pipeline still speak the host's ids.
"""
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx

from services.errors import InvalidInput

Arc = Tuple[int, int]
VertexSet = FrozenSet[int]


@dataclass(frozen=True)
class Walk:
    """Vertex sequence (v_0, ..., v_m) of a directed walk"""
    vertices: Tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def is_path(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    def arcs(self) -> List[Arc]:
        return list(zip(self.vertices, self.vertices[1:]))

    def __contains__(self, vertex: int) -> bool:
        return vertex in self.vertices

    def __iter__(self):
        return iter(self.vertices)


class Digraph:
    """
    Simple digraph: no loops, no parallel arcs.

    Adjacency is stored only for live vertices, sorted ascending, so a broom
    living inside a 5000-vertex host costs what the broom costs.
    """

    __slots__ = ("n", "arcs", "alive", "out_adj", "in_adj")

    def __init__(self, n: int, arcs: Iterable[Arc], alive: Optional[Iterable[int]] = None):
        self.n = n
        self.arcs: FrozenSet[Arc] = frozenset(arcs)
        self.alive: VertexSet = frozenset(range(n)) if alive is None else frozenset(alive)
        out_lists: Dict[int, List[int]] = {v: [] for v in self.alive}
        in_lists: Dict[int, List[int]] = {v: [] for v in self.alive}
        for u, v in self.arcs:
            out_lists[u].append(v)
            in_lists[v].append(u)
        self.out_adj: Dict[int, Tuple[int, ...]] = {v: tuple(sorted(a)) for v, a in out_lists.items()}
        self.in_adj: Dict[int, Tuple[int, ...]] = {v: tuple(sorted(a)) for v, a in in_lists.items()}

    # ---- queries ----

    def vertices(self) -> Tuple[int, ...]:
        return tuple(sorted(self.alive))

    @property
    def order(self) -> int:
        return len(self.alive)

    @property
    def size(self) -> int:
        return len(self.arcs)

    def is_alive(self, v: int) -> bool:
        return v in self.alive

    def has_arc(self, u: int, v: int) -> bool:
        return (u, v) in self.arcs

    def out_neighbors(self, v: int) -> Tuple[int, ...]:
        return self.out_adj.get(v, ())

    def in_neighbors(self, v: int) -> Tuple[int, ...]:
        return self.in_adj.get(v, ())

    def out_degree(self, v: int) -> int:
        return len(self.out_adj.get(v, ()))

    def in_degree(self, v: int) -> int:
        return len(self.in_adj.get(v, ()))

    def neighbors(self, v: int) -> Tuple[int, ...]:
        """Neighbors when orientations are ignored"""
        return tuple(sorted(set(self.out_neighbors(v)) | set(self.in_neighbors(v))))

    def min_out_degree(self) -> int:
        if not self.alive:
            return 0
        return min(len(a) for a in self.out_adj.values())

    def min_in_degree(self) -> int:
        if not self.alive:
            return 0
        return min(len(a) for a in self.in_adj.values())

    def sources(self) -> VertexSet:
        return frozenset(v for v, a in self.in_adj.items() if not a)

    def sinks(self) -> VertexSet:
        return frozenset(v for v, a in self.out_adj.items() if not a)

    def is_subdigraph_of(self, other: "Digraph") -> bool:
        return self.alive <= other.alive and self.arcs <= other.arcs

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.vertices())
        graph.add_edges_from(sorted(self.arcs))
        return graph

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.n == other.n and self.arcs == other.arcs and self.alive == other.alive

    def __hash__(self) -> int:
        return hash((self.n, self.arcs, self.alive))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, live={self.order}, arcs={self.size})"


# ==================== CONSTRUCTION ====================

def build(n: int, arcs: Iterable[Iterable[int]]) -> Digraph:
    """Validated constructor: dedups arcs, rejects loops and out-of-range ids"""
    if not isinstance(n, int) or n < 0:
        raise InvalidInput(f"vertex count must be a non-negative integer, got {n!r}")
    clean = set()
    for pair in arcs:
        pair = tuple(pair)
        if len(pair) != 2:
            raise InvalidInput(f"arc must be a pair, got {list(pair)}")
        u, v = pair
        if not (isinstance(u, int) and isinstance(v, int)) or not (0 <= u < n and 0 <= v < n):
            raise InvalidInput(f"arc ({u}, {v}) has a vertex outside 0..{n - 1}", {"arc": [u, v]})
        if u == v:
            raise InvalidInput(f"self-loop ({u}, {v}) is not allowed", {"arc": [u, v]})
        clean.add((u, v))
    return Digraph(n, clean)


def from_arcs(n: int, arcs: Iterable[Arc], vertices: Iterable[int] = ()) -> Digraph:
    """Sparse subdigraph whose live set is the arc endpoints plus `vertices`"""
    arcs = frozenset(arcs)
    alive = set(vertices)
    for u, v in arcs:
        alive.add(u)
        alive.add(v)
    return Digraph(n, arcs, alive)


def complete(n: int) -> Digraph:
    return Digraph(n, ((u, v) for u in range(n) for v in range(n) if u != v))


def cycle(n: int) -> Digraph:
    return Digraph(n, ((v, (v + 1) % n) for v in range(n)))


def delete(D: Digraph, items: Iterable[Union[int, Arc]]) -> Digraph:
    """
    Delete vertices (ints) and/or arcs (pairs) from D.

    A deleted vertex loses its incident arcs and stays behind as a tombstone
    outside the live set; absent elements are ignored.
    """
    dead_vertices = set()
    dead_arcs = set()
    for item in items:
        if isinstance(item, int):
            dead_vertices.add(item)
        else:
            dead_arcs.add(tuple(item))
    if not dead_vertices and not dead_arcs:
        return D
    arcs = [
        (u, v) for u, v in D.arcs
        if (u, v) not in dead_arcs and u not in dead_vertices and v not in dead_vertices
    ]
    return Digraph(D.n, arcs, D.alive - dead_vertices)


def induced(D: Digraph, X: Iterable[int]) -> Digraph:
    keep = D.alive & frozenset(X)
    return Digraph(D.n, ((u, v) for u, v in D.arcs if u in keep and v in keep), keep)


# ==================== TRAVERSAL ====================

def bfs_distances(D: Digraph, sources: Iterable[int], reverse: bool = False,
                  limit: Optional[int] = None) -> Dict[int, int]:
    """Multi-source BFS distances, against the arcs when `reverse`"""
    step = D.in_neighbors if reverse else D.out_neighbors
    dist = {s: 0 for s in sorted(sources) if D.is_alive(s)}
    queue = deque(dist)
    while queue:
        x = queue.popleft()
        if limit is not None and dist[x] >= limit:
            continue
        for y in step(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def shortest_path_to_set(D: Digraph, v: int, S: Iterable[int]) -> Optional[Walk]:
    """
    BFS-shortest directed path from v into S, or None.

    Frontier order is FIFO over sorted adjacency, so among shortest paths the
    one discovered first (smallest ids near v) wins.
    """
    targets = frozenset(S)
    if not D.is_alive(v):
        return None
    if v in targets:
        return Walk((v,))
    parent = {v: v}
    queue = deque([v])
    while queue:
        x = queue.popleft()
        for y in D.out_neighbors(x):
            if y in parent:
                continue
            parent[y] = x
            if y in targets:
                path = [y]
                while path[-1] != v:
                    path.append(parent[path[-1]])
                return Walk(tuple(reversed(path)))
            queue.append(y)
    return None


def walks_of_length(D: Digraph, v: int, i: int) -> VertexSet:
    """Endpoints of all directed walks of length exactly i starting at v"""
    if i < 0:
        raise InvalidInput(f"walk length must be non-negative, got {i}")
    frontier = frozenset([v]) if D.is_alive(v) else frozenset()
    for _ in range(i):
        if not frontier:
            break
        frontier = frozenset(y for x in frontier for y in D.out_neighbors(x))
    return frontier


def reachable(D: Digraph, start: int, blocked: Iterable[int] = ()) -> VertexSet:
    """Vertices reachable from start without entering `blocked` (start itself always counts)"""
    blocked = frozenset(blocked)
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in D.out_neighbors(x):
            if y not in seen and y not in blocked:
                seen.add(y)
                stack.append(y)
    return frozenset(seen)
