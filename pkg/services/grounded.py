"""
Grounded Trees
Oriented-forest recognition, height functions and the grounded / max-grounded
classification. Heights are normalized so that the maximum is 0.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import networkx as nx

from services.digraph import Digraph, VertexSet, induced
from services.errors import InvalidInput

logger = logging.getLogger(__name__)

HeightFunction = Dict[int, int]


@dataclass(frozen=True)
class GroundedProfile:
    grounded: bool
    max_grounded: bool
    G: VertexSet
    Z: VertexSet
    height: HeightFunction

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grounded": self.grounded,
            "max_grounded": self.max_grounded,
            "G": sorted(self.G),
            "Z": sorted(self.Z),
            "h": {str(v): self.height[v] for v in sorted(self.height)}
        }


def is_oriented_forest(D: Digraph) -> Tuple[bool, List[VertexSet]]:
    """
    True iff the underlying undirected multigraph is acyclic.

    An antiparallel pair (u,v),(v,u) counts as a 2-cycle. Components are the
    weak components ordered by smallest vertex.
    """
    if D.order == 0:
        return True, []
    graph = D.to_networkx()
    components = sorted(
        (frozenset(c) for c in nx.weakly_connected_components(graph)), key=min
    )
    return nx.is_forest(graph), components


def is_oriented_tree(D: Digraph) -> bool:
    forest, components = is_oriented_forest(D)
    return forest and len(components) == 1


def _require_tree(T: Digraph) -> None:
    if not is_oriented_tree(T):
        raise InvalidInput(f"expected an oriented tree, got {T!r}")


def _heights(T: Digraph, start: int) -> HeightFunction:
    h = {start: 0}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in T.out_neighbors(x):
            if y not in h:
                h[y] = h[x] + 1
                queue.append(y)
        for y in T.in_neighbors(x):
            if y not in h:
                h[y] = h[x] - 1
                queue.append(y)
    return h


def height_function(T: Digraph) -> HeightFunction:
    """Unique height function of an oriented tree with max value 0"""
    _require_tree(T)
    h = _heights(T, min(T.alive))
    top = max(h.values())
    return {v: value - top for v, value in h.items()}


def forest_height_function(F: Digraph) -> HeightFunction:
    """Height function normalized to max 0 inside each weak component"""
    forest, components = is_oriented_forest(F)
    if not forest:
        raise InvalidInput(f"expected an oriented forest, got {F!r}")
    h: HeightFunction = {}
    for component in components:
        part = _heights(F, min(component))
        top = max(part.values())
        h.update({v: value - top for v, value in part.items()})
    return h


def _profile(T: Digraph, h: HeightFunction) -> GroundedProfile:
    G = frozenset(v for v in T.alive if T.in_degree(v) >= 2)
    Z = frozenset(v for v in T.alive if T.in_degree(v) == 0)
    grounded = len({h[v] for v in G}) <= 1
    max_grounded = grounded and all(h[v] == 0 for v in G)
    return GroundedProfile(grounded, max_grounded, G, Z, h)


def grounded_profile(T: Digraph) -> GroundedProfile:
    return _profile(T, height_function(T))


def forest_profiles(F: Digraph) -> List[GroundedProfile]:
    """One profile per weak component; a forest is grounded iff all are"""
    forest, components = is_oriented_forest(F)
    if not forest:
        raise InvalidInput(f"expected an oriented forest, got {F!r}")
    return [grounded_profile(induced(F, component)) for component in components]


def is_grounded_forest(F: Digraph) -> bool:
    return all(p.grounded for p in forest_profiles(F))


def brute_grounded(T: Digraph) -> bool:
    """
    Independent check of groundedness straight from the definition: heights
    are read off signed arc counts along undirected paths from one vertex,
    then tested for constancy on the in-degree >= 2 vertices.
    """
    graph = T.to_networkx()
    undirected = graph.to_undirected()
    anchor = min(graph.nodes)
    h = {}
    for v in graph.nodes:
        path = nx.shortest_path(undirected, anchor, v)
        h[v] = sum(1 if graph.has_edge(a, b) else -1 for a, b in zip(path, path[1:]))
    heavy = [v for v in graph.nodes if graph.in_degree(v) >= 2]
    return len({h[v] for v in heavy}) <= 1


def recognize(D: Digraph) -> Dict[str, Any]:
    """Summary printed by the `recognize` command"""
    if D.order == 0 or not is_oriented_tree(D):
        forest, components = is_oriented_forest(D)
        return {
            "oriented_tree": False,
            "oriented_forest": forest,
            "components": len(components),
            "grounded": is_grounded_forest(D) if forest and components else None,
            "max_grounded": None,
            "G": None,
            "Z": None,
            "h": None
        }
    result = {"oriented_tree": True}
    result.update(grounded_profile(D).to_dict())
    return result
