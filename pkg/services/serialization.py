"""
JSON and DOT codecs for digraphs, broom certificates, embeddings and schedules
"""
import json
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

from services.brooms import BroomDigraph, validate_broom_digraph
from services.digraph import Digraph, build, from_arcs
from services.embedder import Embedding, ProperCopyWitness
from services.errors import InvalidInput
from services.lll_subsample import SubsampleParams
from services.restructure import CleanUpParams


def load_json(path: str) -> Any:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except OSError as e:
        raise InvalidInput(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise InvalidInput(f"{path} is not valid JSON: {e}")


def dump_json(obj: Any, path: Optional[str] = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text + "\n")
    return text


# ==================== DIGRAPHS ====================

def digraph_to_json(D: Digraph, roots: Optional[Iterable[int]] = None) -> Dict[str, Any]:
    obj: Dict[str, Any] = {"n": D.n, "arcs": [list(a) for a in sorted(D.arcs)]}
    if roots is not None:
        obj["roots"] = sorted(roots)
    if D.order != D.n:
        obj["vertices"] = list(D.vertices())
    return obj


def _int_list(obj: Any, name: str) -> List[int]:
    if not isinstance(obj, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in obj):
        raise InvalidInput(f"'{name}' must be a list of integers")
    return obj


def digraph_from_json(obj: Any) -> Tuple[Digraph, Optional[FrozenSet[int]]]:
    """Returns the digraph and its root set when the object carries one"""
    if isinstance(obj, list):
        # bare arc list: n is one more than the largest id
        obj = {"n": 1 + max((max(a) for a in obj if a), default=-1), "arcs": obj}
    if not isinstance(obj, dict) or "arcs" not in obj or "n" not in obj:
        raise InvalidInput("digraph JSON needs 'n' and 'arcs'")
    if not isinstance(obj["arcs"], list):
        raise InvalidInput("'arcs' must be a list of pairs")
    D = build(obj["n"], obj["arcs"])
    if "vertices" in obj:
        alive = set(_int_list(obj["vertices"], "vertices"))
        outside = sorted(v for v in alive if not 0 <= v < D.n)
        if outside:
            raise InvalidInput(f"vertices {outside} lie outside 0..{D.n - 1}")
        dangling = sorted({v for a in D.arcs for v in a} - alive)
        if dangling:
            raise InvalidInput(f"arcs touch vertices {dangling} not listed in 'vertices'")
        D = Digraph(D.n, D.arcs, alive)
    roots = None
    if obj.get("roots") is not None:
        roots = frozenset(_int_list(obj["roots"], "roots"))
    return D, roots


def tree_from_json(obj: Any) -> Digraph:
    D, _ = digraph_from_json(obj)
    return D


# ==================== CERTIFICATES ====================

def certificate_from_json(obj: Any, n: int) -> Tuple[FrozenSet[int], Dict[int, Digraph], int, int]:
    """Certificate JSON {"roots", "brooms": [{"root", "arcs"}], "k", "d"}"""
    if not isinstance(obj, dict):
        raise InvalidInput("certificate must be a JSON object")
    for key in ("brooms", "k", "d"):
        if key not in obj:
            raise InvalidInput(f"certificate is missing '{key}'")
    trees: Dict[int, Digraph] = {}
    for entry in obj["brooms"]:
        if not isinstance(entry, dict) or "root" not in entry or "arcs" not in entry:
            raise InvalidInput("every broom entry needs 'root' and 'arcs'")
        r = entry["root"]
        if r in trees:
            raise InvalidInput(f"root {r} has two brooms")
        arcs = build(n, entry["arcs"]).arcs
        trees[r] = from_arcs(n, arcs, vertices=[r])
    roots = frozenset(_int_list(obj["roots"], "roots")) if "roots" in obj else frozenset(trees)
    return roots, trees, int(obj["k"]), int(obj["d"])


def broom_digraph_from_json(digraph_obj: Any, certificate_obj: Any) -> BroomDigraph:
    """Validated load; an invalid certificate raises InvalidInput carrying the report"""
    D, _ = digraph_from_json(digraph_obj)
    roots, trees, k, d = certificate_from_json(certificate_obj, D.n)
    report = validate_broom_digraph(D, roots, trees, k, d)
    if not report.valid:
        raise InvalidInput("certificate does not describe a broom digraph", report.to_dict())
    return report.value


def broom_digraph_to_json(B: BroomDigraph) -> Dict[str, Any]:
    return {"digraph": digraph_to_json(B.digraph, B.roots), "certificate": B.certificate()}


# ==================== EMBEDDINGS ====================

def embedding_to_json(result: Union[Embedding, ProperCopyWitness], proper: Optional[bool] = None) -> Dict[str, Any]:
    if isinstance(result, ProperCopyWitness):
        return result.to_dict(proper)
    obj = result.to_dict()
    obj["proper"] = proper
    obj["source_paths"] = None
    return obj


# ==================== SCHEDULES ====================

def schedule_to_json(schedule: Iterable[CleanUpParams]) -> List[Dict[str, Any]]:
    return [level.to_dict() for level in schedule]


def schedule_from_json(obj: Any) -> List[CleanUpParams]:
    if not isinstance(obj, list):
        raise InvalidInput("schedule must be a list of clean-up levels")
    schedule = []
    for i, level in enumerate(obj):
        try:
            subsample = SubsampleParams(**level["subsample"])
            schedule.append(CleanUpParams(subsample, int(level["target_degree"])))
        except (KeyError, TypeError) as e:
            raise InvalidInput(f"schedule level {i} is malformed: {e}")
    return schedule


# ==================== DOT ====================

def to_dot(D: Digraph, roots: Iterable[int] = (), labels: Optional[Mapping[int, str]] = None) -> str:
    """One node and one arc per line; roots drawn as double circles"""
    roots = set(roots)
    lines = ['digraph G {']
    for v in D.vertices():
        attrs = []
        if v in roots:
            attrs.append('shape=doublecircle')
        if labels and v in labels:
            attrs.append(f'label="{labels[v]}"')
        lines.append(f'  "{v}"' + (f' [{", ".join(attrs)}]' if attrs else '') + ';')
    for u, v in sorted(D.arcs):
        lines.append(f'  "{u}" -> "{v}";')
    lines.append('}')
    return "\n".join(lines) + "\n"
