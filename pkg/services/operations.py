"""
Workbench operations over JSON payloads.

Each handler takes the decoded request body (HTTP) or the assembled
arguments (CLI) and returns (result, validators_passed). Errors propagate
as WorkbenchError subclasses; the surfaces map them to status/exit codes.
"""
import logging
from typing import Any, Callable, Dict, Optional, Tuple

from config import Config
from services.brooms import (
    Broom, BroomDigraph, from_out_regular, lemma_violations, prune_broom_digraph,
    trim_out_regular, validate_broom, validate_broom_digraph,
)
from services.digraph import Digraph
from services.embedder import (
    brute_embed, check_proper, constructive_embed, embed_grounded_tree, embed_summary,
    heuristic_embed, heuristic_embed_forest, witness_for,
)
from services.errors import InvalidInput, WorkbenchError
from services.experiments import CSV_FIELDS, estimate_dk
from services.generators import generate
from services.grounded import is_oriented_tree, recognize
from services.lll_subsample import SubsampleParams, lovasz_trick, sample_good_subdigraph
from services.models import CleanUpMode, EmbedMode
from services.restructure import CleanUpParams, clean_up, compute_types, extract_broom, make_typed
from services.result_storage import get_storage
from services.serialization import (
    broom_digraph_from_json, broom_digraph_to_json, certificate_from_json, digraph_from_json,
    digraph_to_json, schedule_from_json, schedule_to_json, to_dot, tree_from_json,
)

logger = logging.getLogger(__name__)

Result = Tuple[Dict[str, Any], bool]


# ==================== PAYLOAD HELPERS ====================

def _require(payload: Dict[str, Any], *keys: str) -> None:
    missing = [key for key in keys if key not in payload or payload[key] is None]
    if missing:
        raise InvalidInput(f"missing required field(s): {', '.join(missing)}")


def _int(payload: Dict[str, Any], key: str, default: Optional[int] = None) -> Optional[int]:
    value = payload.get(key, default)
    if value is None:
        return None
    try:
        return int(value)
    except (TypeError, ValueError):
        raise InvalidInput(f"'{key}' must be an integer, got {value!r}")


def _broom_digraph(payload: Dict[str, Any]) -> BroomDigraph:
    if isinstance(payload.get("broom_digraph"), dict):
        inner = payload["broom_digraph"]
        _require(inner, "digraph", "certificate")
        return broom_digraph_from_json(inner["digraph"], inner["certificate"])
    _require(payload, "digraph", "certificate")
    return broom_digraph_from_json(payload["digraph"], payload["certificate"])


def _subsample_params(payload: Dict[str, Any]) -> SubsampleParams:
    _require(payload, "params")
    params = payload["params"]
    if not isinstance(params, dict):
        raise InvalidInput("'params' must be an object")
    try:
        return SubsampleParams(**params)
    except TypeError as e:
        raise InvalidInput(f"bad subsample parameters: {e}")


def _serialize(value: Any) -> Any:
    if isinstance(value, BroomDigraph):
        return broom_digraph_to_json(value)
    if isinstance(value, Broom):
        return value.to_dict()
    if isinstance(value, Digraph):
        return digraph_to_json(value)
    return value


# ==================== GROUNDED TREES ====================

def op_recognize(payload: Dict[str, Any]) -> Result:
    _require(payload, "tree")
    return recognize(tree_from_json(payload["tree"])), True


# ==================== BROOMS ====================

def op_validate_broom(payload: Dict[str, Any]) -> Result:
    _require(payload, "tree", "root", "k", "d")
    report = validate_broom(tree_from_json(payload["tree"]), _int(payload, "root"),
                            _int(payload, "k"), _int(payload, "d"))
    result = report.to_dict()
    if report.valid:
        result["broom"] = report.value.to_dict()
    return result, report.valid


def op_validate_broom_digraph(payload: Dict[str, Any]) -> Result:
    _require(payload, "digraph", "certificate")
    D, _ = digraph_from_json(payload["digraph"])
    roots, trees, k, d = certificate_from_json(payload["certificate"], D.n)
    report = validate_broom_digraph(D, roots, trees, k, d)
    result = report.to_dict()
    if report.valid:
        B = report.value
        result["summary"] = B.summary()
        result["degree_lemma_violations"] = lemma_violations(B)
    return result, report.valid


def op_from_out_regular(payload: Dict[str, Any]) -> Result:
    _require(payload, "digraph", "k")
    D, _ = digraph_from_json(payload["digraph"])
    if payload.get("d") is not None:
        D = trim_out_regular(D, _int(payload, "d"))
    B = from_out_regular(D, _int(payload, "k"))
    return dict(broom_digraph_to_json(B), summary=B.summary()), True


def op_trim(payload: Dict[str, Any]) -> Result:
    _require(payload, "digraph", "d")
    D, _ = digraph_from_json(payload["digraph"])
    return {"digraph": digraph_to_json(trim_out_regular(D, _int(payload, "d")))}, True


def op_prune_broom(payload: Dict[str, Any]) -> Result:
    _require(payload, "target")
    B = prune_broom_digraph(_broom_digraph(payload), _int(payload, "target"))
    return dict(broom_digraph_to_json(B), summary=B.summary()), True


# ==================== RESTRUCTURE ====================

def op_extract_broom(payload: Dict[str, Any]) -> Result:
    _require(payload, "tree", "root", "k", "d")
    broom = extract_broom(tree_from_json(payload["tree"]), _int(payload, "root"), _int(payload, "k"),
                          _int(payload, "d"), _int(payload, "out_degree"))
    return {"broom": broom.to_dict()}, True


def op_make_typed(payload: Dict[str, Any]) -> Result:
    _require(payload, "t")
    t = _int(payload, "t")
    B = make_typed(_broom_digraph(payload), t)
    types = compute_types(B, t)
    return dict(
        broom_digraph_to_json(B),
        summary=B.summary(),
        types={str(v): w for v, w in sorted(types.items()) if w is not None},
    ), True


def op_clean_up(payload: Dict[str, Any]) -> Result:
    B = _broom_digraph(payload)
    mode = CleanUpMode(payload.get("mode", CleanUpMode.PARAMETRIC.value))
    params = None
    if mode == CleanUpMode.PARAMETRIC:
        _require(payload, "params", "target_degree")
        params = CleanUpParams(_subsample_params(payload), _int(payload, "target_degree"))
    result = clean_up(B, mode, params)
    return dict(result.to_dict(), **broom_digraph_to_json(result.broom_digraph)), True


# ==================== LLL SUBSAMPLE ====================

def op_subsample(payload: Dict[str, Any]) -> Result:
    B = _broom_digraph(payload)
    params = _subsample_params(payload)
    if payload.get("lovasz", True):
        result = lovasz_trick(B, params)
        return dict(result.to_dict(), **broom_digraph_to_json(result.broom_digraph)), True
    state = sample_good_subdigraph(B, params)
    return dict(state.to_dict(), digraph=digraph_to_json(state.H)), True


# ==================== EMBEDDER ====================

def op_embed(payload: Dict[str, Any]) -> Result:
    _require(payload, "tree")
    T = tree_from_json(payload["tree"])
    mode = EmbedMode(payload.get("mode", EmbedMode.HEURISTIC.value))

    if mode == EmbedMode.CONSTRUCTIVE:
        clean_mode = CleanUpMode(payload.get("clean_up", CleanUpMode.PARAMETRIC.value))
        schedule = schedule_from_json(payload.get("schedule", []))
        if payload.get("certificate") is not None or payload.get("broom_digraph") is not None:
            witness = constructive_embed(_broom_digraph(payload), T, clean_mode, schedule)
            summary = embed_summary(witness)
            return summary, bool(summary.get("proper"))
        _require(payload, "digraph", "d", "k")
        D, _ = digraph_from_json(payload["digraph"])
        embedding = embed_grounded_tree(D, T, _int(payload, "d"), _int(payload, "k"), clean_mode, schedule)
        return embed_summary(embedding), embedding.validate().valid

    _require(payload, "digraph")
    D, _ = digraph_from_json(payload["digraph"])
    if mode == EmbedMode.BRUTE:
        proper_in = _broom_digraph(payload) if payload.get("certificate") is not None else None
        embedding = brute_embed(D, T, proper_in=proper_in, guard=_int(payload, "guard"),
                                force=bool(payload.get("force", False)))
        if embedding is not None and proper_in is not None:
            witness = witness_for(embedding, proper_in)
            return dict(found=True, **witness.to_dict(proper=check_proper(witness).valid)), True
        return embed_summary(embedding), True

    budget, restarts, seed = _int(payload, "budget"), _int(payload, "restarts"), _int(payload, "seed")
    if is_oriented_tree(T):
        result = heuristic_embed(D, T, budget, restarts, seed)
    else:
        result = heuristic_embed_forest(D, T, budget, restarts, seed)
    summary = embed_summary(result.embedding)
    summary["stats"] = result.stats
    if not result.found:
        summary["status"] = "proven_absent" if result.stats.get("complete") else "unresolved"
    return summary, True


# ==================== WORKBENCH ====================

def op_gen(payload: Dict[str, Any]) -> Result:
    _require(payload, "model")
    params = dict(payload.get("params") or {})
    if payload["model"] == "favorable":
        _require(params, "tree")
        params["tree"] = tree_from_json(params["tree"])
    output = generate(payload["model"], params)
    if isinstance(output, tuple):
        B, schedule, manifest = output
        return dict(broom_digraph_to_json(B), schedule=schedule_to_json(schedule), manifest=manifest), True
    return {"output": _serialize(output)}, True


def op_estimate_dk(payload: Dict[str, Any]) -> Result:
    _require(payload, "k", "d_values", "n", "trials")
    if not isinstance(payload["d_values"], list):
        raise InvalidInput("'d_values' must be a list of integers")
    estimate = estimate_dk(
        _int(payload, "k"), [int(d) for d in payload["d_values"]], _int(payload, "n"), _int(payload, "trials"),
        budget=_int(payload, "budget"), seed=_int(payload, "seed"),
        restarts=_int(payload, "restarts"), workers=_int(payload, "workers"),
    )
    result = estimate.to_dict()
    if payload.get("store") and Config.ENABLE_RESULT_STORAGE:
        result["storage"] = get_storage().save_result(result, name=f"dk-k{estimate.k}",
                                                csv_rows=estimate.csv_rows(), csv_fields=CSV_FIELDS)
    return result, True


def op_dot(payload: Dict[str, Any]) -> Result:
    _require(payload, "digraph")
    D, roots = digraph_from_json(payload["digraph"])
    return {"dot": to_dot(D, roots or ())}, True


OPERATIONS: Dict[str, Callable[[Dict[str, Any]], Result]] = {
    "recognize": op_recognize,
    "validate-broom": op_validate_broom,
    "validate-broom-digraph": op_validate_broom_digraph,
    "from-out-regular": op_from_out_regular,
    "trim": op_trim,
    "prune-broom": op_prune_broom,
    "extract-broom": op_extract_broom,
    "make-typed": op_make_typed,
    "clean-up": op_clean_up,
    "subsample": op_subsample,
    "embed": op_embed,
    "gen": op_gen,
    "estimate-dk": op_estimate_dk,
    "dot": op_dot,
}


def run_operation(name: str, payload: Dict[str, Any]) -> Result:
    if name not in OPERATIONS:
        raise InvalidInput(f"unknown operation {name!r}")
    if not isinstance(payload, dict):
        raise InvalidInput("request body must be a JSON object")
    try:
        return OPERATIONS[name](payload)
    except WorkbenchError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        # malformed nested JSON (missing keys, wrong shapes)
        raise InvalidInput(f"{name}: malformed payload: {e}")
