"""
Command line for the workbench.

Every subcommand prints a JSON response envelope. Exit codes:
  0  success and every validator in the pipeline passed
  1  a validator rejected its input, or a pipeline claim failed
  2  invalid input
  3  internal bug (a proof-guaranteed property failed)
"""
import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from config import Config
from services.errors import InternalBug, InvalidInput, PipelineFailure, WorkbenchError
from services.experiments import run_grid
from services.models import CleanUpMode, EmbedMode, GenModel, WorkbenchResponse
from services.operations import run_operation
from services.result_storage import get_storage
from services.serialization import load_json

logger = logging.getLogger("workbench")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_BUG = 3

# flag name -> payload key; values are JSON files
FILE_ARGS = {
    "digraph": "digraph",
    "tree": "tree",
    "certificate": "certificate",
    "broom_digraph": "broom_digraph",
    "params": "params",
    "schedule": "schedule",
}


def _json_or_file(value: str) -> Any:
    """Inline JSON when it parses, otherwise a path"""
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return load_json(value)


def _add_files(parser: argparse.ArgumentParser, *names: str, required: tuple = ()) -> None:
    for name in names:
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, metavar="JSON",
                            required=name in required, help=f"{name} as a JSON file or inline JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="workbench",
                                     description="Grounded trees in digraphs of large minimum out-degree")
    parser.add_argument("-o", "--output", metavar="FILE", help="write the JSON response to FILE")
    parser.add_argument("--log-level", default=Config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("recognize", help="oriented tree / grounded / max-grounded profile")
    _add_files(p, "tree", required=("tree",))

    p = sub.add_parser("validate-broom", help="check a (k,d)-broom rooted at r")
    _add_files(p, "tree", required=("tree",))
    p.add_argument("--root", type=int, required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-d", type=int, required=True)

    p = sub.add_parser("validate-broom-digraph", help="check a certificate against a digraph")
    _add_files(p, "digraph", "certificate", required=("digraph", "certificate"))

    p = sub.add_parser("from-out-regular", help="out-stars of a d-out-regular digraph as a broom digraph")
    _add_files(p, "digraph", required=("digraph",))
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-d", type=int, help="trim to exactly d out-arcs first")

    p = sub.add_parser("trim", help="keep the d smallest-id out-neighbors of every vertex")
    _add_files(p, "digraph", required=("digraph",))
    p.add_argument("-d", type=int, required=True)

    p = sub.add_parser("prune-broom", help="prune every broom to a smaller out-degree")
    _add_files(p, "digraph", "certificate", "broom_digraph")
    p.add_argument("--target", type=int, required=True)

    p = sub.add_parser("extract-broom", help="extract a broom from a rooted out-tree")
    _add_files(p, "tree", required=("tree",))
    p.add_argument("--root", type=int, required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-d", type=int, required=True)
    p.add_argument("--out-degree", dest="out_degree", type=int)

    p = sub.add_parser("make-typed", help="t-typed broom digraph with the same roots")
    _add_files(p, "digraph", "certificate", "broom_digraph")
    p.add_argument("-t", type=int, required=True)

    p = sub.add_parser("clean-up", help="subsample, type and prune a broom digraph")
    _add_files(p, "digraph", "certificate", "broom_digraph", "params")
    p.add_argument("--mode", choices=[m.value for m in CleanUpMode], default=CleanUpMode.PARAMETRIC.value)
    p.add_argument("--target-degree", dest="target_degree", type=int)

    p = sub.add_parser("subsample", help="random subdigraph by resampling (and the root reselection)")
    _add_files(p, "digraph", "certificate", "broom_digraph", "params", required=("params",))
    p.add_argument("--sample-only", dest="lovasz", action="store_false")

    p = sub.add_parser("embed", help="find a copy of a tree")
    _add_files(p, "digraph", "tree", "certificate", "broom_digraph", "schedule", required=("tree",))
    p.add_argument("--mode", choices=[m.value for m in EmbedMode], default=EmbedMode.HEURISTIC.value)
    p.add_argument("--clean-up", dest="clean_up", choices=[m.value for m in CleanUpMode],
                   default=CleanUpMode.PARAMETRIC.value)
    p.add_argument("-d", type=int)
    p.add_argument("-k", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--guard", type=int)
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("gen", help="random instances")
    p.add_argument("model", choices=[m.value for m in GenModel])
    p.add_argument("--params", dest="params", metavar="JSON", default="{}",
                   help="generator parameters as a JSON file or inline JSON")

    p = sub.add_parser("estimate-dk", help="estimate d_k on random out-regular digraphs")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-d", "--d-values", dest="d_values", type=int, nargs="+", required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--budget", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--store", action="store_true", help="save JSON + CSV under RESULTS_FOLDER")

    p = sub.add_parser("dot", help="Graphviz export")
    _add_files(p, "digraph", required=("digraph",))

    p = sub.add_parser("run-grid", help="run an experiment grid from a JSON file")
    p.add_argument("grid", metavar="GRID_JSON")
    p.add_argument("--store", action="store_true")

    return parser


def _payload(args: argparse.Namespace) -> Dict[str, Any]:
    payload: Dict[str, Any] = {}
    for key, value in vars(args).items():
        if key in ("command", "output", "log_level", "model") or value is None:
            continue
        payload[FILE_ARGS.get(key, key)] = _json_or_file(value) if key in FILE_ARGS else value
    if args.command == "gen":
        payload["model"] = args.model
    return payload


def _emit(response: WorkbenchResponse, output: Optional[str]) -> None:
    text = json.dumps(response.to_dict(), indent=2)
    if output:
        with open(output, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def _run_grid(args: argparse.Namespace) -> WorkbenchResponse:
    storage = get_storage() if args.store and Config.ENABLE_RESULT_STORAGE else None
    rows = []
    for description, estimate in run_grid(args.grid, storage=storage):
        rows.append({"description": description, "verdict": estimate.verdict(), "warnings": estimate.warnings})
    return WorkbenchResponse(success=True, operation="run-grid", validators_passed=True,
                             result={"points": rows}, message=f"{len(rows)} grid point(s) completed")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    Config.LOG_LEVEL = str(args.log_level).upper()
    Config.init_app(stream=sys.stderr)
    logging.basicConfig(
        level=getattr(logging, Config.LOG_LEVEL, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr
    )

    try:
        if args.command == "run-grid":
            response = _run_grid(args)
        else:
            result, passed = run_operation(args.command, _payload(args))
            response = WorkbenchResponse(success=True, operation=args.command,
                                         validators_passed=passed, result=result)
        _emit(response, args.output)
        return EXIT_OK if response.validators_passed else EXIT_FAILED
    except InvalidInput as e:
        logger.warning(f"{args.command}: {e.message}")
        _emit(WorkbenchResponse(success=False, operation=args.command, error=e.to_dict()), args.output)
        return EXIT_INVALID
    except PipelineFailure as e:
        logger.warning(f"{args.command}: failed at step {e.step}: {e.message}")
        _emit(WorkbenchResponse(success=False, operation=args.command, error=e.to_dict()), args.output)
        return EXIT_FAILED
    except InternalBug as e:
        logger.error(f"{args.command}: internal bug: {e}")
        error = e.to_dict() if isinstance(e, WorkbenchError) else {"kind": "internal_bug", "message": str(e)}
        _emit(WorkbenchResponse(success=False, operation=args.command, error=error), args.output)
        return EXIT_BUG


if __name__ == "__main__":
    sys.exit(main())
