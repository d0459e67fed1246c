"""
Workbench API Routes
POST /api/<operation> runs one operation on a JSON body; results live under /api/results
"""
import logging
import time
import traceback

from flask import Blueprint, Response, jsonify, request

from config import Config
from services.errors import InvalidInput, PipelineFailure, WorkbenchError
from services.models import WorkbenchResponse
from services.operations import OPERATIONS, run_operation
from services.result_storage import get_storage

logger = logging.getLogger(__name__)

workbench_blueprint = Blueprint("workbench", __name__)


# ==================== OPERATIONS ====================
@workbench_blueprint.route("/<operation>", methods=["POST"])
def run(operation: str):
    """
    Run a workbench operation

    200 → operation ran (validators_passed tells whether the input was accepted)
    400 → invalid input, 422 → a pipeline claim failed, 500 → internal bug
    """
    started = time.time()
    if operation not in OPERATIONS:
        response = WorkbenchResponse(success=False, operation=operation,
                                     error={"kind": "not_found", "message": f"unknown operation {operation!r}"})
        return jsonify(response.to_dict()), 404

    payload = request.get_json(silent=True)
    if payload is None:
        response = WorkbenchResponse(success=False, operation=operation,
                                     error={"kind": "invalid_input", "message": "request body must be JSON"})
        return jsonify(response.to_dict()), 400

    print(f"\n{'=' * 70}")
    print(f"🧮 {operation.upper()} REQUEST")
    print(f"{'=' * 70}\n")

    try:
        result, passed = run_operation(operation, payload)
        elapsed = round(time.time() - started, 3)
        response = WorkbenchResponse(success=True, operation=operation, validators_passed=passed,
                                     result=result, meta={"elapsed_seconds": elapsed})
        print(f"✅ {operation} finished in {elapsed}s (validators {'passed' if passed else 'failed'})")
        return jsonify(response.to_dict()), 200

    except InvalidInput as e:
        logger.warning(f"{operation}: invalid input: {e.message}")
        response = WorkbenchResponse(success=False, operation=operation, error=e.to_dict())
        return jsonify(response.to_dict()), 400

    except PipelineFailure as e:
        logger.warning(f"{operation}: pipeline failed at {e.step}: {e.message}")
        response = WorkbenchResponse(success=False, operation=operation, error=e.to_dict())
        return jsonify(response.to_dict()), 422

    except WorkbenchError as e:
        logger.error(f"{operation}: {e.kind}: {e.message}")
        response = WorkbenchResponse(success=False, operation=operation, error=e.to_dict())
        return jsonify(response.to_dict()), 500

    except Exception as e:
        print(f"❌ {operation} error: {e}")
        traceback.print_exc()
        response = WorkbenchResponse(success=False, operation=operation,
                                     error={"kind": "internal_error", "message": str(e)})
        return jsonify(response.to_dict()), 500


# ==================== RESULTS ====================
def _storage_disabled():
    response = WorkbenchResponse(success=False, operation="results",
                                 error={"kind": "disabled", "message": "result storage is disabled"})
    return jsonify(response.to_dict()), 404


@workbench_blueprint.route("/results", methods=["GET"])
def list_results():
    if not Config.ENABLE_RESULT_STORAGE:
        return _storage_disabled()
    runs = get_storage().list_results()
    response = WorkbenchResponse(success=True, operation="results", result={"runs": runs, "count": len(runs)})
    return jsonify(response.to_dict()), 200


@workbench_blueprint.route("/results/<run_id>", methods=["GET"])
def get_result(run_id: str):
    if not Config.ENABLE_RESULT_STORAGE:
        return _storage_disabled()
    stored = get_storage().get_result(run_id)
    if stored is None:
        response = WorkbenchResponse(success=False, operation="results", run_id=run_id,
                                     error={"kind": "not_found", "message": "no such run"})
        return jsonify(response.to_dict()), 404
    response = WorkbenchResponse(success=True, operation="results", run_id=run_id, result=stored)
    return jsonify(response.to_dict()), 200


@workbench_blueprint.route("/results/<run_id>/csv", methods=["GET"])
def get_result_csv(run_id: str):
    if not Config.ENABLE_RESULT_STORAGE:
        return _storage_disabled()
    text = get_storage().get_csv(run_id)
    if text is None:
        response = WorkbenchResponse(success=False, operation="results", run_id=run_id,
                                     error={"kind": "not_found", "message": "no CSV for this run"})
        return jsonify(response.to_dict()), 404
    return Response(text, mimetype="text/csv")


@workbench_blueprint.route("/results/<run_id>", methods=["DELETE"])
def delete_result(run_id: str):
    if not Config.ENABLE_RESULT_STORAGE:
        return _storage_disabled()
    deleted = get_storage().delete_result(run_id)
    response = WorkbenchResponse(success=deleted, operation="results", run_id=run_id,
                                 message="deleted" if deleted else "no such run")
    return jsonify(response.to_dict()), 200 if deleted else 404


# ==================== DOCS ====================
@workbench_blueprint.route("/docs", methods=["GET"])
def docs():
    return jsonify({
        "operations": {name: f"POST /api/{name}" for name in sorted(OPERATIONS)},
        "results": {
            "list": "GET /api/results",
            "get": "GET /api/results/<run_id>",
            "csv": "GET /api/results/<run_id>/csv",
            "delete": "DELETE /api/results/<run_id>"
        },
        "status_codes": {"200": "ran", "400": "invalid input", "422": "pipeline failure", "500": "internal bug"}
    }), 200
