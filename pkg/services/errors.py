"""
Workbench Exceptions
Every failure a pipeline can raise, each with a JSON view for routes and CLI
"""
from typing import Any, Dict, Optional


def to_jsonable(value: Any) -> Any:
    """Turn witnesses (frozensets, tuples, walks) into plain JSON values"""
    if isinstance(value, (set, frozenset)):
        return sorted(to_jsonable(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    # Walk
    if isinstance(getattr(value, "vertices", None), tuple):
        return list(value.vertices)
    return value


class WorkbenchError(Exception):
    """Base class for all workbench failures"""
    kind = "workbench_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        result = {"kind": self.kind, "message": self.message}
        if self.details:
            result["details"] = to_jsonable(self.details)
        return result


class InvalidInput(WorkbenchError, ValueError):
    """Malformed input or an unmet documented precondition"""
    kind = "invalid_input"


class PreconditionViolation(InvalidInput):
    """Precondition failed on a concrete witness (vertex, arc or path)"""
    kind = "precondition_violation"

    def __init__(self, message: str, witness: Any = None, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.witness = witness

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        if self.witness is not None:
            result["witness"] = to_jsonable(self.witness)
        return result


class StrictConstantError(InvalidInput):
    """Strict mode refused parameters below the existence-proof constants"""
    kind = "strict_constant"

    def __init__(self, message: str, required: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.required = required

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        result["required"] = self.required
        return result


class PipelineFailure(WorkbenchError):
    """A runtime claim did not hold at the supplied (sub-threshold) parameters"""
    kind = "pipeline_failure"

    def __init__(self, message: str, step: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.step = step

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        result["step"] = self.step
        return result


class SubsampleFailure(PipelineFailure):
    kind = "subsample_failure"


class EmbeddingFailure(PipelineFailure):
    kind = "embedding_failure"

    def __init__(self, message: str, tree_order: int, case: str, claim: str,
                 details: Optional[Dict[str, Any]] = None):
        super().__init__(message, step=f"case {case}", details=details)
        self.tree_order = tree_order
        self.case = case
        self.claim = claim

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        result.update({"tree_order": self.tree_order, "case": self.case, "claim": self.claim})
        return result


class InternalBug(WorkbenchError, AssertionError):
    """A property the construction guarantees did not hold"""
    kind = "internal_bug"
