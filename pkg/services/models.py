"""
Shared Workbench Models - validation reports, enums and ordered API responses
"""

from typing import Dict, Any, List, Optional
from dataclasses import dataclass, field
from enum import Enum

from services.errors import to_jsonable


# ==================== ENUMS ====================

class ViolationClause(str, Enum):
    """Clauses a validator can report as failed"""
    # brooms
    NOT_ARBORESCENCE = "not_arborescence"
    HEIGHT_ZERO = "height_zero"
    UNBALANCED = "unbalanced"
    WRONG_DEGREE = "wrong_degree"
    ILLEGAL_SUBDIVISION = "illegal_subdivision"
    # broom digraphs
    EMPTY_ROOT_SET = "empty_root_set"
    CERTIFICATE_MISMATCH = "certificate_mismatch"
    INVALID_BROOM = "invalid_broom"
    LEAF_NOT_IN_ROOTS = "leaf_not_in_roots"
    INTERNAL_IN_ROOTS = "internal_in_roots"
    UNION_MISMATCH = "union_mismatch"
    NOT_INTERNALLY_DISJOINT = "not_internally_disjoint"
    # embeddings and proper copies
    NOT_EMBEDDING = "not_embedding"
    HEIGHT_ZERO_OUTSIDE_ROOTS = "height_zero_outside_roots"
    SOURCE_PATHS_OVERLAP = "source_paths_overlap"
    SOURCE_PATH_HITS_COPY = "source_path_hits_copy"
    SOURCE_PATH_MISMATCH = "source_path_mismatch"


class EmbedMode(str, Enum):
    BRUTE = "brute"
    HEURISTIC = "heuristic"
    CONSTRUCTIVE = "constructive"


class CleanUpMode(str, Enum):
    STRICT = "strict"
    PARAMETRIC = "parametric"


class EmbedCase(str, Enum):
    """How constructive_embed attached the removed leaf at one recursion level"""
    BASE = "base"
    IN_NEIGHBOR_OFF_ROOTS = "1"
    IN_NEIGHBOR_AT_ROOT = "2"
    OUT_NEIGHBOR = "3"


class GenModel(str, Enum):
    OUT_REGULAR = "out_regular"
    BROOM = "broom"
    BROOM_DIGRAPH = "broom_digraph"
    GROUNDED_TREE = "grounded_tree"
    FAVORABLE = "favorable"


# ==================== VALIDATION MODELS ====================

@dataclass
class Violation:
    """One failed clause with the vertices/arcs that witness it"""
    clause: ViolationClause
    message: str
    witnesses: List[Any] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "clause": self.clause.value,
            "message": self.message,
            "witnesses": to_jsonable(self.witnesses)
        }


@dataclass
class ValidationReport:
    """Validator outcome: the accepted value, or the failed clauses in check order"""
    valid: bool
    value: Any = None
    violations: List[Violation] = field(default_factory=list)

    @classmethod
    def ok(cls, value: Any) -> "ValidationReport":
        return cls(valid=True, value=value)

    @classmethod
    def fail(cls, clause: ViolationClause, message: str, *witnesses: Any) -> "ValidationReport":
        return cls(valid=False, violations=[Violation(clause, message, list(witnesses))])

    @property
    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None

    def to_dict(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"valid": self.valid}
        if self.violations:
            result["violations"] = [v.to_dict() for v in self.violations]
        return result


# ==================== RESPONSE MODELS (ORDERED) ====================

@dataclass
class WorkbenchResponse:
    """API/CLI response envelope - ORDERED FIELDS"""
    success: bool
    operation: Optional[str] = None
    run_id: Optional[str] = None
    validators_passed: Optional[bool] = None
    result: Optional[Dict[str, Any]] = None
    message: Optional[str] = None
    error: Optional[Dict[str, Any]] = None
    meta: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dict with ORDERED fields"""
        result = {}

        # 1️⃣ TOP: Identifiers
        if self.operation:
            result["operation"] = self.operation
        if self.run_id:
            result["run_id"] = self.run_id

        # 2️⃣ Status
        result["success"] = self.success
        if self.validators_passed is not None:
            result["validators_passed"] = self.validators_passed

        # 3️⃣ Data
        if self.result is not None:
            result["result"] = self.result

        # 4️⃣ Message
        if self.message:
            result["message"] = self.message
        if self.error:
            result["error"] = self.error

        # 5️⃣ BOTTOM: Meta
        if self.meta is not None:
            result["meta"] = self.meta

        return result
