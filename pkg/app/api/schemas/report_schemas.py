from typing import Any, Dict, List, Optional

from pydantic import BaseModel


class LimitTrace(BaseModel):
    value: List[float]
    converged: bool
    last_delta: float
    quadrature_converged: bool = True
    samples: List[List[Any]]
    increments: List[float]


class PointRecord(BaseModel):
    """报告中的单个评估点"""
    point_id: int
    patch: int
    params: List[float]
    x: List[float]
    normal: List[float]
    f: float
    pv: List[float]
    t_plus: List[float]
    t_minus: List[float]
    jump_constant: List[float]
    jump_term: List[float]
    residual_avg: float
    residual_jump: float
    converged: bool
    traces: Dict[str, LimitTrace]
    residual_trace: List[List[float]]
    reflection: Optional[float] = None


class JumpReport(BaseModel):
    generated_at: str
    mode: str
    scene: Dict[str, Any]
    kernel: Dict[str, Any]
    config: Dict[str, Any]
    truncation_length: Optional[float] = None
    residual_tol: float
    all_converged: bool
    passed: bool
    max_residual_avg: float
    max_residual_jump: float
    points: List[PointRecord]


class DiagnosticRow(BaseModel):
    point_id: int
    delta: float
    s_sum: float
    s_diff: float


class DiagnosticTable(BaseModel):
    generated_at: str
    scene: Dict[str, Any]
    kernel: Dict[str, Any]
    rows: List[DiagnosticRow]
