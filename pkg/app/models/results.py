"""算子计算结果"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app.utils.helpers import as_float_list


@dataclass(frozen=True)
class TransformResult:
    """T_εν(x) 的值及求积状态"""
    value: np.ndarray
    error: float
    converged: bool
    cells: int = 0


@dataclass
class LimitResult:
    """
    极限过程的结果

    samples 为 (尺度, 值) 序列，increments 为相邻值之差的范数。
    converged 只描述极限判据，quadrature_converged 描述各步求积是否达到精度。
    """
    value: np.ndarray
    converged: bool
    last_delta: float
    samples: List[Tuple[float, np.ndarray]] = field(default_factory=list)
    increments: List[float] = field(default_factory=list)
    quadrature_converged: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": as_float_list(self.value),
            "converged": self.converged,
            "last_delta": float(self.last_delta),
            "quadrature_converged": self.quadrature_converged,
            "samples": [[float(s), as_float_list(v)] for s, v in self.samples],
            "increments": [float(d) for d in self.increments],
        }


@dataclass(frozen=True)
class JumpConstantResult:
    """C_K(N) 的数值结果：value 为截断积分加尾项修正，tail_bound 为 |y| > R 部分的估计"""
    value: np.ndarray
    error: float
    tail_bound: float
    radius: float
    closed_form: bool = False


@dataclass
class JumpPointResult:
    """单个评估点上的跳跃公式残差"""
    point_id: int
    x: np.ndarray
    normal: np.ndarray
    density: float
    pv: LimitResult
    t_plus: LimitResult
    t_minus: LimitResult
    jump_constant: np.ndarray
    jump_term: np.ndarray
    residual_avg: float
    residual_jump: float
    residual_trace: List[Tuple[float, float, float]] = field(default_factory=list)
    anchor: Optional[Tuple[int, Tuple[float, ...]]] = None

    @property
    def converged(self) -> bool:
        return all(r.converged and r.quadrature_converged for r in (self.pv, self.t_plus, self.t_minus))

    @property
    def half_difference(self) -> np.ndarray:
        return 0.5 * (self.t_plus.value - self.t_minus.value)
