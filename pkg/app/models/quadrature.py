"""求积区域与结果类型"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from app.utils.exceptions import ConfigurationError


class BallKeep(str, Enum):
    OUTSIDE = "outside"   # ∫_{E \ B(c,r)}
    INSIDE = "inside"     # ∫_{E ∩ B(c,r)}


@dataclass(frozen=True, eq=False)
class Ball:
    """闭球 B(c, r) 及其保留侧"""

    center: np.ndarray
    radius: float
    keep: BallKeep = BallKeep.OUTSIDE

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigurationError(f"球半径必须为正: {self.radius}")


@dataclass(frozen=True)
class Focus:
    """
    网格加密提示：在片 patch_index 的参数点 params 附近按尺度 scale 做几何分级，
    paired 为 True 时关于该点的镜像单元成对求和
    """

    patch_index: int
    params: Tuple[float, ...]
    scale: float
    paired: bool = True


@dataclass(frozen=True)
class QuadratureResult:
    value: np.ndarray
    error: float
    cells: int
    converged: bool
