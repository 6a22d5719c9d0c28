"""jumplab 异常定义"""

from typing import Optional

import numpy as np


class JumpLabError(Exception):
    """所有业务异常的基类"""


class KernelDomainError(JumpLabError, ValueError):
    """核函数在奇点处求值"""


class InvalidKernelError(JumpLabError, ValueError):
    """核函数参数不合法（偶数幂、维数错误、未知名称等）"""


class DegenerateParametrizationError(JumpLabError, ValueError):
    """参数化的 Jacobian 秩不足"""


class DomainError(JumpLabError, ValueError):
    """点不在载体上或参数越界"""


class ConfigurationError(JumpLabError, ValueError):
    """数值配置不满足约束"""


class SceneError(JumpLabError, ValueError):
    """场景文件解析或校验失败"""


class NoDataError(JumpLabError, ValueError):
    """绘图等操作缺少输入数据"""


class QuadratureConvergenceError(JumpLabError):
    """求积在单元预算内没有达到精度要求，携带当前最佳估计和误差界"""

    def __init__(self, message: str, estimate: np.ndarray, error_bound: float, cells: int = 0):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound
        self.cells = cells


class TailBoundError(JumpLabError):
    """跳跃常数的径向截断尾项超出容差，需要增大截断半径 R"""

    def __init__(self, message: str, radius: float, tail_bound: float,
                 suggested_radius: Optional[float] = None):
        super().__init__(message)
        self.radius = radius
        self.tail_bound = tail_bound
        self.suggested_radius = suggested_radius
