"""
跳跃常数 C_K(N)

数值路径在超平面 L(N) = N^⊥ 上以径向-角向形式积分
    C_K(N) = ∫_{L(N)} (Ω(y+N) - Ω(y-N)) / (2(|y|²+1)^{n/2}) dℋⁿ(y)，
|y| ≤ R 部分用分级 Gauss-Legendre，|y| > R 部分经 r = R/v 变换后积分。
"""

import logging
import math
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.linalg import null_space

from app.config.settings import settings
from app.models.kernel import Kernel
from app.models.results import JumpConstantResult
from app.utils.exceptions import ConfigurationError, TailBoundError
from app.utils.helpers import as_float_list

logger = logging.getLogger(__name__)

_MAX_RADIUS = 1e12


class JumpService:
    """跳跃常数服务"""

    def __init__(self):
        logger.info("跳跃常数服务初始化完成")

    @staticmethod
    def _check_normal(kernel: Kernel, normal) -> np.ndarray:
        N = np.asarray(normal, dtype=float).reshape(-1)
        if N.size != kernel.ambient_dim:
            raise ConfigurationError(f"方向维数 {N.size} 与核的环境维数 {kernel.ambient_dim} 不一致")
        if abs(float(np.linalg.norm(N)) - 1.0) > 1e-9:
            raise ConfigurationError("N 必须是单位向量")
        return N

    @staticmethod
    def _directions(kernel: Kernel, N: np.ndarray, angular_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
        """L(N) 中单位球面上的求积方向与权重"""
        basis = null_space(N[None, :]).T    # (n, d)
        if kernel.n == 1:
            e = basis[0]
            return np.stack([e, -e]), np.ones(2)
        if kernel.n == 2:
            beta = 2.0 * math.pi * np.arange(angular_nodes) / angular_nodes
            dirs = np.cos(beta)[:, None] * basis[0] + np.sin(beta)[:, None] * basis[1]
            return dirs, np.full(angular_nodes, 2.0 * math.pi / angular_nodes)
        raise ConfigurationError(f"数值跳跃常数只支持 n <= 2，收到 n={kernel.n}")

    @staticmethod
    def _integrand(kernel: Kernel, N: np.ndarray, ys: np.ndarray) -> np.ndarray:
        r2 = np.sum(ys ** 2, axis=1)
        diff = kernel.omega(ys + N) - kernel.omega(ys - N)
        return diff / (2.0 * (r2 + 1.0) ** (kernel.n / 2.0))[:, None]

    def _shells(self, kernel: Kernel, N: np.ndarray, dirs: np.ndarray, dir_w: np.ndarray,
                radii: np.ndarray) -> np.ndarray:
        """半径 r 的球面上的积分 ∫_{|y|=r} g dσ，形状 (len(radii), value_dim)"""
        pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, kernel.ambient_dim)
        g = self._integrand(kernel, N, pts).reshape(radii.size, dirs.shape[0], kernel.value_dim)
        return np.einsum("rdk,d->rk", g, dir_w) * (radii ** (kernel.n - 1))[:, None]

    def _radial(self, kernel, N, dirs, dir_w, radius: float, order: int, tail: bool) -> np.ndarray:
        x, w = np.polynomial.legendre.leggauss(order)
        edges = [0.0]
        e = 0.5
        while e < radius:
            edges.append(e)
            e *= 2.0
        edges.append(radius)
        a = np.asarray(edges[:-1])
        b = np.asarray(edges[1:])
        half = 0.5 * (b - a)
        r = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
        weights = (half[:, None] * w[None, :]).reshape(-1)
        total = weights @ self._shells(kernel, N, dirs, dir_w, r.reshape(-1))
        if tail:
            # ∫_R^∞ h(r) dr = ∫_0^1 h(R/v)·R/v² dv
            va = np.array([0.0, 0.5])
            vb = np.array([0.5, 1.0])
            vhalf = 0.5 * (vb - va)
            v = ((0.5 * (va + vb))[:, None] + vhalf[:, None] * x[None, :]).reshape(-1)
            vw = (vhalf[:, None] * w[None, :]).reshape(-1)
            total = total + (vw * radius / v ** 2) @ self._shells(kernel, N, dirs, dir_w, radius / v)
        return total

    def tail_bound(self, kernel: Kernel, normal, radius: float,
                   angular_nodes: Optional[int] = None) -> float:
        """
        |y| > R 部分的经验上界

        在 |y| = R 上取 |g| 的最大值，按 |y|^{-(n+1)} 衰减外推：σ_{n-1}·max|g|·Rⁿ
        """
        N = self._check_normal(kernel, normal)
        dirs, dir_w = self._directions(kernel, N, angular_nodes or settings.JUMP_ANGULAR_NODES)
        g = self._integrand(kernel, N, radius * dirs)
        return float(dir_w.sum() * np.linalg.norm(g, axis=1).max() * radius ** kernel.n)

    def jump_constant_numeric(
        self,
        kernel: Kernel,
        normal,
        radius: Optional[float] = None,
        order: Optional[int] = None,
        angular_nodes: Optional[int] = None,
        tail_correction: Optional[bool] = None,
        tail_tol: Optional[float] = None,
    ) -> JumpConstantResult:
        """
        数值计算跳跃常数

        Args:
            kernel: 奇核
            normal: 单位法向 N
            radius: 径向截断半径 R
            order: 每个径向区间的 Gauss 阶数
            angular_nodes: n = 2 时角向梯形节点数
            tail_correction: 是否计算 |y| > R 的变换积分
            tail_tol: 尾项容差

        Returns:
            JumpConstantResult: 数值、误差估计、尾项界与 R

        Raises:
            TailBoundError: 未做尾项修正且尾项界超过容差
        """
        N = self._check_normal(kernel, normal)
        R = float(radius or settings.JUMP_RADIUS)
        if not R > 0:
            raise ConfigurationError(f"截断半径必须为正: R={R}")
        order = order or settings.JUMP_RADIAL_ORDER
        tail = settings.JUMP_TAIL_CORRECTION if tail_correction is None else tail_correction
        tol = settings.JUMP_TAIL_TOL if tail_tol is None else tail_tol
        dirs, dir_w = self._directions(kernel, N, angular_nodes or settings.JUMP_ANGULAR_NODES)

        bound = self.tail_bound(kernel, N, R, angular_nodes)
        if not tail and bound > tol:
            raise TailBoundError(
                f"径向截断尾项 {bound:.3e} 超过容差 {tol:.1e}，需要增大 R",
                radius=R, tail_bound=bound, suggested_radius=1.1 * R * bound / tol,
            )
        value = self._radial(kernel, N, dirs, dir_w, R, order, tail)
        coarse = self._radial(kernel, N, dirs, dir_w, R, max(2, order // 2), tail)
        error = float(np.linalg.norm(value - coarse))
        if not tail:
            error += bound
        logger.debug(f"数值跳跃常数: R={R:.1e}, 尾项界={bound:.2e}, 误差={error:.2e}")
        return JumpConstantResult(value=value, error=error, tail_bound=bound, radius=R)

    def jump_constant(self, kernel: Kernel, normal, numeric: bool = False) -> JumpConstantResult:
        """
        C_K(N)：有闭式时直接返回，否则走数值路径，并增大 R 直到尾项界 < JUMP_TAIL_TOL
        """
        N = self._check_normal(kernel, normal)
        closed = None if numeric else kernel.closed_form_jump(N)
        if closed is not None:
            return JumpConstantResult(value=np.asarray(closed, dtype=float), error=0.0, tail_bound=0.0,
                                      radius=math.inf, closed_form=True)
        R = settings.JUMP_RADIUS
        while True:
            try:
                return self.jump_constant_numeric(kernel, N, radius=R)
            except TailBoundError as e:
                if e.suggested_radius is None or e.suggested_radius > _MAX_RADIUS:
                    raise
                logger.info(f"增大截断半径: {R:.1e} -> {e.suggested_radius:.1e}")
                R = e.suggested_radius

    def describe_constant(self, kernel: Kernel, direction, numeric: bool = False) -> Dict[str, Any]:
        """跳跃常数及其闭式参照，供 CLI 与 HTTP 接口输出"""
        result = self.jump_constant(kernel, direction, numeric=numeric)
        closed = kernel.closed_form_jump(self._check_normal(kernel, direction))
        return {
            "kernel": kernel.describe(),
            "direction": as_float_list(direction),
            "value": as_float_list(result.value),
            "closed_form": None if closed is None else as_float_list(closed),
            "error": float(result.error),
            "tail_bound": float(result.tail_bound),
            "radius": float(result.radius) if math.isfinite(result.radius) else None,
        }
