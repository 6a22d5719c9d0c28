import logging
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from app.config.settings import settings
from app.models.configs import ExtrapolationConfig, QuadratureConfig, check_cone_parameters
from app.models.geometry import CarrierPoint
from app.models.kernel import Kernel
from app.models.measure import RadonMeasure
from app.models.quadrature import Ball, Focus
from app.models.results import JumpPointResult, LimitResult, TransformResult
from app.services.jump_service import JumpService
from app.services.quadrature_service import Integrand, QuadratureService
from app.utils.exceptions import ConfigurationError, DomainError

logger = logging.getLogger(__name__)


class Side(str, Enum):
    PLUS = "+"
    MINUS = "-"

    @property
    def sign(self) -> float:
        return 1.0 if self == Side.PLUS else -1.0


class OperatorService:
    """截断奇异积分、主值与非切向极限"""

    def __init__(self, quadrature: Optional[QuadratureService] = None,
                 jump_service: Optional[JumpService] = None,
                 quad_config: Optional[QuadratureConfig] = None,
                 far_field: Optional[bool] = None):
        self.quadrature = quadrature or QuadratureService(quad_config)
        self.jump_service = jump_service or JumpService()
        self.quad_config = quad_config
        self.far_field = settings.FAR_FIELD_CORRECTION if far_field is None else far_field
        logger.info("算子服务初始化完成")

    # ------------------------------------------------------------------
    # 截断变换
    # ------------------------------------------------------------------
    @staticmethod
    def value_dim(kernel: Kernel, measure: RadonMeasure) -> int:
        return 1 if measure.normal_weighted else kernel.value_dim

    @staticmethod
    def _check(kernel: Kernel, measure: RadonMeasure) -> None:
        dim = measure.ambient_dim
        if dim is not None and dim != kernel.ambient_dim:
            raise ConfigurationError(f"测度的环境维数 {dim} 与核的环境维数 {kernel.ambient_dim} 不一致")
        if measure.normal_weighted and kernel.value_dim != kernel.ambient_dim:
            raise ConfigurationError("法向加权测度需要向量值核")

    @staticmethod
    def make_integrand(kernel: Kernel, measure: RadonMeasure, x: np.ndarray) -> Integrand:
        carrier = measure.carrier

        def integrand(p: int, t: np.ndarray, pts: np.ndarray) -> np.ndarray:
            values = kernel.evaluate(x - pts)
            dens = measure.density_values(t)
            if measure.normal_weighted:
                normals = carrier.normals(p, t, pts)
                return (np.einsum("mk,mk->m", values, normals) * dens)[:, None]
            return values * dens[:, None]

        return integrand

    def truncated_transform(self, kernel: Kernel, measure: RadonMeasure, x, eps: float,
                            focus: Optional[Focus] = None,
                            config: Optional[QuadratureConfig] = None) -> TransformResult:
        """
        T_εν(x) = ∫_{|x-y|>ε} K(x-y) dν(y)

        Args:
            kernel: 核
            measure: 测度
            x: 求值点
            eps: 截断半径
            focus: 可选的网格加密点
            config: 求积参数

        Returns:
            TransformResult: 值、求积误差与收敛标志
        """
        if not eps > 0:
            raise ConfigurationError(f"截断半径必须为正: eps={eps}")
        self._check(kernel, measure)
        point = np.asarray(x, dtype=float)
        vd = self.value_dim(kernel, measure)
        value = np.zeros(vd)
        error, converged, cells = 0.0, True, 0
        if measure.has_absolute_part:
            result = self.quadrature.integrate(
                measure.carrier,
                self.make_integrand(kernel, measure, point),
                vd,
                ball=Ball(center=point, radius=float(eps)),
                focus=focus,
                config=config or self.quad_config,
            )
            value = value + result.value
            error, converged, cells = result.error, result.converged, result.cells
            if self.far_field and measure.carrier.shape == "segment":
                value = value + self._far_field(kernel, measure, point)
        for atom in measure.atoms:
            diff = point - atom.point
            if np.linalg.norm(diff) > eps:
                value = value + atom.weight * kernel.evaluate(diff)
        return TransformResult(value=value, error=error, converged=converged, cells=cells)

    def _far_field(self, kernel: Kernel, measure: RadonMeasure, x: np.ndarray) -> np.ndarray:
        """线段两端向无穷延长部分的贡献，密度取端点值常数延拓"""
        carrier = measure.carrier
        patch = carrier.patches[0]
        origin = np.asarray(patch.extension.origin)
        direction = np.asarray(patch.extension.direction)
        vd = self.value_dim(kernel, measure)
        total = np.zeros(vd)
        for end, limits in ((patch.upper, (float(patch.upper[0]), np.inf)),
                            (patch.lower, (-np.inf, float(patch.lower[0])))):
            f_end = float(measure.density_values(end)[0])
            normal = carrier.normals(0, end)[0]

            def component(s: float, c: int) -> float:
                k = kernel.evaluate(x - (origin + s * direction))
                if measure.normal_weighted:
                    return float(np.dot(k, normal)) * f_end
                return float(k[c]) * f_end

            for c in range(vd):
                total[c] += quad(component, *limits, args=(c,), epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        return total

    def maximal_transform(self, kernel: Kernel, measure: RadonMeasure, x, eps_grid: Sequence[float],
                          focus: Optional[Focus] = None) -> float:
        """T_*ν(x) 在截断网格上的估计 max |T_εν(x)|"""
        grid = list(eps_grid)
        if not grid:
            raise ConfigurationError("截断半径网格不能为空")
        return max(
            float(np.linalg.norm(self.truncated_transform(kernel, measure, x, eps, focus=focus).value))
            for eps in grid
        )

    # ------------------------------------------------------------------
    # 极限过程
    # ------------------------------------------------------------------
    @staticmethod
    def run_limit(label: str, scales: Sequence[float],
                  evaluate: Callable[[float], TransformResult], cfg: ExtrapolationConfig) -> LimitResult:
        """
        按尺度序列求值，连续两个增量都小于 tol 时判定收敛

        richardson_order = p > 0 时使用 w_k = v_k + (v_k - v_{k-1})/(ρ^{-p} - 1)
        """
        raw: List[np.ndarray] = []
        samples = []
        increments: List[float] = []
        quad_ok = True
        converged = False
        last_delta = float("inf")
        p = cfg.richardson_order
        for k, scale in enumerate(scales):
            result = evaluate(scale)
            quad_ok = quad_ok and result.converged
            raw.append(result.value)
            current = raw[k]
            if p > 0 and k > 0:
                current = raw[k] + (raw[k] - raw[k - 1]) / (cfg.ratio ** (-p) - 1.0)
            samples.append((float(scale), current))
            if len(samples) >= 2:
                last_delta = float(np.linalg.norm(current - samples[-2][1]))
                increments.append(last_delta)
                logger.debug(f"{label}: 尺度={scale:.3e}, 增量={last_delta:.3e}")
            if len(increments) >= 2 and increments[-1] < cfg.tol and increments[-2] < cfg.tol:
                converged = True
                break
        if not converged:
            logger.warning(f"{label} 在 {len(samples)} 步内未收敛，最后增量 {last_delta:.3e}")
        return LimitResult(
            value=samples[-1][1], converged=converged, last_delta=last_delta,
            samples=samples, increments=increments, quadrature_converged=quad_ok,
        )

    def _carrier_point(self, measure: RadonMeasure, anchor: CarrierPoint) -> np.ndarray:
        if measure.carrier is None:
            raise DomainError("测度没有载体，无法在载体点上求主值或非切向极限")
        x = measure.carrier.point_of(anchor)
        for atom in measure.atoms:
            if np.linalg.norm(atom.point - x) == 0.0:
                raise DomainError(f"求值点 {x.tolist()} 与点质量位置重合")
        return x

    def principal_value(self, kernel: Kernel, measure: RadonMeasure, anchor: CarrierPoint,
                        cfg: Optional[ExtrapolationConfig] = None) -> LimitResult:
        """
        pv Tν(x) = lim_{ε→0} T_εν(x)，ε_k = eps0·ρ^k

        Args:
            kernel: 核
            measure: 测度
            anchor: 载体上的求值点
            cfg: 极限参数

        Returns:
            LimitResult: 最后一次迭代值及收敛信息
        """
        x = self._carrier_point(measure, anchor)
        cfg = (cfg or ExtrapolationConfig()).resolved(measure.carrier.length_scale)

        def evaluate(eps: float) -> TransformResult:
            focus = Focus(anchor.patch_index, anchor.params, eps, paired=True)
            return self.truncated_transform(kernel, measure, x, eps, focus=focus)

        return self.run_limit("主值", cfg.scales(), evaluate, cfg)

    def cone_value(self, kernel: Kernel, measure: RadonMeasure, anchor: CarrierPoint, y,
                   b: float) -> TransformResult:
        """T_{b|x-y|}ν(y)"""
        x = measure.carrier.point_of(anchor)
        point = np.asarray(y, dtype=float)
        dist = float(np.linalg.norm(point - x))
        if dist == 0.0:
            raise DomainError("逼近点不能与 x 重合")
        focus = Focus(anchor.patch_index, anchor.params, dist, paired=True)
        return self.truncated_transform(kernel, measure, point, b * dist, focus=focus)

    def nontangential_limit(self, kernel: Kernel, measure: RadonMeasure, anchor: CarrierPoint,
                            side: Side, a: Optional[float] = None, b: Optional[float] = None,
                            cfg: Optional[ExtrapolationConfig] = None) -> LimitResult:
        """
        T^±ν(x)：沿锥轴 y_t = x ± t·N_x 逼近，求 T_{b·t}ν(y_t) 的极限

        锥轴对任意 a < 1 都在 X_a^±(x) 内，a 只参与参数校验。
        """
        a = settings.CONE_APERTURE if a is None else a
        b = settings.CONE_TRUNCATION if b is None else b
        check_cone_parameters(a, b)
        side = Side(side)
        x = self._carrier_point(measure, anchor)
        frame = measure.carrier.frame_at(anchor)
        cfg = (cfg or ExtrapolationConfig()).resolved(measure.carrier.length_scale)

        def evaluate(t: float) -> TransformResult:
            y = x + side.sign * t * frame.normal
            return self.cone_value(kernel, measure, anchor, y, b)

        return self.run_limit(f"T{side.value}", cfg.scales(), evaluate, cfg)

    # ------------------------------------------------------------------
    # 跳跃公式
    # ------------------------------------------------------------------
    def jump_term(self, kernel: Kernel, measure: RadonMeasure, normal: np.ndarray,
                  density: float) -> Tuple[np.ndarray, np.ndarray]:
        """返回 (C_K(N), 跳跃项)；法向加权测度时跳跃项为 (C_K(N)·N)·f"""
        ck = self.jump_service.jump_constant(kernel, normal).value
        if measure.normal_weighted:
            return ck, np.array([float(np.dot(ck, normal)) * density])
        return ck, ck * density

    def jump_residuals(self, kernel: Kernel, measure: RadonMeasure, anchor: CarrierPoint,
                       a: Optional[float] = None, b: Optional[float] = None,
                       cfg: Optional[ExtrapolationConfig] = None, point_id: int = 0) -> JumpPointResult:
        """
        计算 pv、T⁺、T⁻ 与两个跳跃公式残差

        residual_avg = |½(T⁺+T⁻) - pv|，residual_jump = |½(T⁺-T⁻) - C_K(N_x)·f(x)|
        """
        a = settings.CONE_APERTURE if a is None else a
        b = settings.CONE_TRUNCATION if b is None else b
        check_cone_parameters(a, b)
        x = self._carrier_point(measure, anchor)
        frame = measure.carrier.frame_at(anchor)
        density = float(measure.density_values(anchor.array)[0])

        pv = self.principal_value(kernel, measure, anchor, cfg)
        plus = self.nontangential_limit(kernel, measure, anchor, Side.PLUS, a, b, cfg)
        minus = self.nontangential_limit(kernel, measure, anchor, Side.MINUS, a, b, cfg)
        ck, term = self.jump_term(kernel, measure, frame.normal, density)

        residual_avg = float(np.linalg.norm(0.5 * (plus.value + minus.value) - pv.value))
        residual_jump = float(np.linalg.norm(0.5 * (plus.value - minus.value) - term))
        trace = []
        for (scale, v), (_, vp), (_, vm) in zip(pv.samples, plus.samples, minus.samples):
            trace.append((
                scale,
                float(np.linalg.norm(0.5 * (vp + vm) - v)),
                float(np.linalg.norm(0.5 * (vp - vm) - term)),
            ))

        record = JumpPointResult(
            point_id=point_id, x=x, normal=frame.normal, density=density,
            pv=pv, t_plus=plus, t_minus=minus, jump_constant=ck, jump_term=term,
            residual_avg=residual_avg, residual_jump=residual_jump, residual_trace=trace,
            anchor=(anchor.patch_index, anchor.params),
        )
        if not record.converged:
            logger.warning(f"评估点 {point_id} 未完全收敛: res_avg={residual_avg:.2e}, res_jump={residual_jump:.2e}")
        return record
