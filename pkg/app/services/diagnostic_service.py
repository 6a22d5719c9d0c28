"""
对称和/对称差诊断与平面上的精确恒等式检查

对称点 y* = 2x - y；在平面片上奇核的反射相消、平移不变与齐次性都应精确成立，
数值偏差只来自求积。
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from app.config.settings import settings
from app.models.configs import QuadratureConfig, check_cone_parameters
from app.models.geometry import CarrierPoint, Cone, TangentFrame, make_plane_patch
from app.models.kernel import Kernel
from app.models.measure import RadonMeasure, constant_density
from app.models.quadrature import Ball, BallKeep, Focus
from app.services.operator_service import OperatorService, Side
from app.utils.exceptions import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

_POLAR_LEVELS = 3
_AZIMUTHS = 4


def cone_directions(frame: TangentFrame, a: float, side: Side = Side.PLUS) -> np.ndarray:
    """
    锥 X_a^±(x) 内的单位方向，极角严格小于 arccos(a)

    n = 1 时切向取 ±e₁；n = 2 时方位角等分 [0, 2π)。
    """
    limit = math.acos(a)
    axis = Side(side).sign * frame.normal
    dirs = [axis]
    for level in range(1, _POLAR_LEVELS):
        alpha = limit * level / _POLAR_LEVELS
        if frame.n == 1:
            tangents = [frame.basis[0], -frame.basis[0]]
        else:
            betas = 2.0 * math.pi * np.arange(_AZIMUTHS) / _AZIMUTHS
            tangents = [math.cos(bt) * frame.basis[0] + math.sin(bt) * frame.basis[1] for bt in betas]
        for v in tangents:
            dirs.append(math.cos(alpha) * axis + math.sin(alpha) * v)
    return np.asarray(dirs)


def cone_samples(frame: TangentFrame, a: float, radii: Sequence[float], side: Side = Side.PLUS) -> np.ndarray:
    """半径与角度分层的锥内采样点，按 (半径, 方向) 顺序排列"""
    dirs = cone_directions(frame, a, side)
    pts = [frame.point + r * d for r in radii for d in dirs]
    cone = Cone(apex=frame.point, axis=Side(side).sign * frame.normal, aperture=a)
    pts = np.asarray(pts)
    if not np.all(cone.contains(pts)):
        raise DomainError("锥采样点落在锥外")
    return pts


class DiagnosticService:
    """S_δ / S̃_δ 诊断与平面检查"""

    def __init__(self, operators: Optional[OperatorService] = None):
        self.operators = operators or OperatorService()
        logger.info("诊断服务初始化完成")

    @staticmethod
    def sample_radii(delta: float, levels: int) -> List[float]:
        """半径层 δ·2^{-j}, j = 0..levels-1"""
        if not delta > 0 or levels < 1:
            raise ConfigurationError("delta 必须为正且半径层数 >= 1")
        return [delta * 2.0 ** (-j) for j in range(levels)]

    @classmethod
    def sample_points(cls, frame: TangentFrame, a: float, delta: float, sample_count: int,
                      min_levels: int = 1) -> np.ndarray:
        """
        |x-y| ≤ δ 内的锥内采样点，sample_count 是点数而不是半径层数

        半径层数取 ceil(sample_count / 方向数) 且不少于 min_levels，
        点按 (半径由大到小, 方向) 排列；层数由 min_levels 抬高时保留全部点。
        """
        if sample_count < 1:
            raise ConfigurationError("sample_count 必须 >= 1")
        directions = len(cone_directions(frame, a))
        levels = -(-sample_count // directions)
        pts = cone_samples(frame, a, cls.sample_radii(delta, max(levels, min_levels)))
        return pts if min_levels > levels else pts[:sample_count]

    def symmetric_values(self, kernel: Kernel, measure: RadonMeasure, anchor: CarrierPoint,
                         points: np.ndarray, b: float) -> List[tuple]:
        """对每个采样点返回 (|y-x|, T(y), T(y*))，截断半径均为 b|x-y|"""
        frame = measure.carrier.frame_at(anchor)
        out = []
        for y in points:
            y_star = frame.reflect(y)
            t_y = self.operators.cone_value(kernel, measure, anchor, y, b).value
            t_star = self.operators.cone_value(kernel, measure, anchor, y_star, b).value
            out.append((float(np.linalg.norm(y - frame.point)), t_y, t_star))
        return out

    def _diagnostic(self, kernel, measure, anchor, delta, a, b, sample_count, target, difference: bool) -> float:
        check_cone_parameters(a, b)
        frame = measure.carrier.frame_at(anchor)
        pts = self.sample_points(frame, a, delta, sample_count or settings.DIAGNOSTIC_SAMPLES)
        sign = -1.0 if difference else 1.0
        worst = 0.0
        for _, t_y, t_star in self.symmetric_values(kernel, measure, anchor, pts, b):
            worst = max(worst, float(np.linalg.norm(target - 0.5 * (t_y + sign * t_star))))
        return worst

    def symmetric_sum_diagnostic(self, kernel: Kernel, measure: RadonMeasure, anchor: CarrierPoint,
                                 delta: float, a: Optional[float] = None, b: Optional[float] = None,
                                 sample_count: Optional[int] = None,
                                 pv: Optional[np.ndarray] = None) -> float:
        """
        S_δν(x) = sup |pv Tν(x) - ½(T_{b|x-y|}ν(y) + T_{b|x-y|}ν(y*))|，y ∈ X_a⁺(x), |x-y| ≤ δ

        Args:
            pv: 预先计算的主值，缺省时现算
        """
        a = settings.CONE_APERTURE if a is None else a
        b = settings.CONE_TRUNCATION if b is None else b
        if pv is None:
            pv = self.operators.principal_value(kernel, measure, anchor).value
        return self._diagnostic(kernel, measure, anchor, delta, a, b, sample_count, np.asarray(pv), False)

    def symmetric_difference_diagnostic(self, kernel: Kernel, measure: RadonMeasure, anchor: CarrierPoint,
                                        delta: float, a: Optional[float] = None, b: Optional[float] = None,
                                        sample_count: Optional[int] = None) -> float:
        """S̃_δν(x) = sup |C_K(N_x)·f(x) - ½(T_{b|x-y|}ν(y) - T_{b|x-y|}ν(y*))|"""
        a = settings.CONE_APERTURE if a is None else a
        b = settings.CONE_TRUNCATION if b is None else b
        frame = measure.carrier.frame_at(anchor)
        density = float(measure.density_values(anchor.array)[0])
        _, term = self.operators.jump_term(kernel, measure, frame.normal, density)
        return self._diagnostic(kernel, measure, anchor, delta, a, b, sample_count, term, True)

    # ------------------------------------------------------------------
    # 平面检查
    # ------------------------------------------------------------------
    def plane_transform(self, kernel: Kernel, frame: TangentFrame, y, radius: float,
                        half_width: Optional[float] = None,
                        config: Optional[QuadratureConfig] = None) -> np.ndarray:
        """T(χ_{B̄(x,R)} ℋⁿ|_{L_x})(y)，y 不在平面上"""
        point = np.asarray(y, dtype=float)
        dist = frame.distance_to_plane(point)
        if dist <= 0.0:
            raise DomainError("求值点不能位于平面上")
        plane = make_plane_patch(frame, half_width or 1.05 * radius)
        measure = RadonMeasure(plane, constant_density(1.0))
        result = self.operators.quadrature.integrate(
            plane,
            self.operators.make_integrand(kernel, measure, point),
            kernel.value_dim,
            ball=Ball(center=frame.point, radius=float(radius), keep=BallKeep.INSIDE),
            focus=Focus(0, tuple([0.0] * frame.n), dist, paired=True),
            config=config,
        )
        return result.value

    def flat_plane_reflection_check(self, kernel: Kernel, frame: TangentFrame, y, radius: float,
                                    config: Optional[QuadratureConfig] = None) -> float:
        """|T(χ_B ℋⁿ|_L)(y) + T(χ_B ℋⁿ|_L)(y*)|，应在求积精度内为 0"""
        value = self.plane_transform(kernel, frame, y, radius, config=config)
        mirrored = self.plane_transform(kernel, frame, frame.reflect(y), radius, config=config)
        return float(np.linalg.norm(value + mirrored))

    def plane_translation_check(self, kernel: Kernel, frame: TangentFrame, y, shift, radius: float,
                                config: Optional[QuadratureConfig] = None) -> float:
        """平行于 L 平移 y 与球心，T 值不变"""
        s = np.asarray(shift, dtype=float)
        if abs(float(np.dot(s, frame.normal))) > 1e-12 * max(1.0, float(np.linalg.norm(s))):
            raise ConfigurationError("平移向量必须平行于切平面")
        moved = TangentFrame(point=frame.point + s, basis=frame.basis, normal=frame.normal)
        value = self.plane_transform(kernel, frame, y, radius, config=config)
        shifted = self.plane_transform(kernel, moved, np.asarray(y, dtype=float) + s, radius, config=config)
        return float(np.linalg.norm(value - shifted))

    def plane_homogeneity_check(self, kernel: Kernel, normal, scales: Sequence[float], c: float = 2.0,
                                config: Optional[QuadratureConfig] = None) -> float:
        """T(χ_{B(0,c·t)} ℋⁿ|_{L(N)})(tN) 与 t 无关，返回各尺度相对首个尺度的最大偏差"""
        N = np.asarray(normal, dtype=float)
        if abs(float(np.linalg.norm(N)) - 1.0) > 1e-9:
            raise ConfigurationError("N 必须是单位向量")
        frame = TangentFrame(point=np.zeros(N.size), basis=null_space(N[None, :]).T, normal=N)
        values = [self.plane_transform(kernel, frame, t * N, c * t, config=config) for t in scales]
        return max(float(np.linalg.norm(v - values[0])) for v in values)
