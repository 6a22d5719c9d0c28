import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from app.config.settings import settings
from app.models.configs import QuadratureConfig
from app.models.geometry import CarrierPoint
from app.models.measure import RadonMeasure
from app.models.quadrature import Ball, BallKeep
from app.services.quadrature_service import QuadratureService
from app.utils.exceptions import ConfigurationError, DomainError
from app.utils.helpers import geometric_grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MaximalDensity:
    """M_nν(x) 的网格估计；infinite 为 True 表示 x 处有点质量"""
    value: float
    infinite: bool
    radius: Optional[float]


class MeasureService:
    """测度查询：密度、球质量与极大密度"""

    def __init__(self, quadrature: Optional[QuadratureService] = None):
        self.quadrature = quadrature or QuadratureService()
        logger.info("测度服务初始化完成")

    def density_at(self, measure: RadonMeasure, where: Union[CarrierPoint, Sequence[float]]) -> float:
        """
        密度 f(x)，点质量不贡献密度

        Args:
            measure: 测度
            where: 载体点，或环境空间中位于载体上的点

        Returns:
            float: f(x)

        Raises:
            DomainError: 测度没有载体或点不在载体上
        """
        if measure.carrier is None:
            raise DomainError("纯原子测度没有载体，密度无定义")
        anchor = where if isinstance(where, CarrierPoint) else measure.carrier.locate(where)
        return float(measure.density_values(anchor.array)[0])

    def ball_mass(self, measure: RadonMeasure, x, r: float,
                  config: Optional[QuadratureConfig] = None) -> float:
        """|ν|(B̄(x, r)) = ∫_{E∩B} |f| dℋⁿ + Σ_{|pᵢ-x|≤r} |wᵢ|"""
        if not r > 0:
            raise ConfigurationError(f"半径必须为正: r={r}")
        center = np.asarray(x, dtype=float)
        total = 0.0
        if measure.has_absolute_part:
            result = self.quadrature.integrate(
                measure.carrier,
                lambda p, t, pts: np.abs(measure.density_values(t))[:, None],
                1,
                ball=Ball(center=center, radius=float(r), keep=BallKeep.INSIDE),
                config=config,
                strict=True,
            )
            total += float(result.value[0])
        for atom in measure.atoms:
            if np.linalg.norm(atom.point - center) <= r:
                total += abs(atom.weight)
        return total

    def default_radii(self, measure: RadonMeasure, x) -> np.ndarray:
        """1e-4·diam 到 4·diam 的几何网格"""
        if measure.carrier is not None:
            diam = measure.carrier.diameter()
        else:
            center = np.asarray(x, dtype=float)
            diam = max((float(np.linalg.norm(a.point - center)) for a in measure.atoms), default=1.0)
            diam = diam if diam > 0 else 1.0
        return geometric_grid(1e-4 * diam, 4.0 * diam, settings.MAXIMAL_RADII)

    def maximal_density(self, measure: RadonMeasure, x, radii: Optional[Sequence[float]] = None,
                        config: Optional[QuadratureConfig] = None) -> MaximalDensity:
        """
        M_nν(x) = sup_r |ν|(B(x,r))/rⁿ 在半径网格上的估计

        Args:
            measure: 测度
            x: 中心点
            radii: 半径网格，默认见 default_radii

        Returns:
            MaximalDensity: 最大值与取到最大值的半径
        """
        center = np.asarray(x, dtype=float)
        n = measure.carrier.n if measure.carrier is not None else center.size - 1
        for atom in measure.atoms:
            if atom.weight != 0.0 and np.linalg.norm(atom.point - center) == 0.0:
                logger.debug("中心点处有点质量，极大密度为无穷")
                return MaximalDensity(value=float("inf"), infinite=True, radius=None)

        grid = np.asarray(radii if radii is not None else self.default_radii(measure, center), dtype=float)
        if grid.size == 0 or np.any(grid <= 0):
            raise ConfigurationError("半径网格必须非空且为正")
        best, best_r = -1.0, None
        for r in grid:
            ratio = self.ball_mass(measure, center, float(r), config) / float(r) ** n
            if ratio > best:
                best, best_r = ratio, float(r)
        return MaximalDensity(value=best, infinite=False, radius=best_r)
