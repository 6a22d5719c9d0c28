"""数值配置模型，默认值取自全局 settings"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config.settings import settings
from app.utils.exceptions import ConfigurationError


class QuadratureConfig(BaseModel):
    """自适应求积参数"""

    order: int = Field(default_factory=lambda: settings.QUAD_ORDER, ge=1, le=40)
    abs_tol: float = Field(default_factory=lambda: settings.QUAD_ABS_TOL, gt=0)
    rel_tol: float = Field(default_factory=lambda: settings.QUAD_REL_TOL, ge=0)
    max_cells: int = Field(default_factory=lambda: settings.QUAD_MAX_CELLS, ge=1)
    initial_cells: int = Field(default_factory=lambda: settings.QUAD_INITIAL_CELLS, ge=1)
    exclusion_refine: float = Field(default_factory=lambda: settings.QUAD_EXCLUSION_REFINE, gt=0)
    line_samples: int = Field(default_factory=lambda: settings.QUAD_LINE_SAMPLES, ge=2)
    max_rounds: int = Field(default_factory=lambda: settings.QUAD_MAX_ROUNDS, ge=1)

    model_config = ConfigDict(frozen=True)


class ExtrapolationConfig(BaseModel):
    """
    ε → 0 与锥内逼近的极限过程参数

    eps0 为 None 时由场景长度尺度乘以 LIMIT_EPS0_FACTOR 得到。
    """

    eps0: Optional[float] = None
    ratio: float = Field(default_factory=lambda: settings.LIMIT_RATIO)
    max_steps: int = Field(default_factory=lambda: settings.LIMIT_MAX_STEPS, ge=2)
    tol: float = Field(default_factory=lambda: settings.LIMIT_TOL)
    richardson_order: int = Field(default_factory=lambda: settings.LIMIT_RICHARDSON_ORDER, ge=0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check(self):
        if self.eps0 is not None and not self.eps0 > 0:
            raise ConfigurationError(f"eps0 必须为正: {self.eps0}")
        if not 0.0 < self.ratio < 1.0:
            raise ConfigurationError(f"ratio 必须在 (0,1) 内: {self.ratio}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol 必须为正: {self.tol}")
        return self

    def resolved(self, length_scale: float) -> "ExtrapolationConfig":
        """按场景尺度补全 eps0"""
        if self.eps0 is not None:
            return self
        return self.model_copy(update={"eps0": settings.LIMIT_EPS0_FACTOR * length_scale})

    def scales(self) -> List[float]:
        """ε_k = eps0·ρ^k, k = 0..max_steps-1"""
        if self.eps0 is None:
            raise ConfigurationError("eps0 未确定，需先调用 resolved()")
        return [self.eps0 * self.ratio ** k for k in range(self.max_steps)]


def check_cone_parameters(a: float, b: float) -> None:
    """要求 0 < b < a < 1"""
    if not 0.0 < b < a < 1.0:
        raise ConfigurationError(f"锥参数必须满足 0 < b < a < 1: a={a}, b={b}")
