from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.api.schemas.scene_schemas import SceneSpec
from app.config.settings import settings
from app.models.configs import ExtrapolationConfig, QuadratureConfig, check_cone_parameters


class KernelSpec(BaseModel):
    name: str = "riesz"
    n: Optional[int] = None
    j: Optional[int] = None


class AnchorSpec(BaseModel):
    """评估点：片序号与参数"""
    patch: int = 0
    params: List[float]


class ExperimentConfig(BaseModel):
    """
    一次跳跃公式验证实验的完整配置

    scene 可以是内置场景名、场景文件路径或内联的场景描述。
    """

    scene: Union[str, SceneSpec] = "unit-circle"
    kernel: KernelSpec = Field(default_factory=KernelSpec)
    points: int = Field(default=8, ge=1)
    anchors: Optional[List[AnchorSpec]] = None
    a: float = Field(default_factory=lambda: settings.CONE_APERTURE)
    b: float = Field(default_factory=lambda: settings.CONE_TRUNCATION)
    extrapolation: ExtrapolationConfig = Field(default_factory=ExtrapolationConfig)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    residual_tol: float = Field(default_factory=lambda: settings.RESIDUAL_TOL, gt=0)

    # 诊断开关
    delta_ladder: Optional[List[float]] = None
    reflection_checks: bool = False

    # 输出路径，不参与报告中的配置回显
    output: Optional[str] = None
    csv: Optional[str] = None
    plot: Optional[str] = None

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check(self):
        check_cone_parameters(self.a, self.b)
        if self.delta_ladder is not None and (not self.delta_ladder or any(d <= 0 for d in self.delta_ladder)):
            raise ValueError("delta_ladder 必须非空且全为正数")
        return self

    def echo(self) -> dict:
        """报告中回显的配置（去掉输出路径）"""
        return self.model_dump(mode="json", exclude={"output", "csv", "plot"})


class ConstantRequest(BaseModel):
    kernel: KernelSpec = Field(default_factory=KernelSpec)
    direction: List[float]
    numeric: bool = False


class ConstantResponse(BaseModel):
    kernel: dict
    direction: List[float]
    value: List[float]
    closed_form: Optional[List[float]] = None
    error: float
    tail_bound: float
    radius: Optional[float] = None


class KernelCheckResponse(BaseModel):
    kernel: dict
    samples: int
    oddness: float
    homogeneity: float
    cz_constants: dict
