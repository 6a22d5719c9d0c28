from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class SceneSpec(BaseModel):
    """场景文件：几何形状、定向、密度与点质量"""

    name: Optional[str] = None
    shape: Literal["segment", "circle", "polyline", "fourier-graph", "sphere", "poly-graph"]
    orientation: Optional[Literal["outward", "graph-up"]] = None

    # 形状参数
    start: Optional[List[float]] = None
    end: Optional[List[float]] = None
    center: Optional[List[float]] = None
    radius: Optional[float] = None
    vertices: Optional[List[List[float]]] = None
    closed: bool = False
    sin: List[float] = Field(default_factory=list)
    cos: List[float] = Field(default_factory=list)
    offset: float = 0.0
    lower: Optional[List[float]] = None
    upper: Optional[List[float]] = None
    coefficients: List[Tuple[int, int, float]] = Field(default_factory=list)

    # 覆盖长度尺度（eps0 = LIMIT_EPS0_FACTOR × length_scale）与评估窗口
    length_scale: Optional[float] = None
    window: Optional[Tuple[List[float], List[float]]] = None

    # 测度
    density: Optional[Dict[str, Any]] = Field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    atoms: List[Tuple[List[float], float]] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid")

    @field_validator("radius", "length_scale")
    @classmethod
    def _positive(cls, v):
        if v is not None and not v > 0:
            raise ValueError("必须为正数")
        return v


class SceneSummary(BaseModel):
    name: str
    shape: str
    n: int
    closed: bool
    length_scale: float
    density: Optional[Dict[str, Any]] = None
    atoms: int = 0


class SceneListResponse(BaseModel):
    scenes: List[SceneSummary]
    total: int
