import dataclasses
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
from pydantic import ValidationError

from app.api.schemas.scene_schemas import SceneSpec
from app.models.geometry import (
    Orientation,
    make_circle,
    make_fourier_graph,
    make_poly_graph,
    make_polyline,
    make_segment,
    make_sphere,
)
from app.models.measure import Atom, RadonMeasure, make_density
from app.models.scene import Scene
from app.repositories.base import BaseFileRepository
from app.utils.exceptions import JumpLabError, SceneError

logger = logging.getLogger(__name__)

FLAT_LINE_HALF_LENGTH = 1e6

BUILTIN_SCENES: Dict[str, dict] = {
    "unit-circle": {"shape": "circle", "center": [0.0, 0.0], "radius": 1.0},
    "unit-circle-cos": {
        "shape": "circle", "center": [0.0, 0.0], "radius": 1.0,
        "density": {"kind": "trig", "cos": [1.0]},
    },
    "flat-line": {
        "shape": "segment",
        "start": [-FLAT_LINE_HALF_LENGTH, 0.0], "end": [FLAT_LINE_HALF_LENGTH, 0.0],
        "length_scale": 2.0, "window": [[-1.0], [1.0]],
    },
    "fourier-graph": {
        "shape": "fourier-graph", "sin": [0.3], "cos": [0.0, 0.1],
        "lower": [-math.pi], "upper": [math.pi], "window": [[-1.5], [1.5]],
        "density": {"kind": "trig", "c0": 1.0, "cos": [0.5]},
    },
    "unit-square": {
        "shape": "polyline", "closed": True,
        "vertices": [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]],
    },
    "unit-sphere": {"shape": "sphere", "center": [0.0, 0.0, 0.0], "radius": 1.0,
                    "window": [[0.3, -math.pi], [math.pi - 0.3, math.pi]]},
    "unit-sphere-cos": {
        "shape": "sphere", "center": [0.0, 0.0, 0.0], "radius": 1.0,
        "window": [[0.3, -math.pi], [math.pi - 0.3, math.pi]],
        "density": {"kind": "trig", "cos": [1.0]},
    },
    "flat-plane": {
        "shape": "poly-graph", "coefficients": [], "lower": [-100.0, -100.0], "upper": [100.0, 100.0],
        "length_scale": 2.0, "window": [[-0.5, -0.5], [0.5, 0.5]],
    },
    "atom-pair": {
        "shape": "segment", "start": [-10.0, 0.0], "end": [10.0, 0.0],
        "length_scale": 2.0, "window": [[-1.0], [1.0]],
        "density": None,
        "atoms": [[[0.5, 1.0], 1.0], [[-0.5, -1.0], -0.5]],
    },
}


class SceneRepository(BaseFileRepository[SceneSpec]):
    """场景仓库：内置场景与 JSON 场景文件"""

    def __init__(self):
        super().__init__(SceneSpec)

    def list_builtins(self) -> List[str]:
        return list(BUILTIN_SCENES)

    def get_spec(self, source: Union[str, SceneSpec]) -> SceneSpec:
        """
        解析场景来源

        Args:
            source: 内置场景名、JSON 文件路径或 SceneSpec

        Returns:
            SceneSpec: 校验后的场景描述
        """
        if isinstance(source, SceneSpec):
            return source
        try:
            if source in BUILTIN_SCENES:
                return SceneSpec.model_validate({"name": source, **BUILTIN_SCENES[source]})
            path = Path(source)
            if not path.is_file():
                raise SceneError(f"未知的场景: {source}，内置场景: {', '.join(BUILTIN_SCENES)}")
            spec = self.read(path)
            return spec if spec.name else spec.model_copy(update={"name": path.stem})
        except ValidationError as e:
            raise SceneError(f"场景校验失败: {e}") from e
        except (OSError, json.JSONDecodeError) as e:
            raise SceneError(f"无法读取场景文件 {source}: {e}") from e

    def load(self, source: Union[str, SceneSpec]) -> Scene:
        return self.build(self.get_spec(source))

    def build(self, spec: SceneSpec) -> Scene:
        """由场景描述构造载体与测度"""
        try:
            carrier = self._carrier(spec)
            if spec.length_scale is not None:
                carrier = dataclasses.replace(carrier, length_scale=spec.length_scale)
            atoms = tuple(Atom(tuple(float(v) for v in loc), float(w)) for loc, w in spec.atoms)
            measure = RadonMeasure(carrier, make_density(spec.density), atoms)
        except SceneError:
            raise
        except (JumpLabError, TypeError) as e:
            raise SceneError(f"场景构造失败: {e}") from e
        window = None
        if spec.window is not None:
            window = (list(spec.window[0]), list(spec.window[1]))
        logger.info(f"场景已加载: {spec.name or spec.shape}")
        return Scene(
            name=spec.name or spec.shape, carrier=carrier, measure=measure, window=window,
            spec=spec.model_dump(mode="json"),
        )

    @staticmethod
    def _require(value, field: str, shape: str):
        if value is None:
            raise SceneError(f"形状 {shape} 缺少参数 {field}")
        return value

    def _carrier(self, spec: SceneSpec):
        orientation = Orientation(spec.orientation) if spec.orientation else None
        shape = spec.shape
        if shape == "segment":
            start = self._require(spec.start, "start", shape)
            end = self._require(spec.end, "end", shape)
            return make_segment(start, end, orientation or Orientation.GRAPH_UP)
        if shape == "circle":
            return make_circle(spec.center or [0.0, 0.0], spec.radius or 1.0, orientation or Orientation.OUTWARD)
        if shape == "polyline":
            vertices = self._require(spec.vertices, "vertices", shape)
            return make_polyline(vertices, closed=spec.closed, orientation=orientation)
        if shape == "fourier-graph":
            lower = spec.lower[0] if spec.lower else -math.pi
            upper = spec.upper[0] if spec.upper else math.pi
            return make_fourier_graph(spec.sin, spec.cos, lower, upper, spec.offset)
        if shape == "sphere":
            return make_sphere(spec.center or [0.0, 0.0, 0.0], spec.radius or 1.0)
        if shape == "poly-graph":
            return make_poly_graph(
                spec.coefficients,
                np.asarray(spec.lower or [-1.0, -1.0]),
                np.asarray(spec.upper or [1.0, 1.0]),
            )
        raise SceneError(f"未知的形状: {shape}")
