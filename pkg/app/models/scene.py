from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from app.models.geometry import CarrierPoint, RectifiableSet
from app.models.measure import RadonMeasure


@dataclass(frozen=True, eq=False)
class Scene:
    """场景：载体、测度与默认评估窗口"""

    name: str
    carrier: RectifiableSet
    measure: RadonMeasure
    window: Optional[Tuple[Sequence[float], Sequence[float]]] = None
    spec: Dict[str, Any] = field(default_factory=dict)

    @property
    def truncation_length(self) -> Optional[float]:
        """用有限片近似无限集合时的半长"""
        return self.carrier.metadata.get("truncation_length")

    def evaluation_points(self, count: int) -> List[CarrierPoint]:
        return self.carrier.evaluation_points(count, window=self.window)
