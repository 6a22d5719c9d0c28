"""
有限符号 Radon 测度 ν = f·ℋⁿ|_E + Σ wᵢ δ_{pᵢ}

密度取自一个小的闭式注册表，以片参数为自变量。
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from app.models.geometry import RectifiableSet
from app.utils.exceptions import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

DENSITY_KINDS = ("constant", "trig", "polynomial", "gaussian", "combination")


@dataclass(frozen=True, eq=False)
class Density:
    """以参数 t 为自变量的连续密度 f"""

    kind: str
    spec: Dict[str, Any]
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, params) -> np.ndarray:
        t = np.atleast_2d(np.asarray(params, dtype=float))
        return np.asarray(self.fn(t), dtype=float).reshape(t.shape[0])

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, **self.spec}


def constant_density(value: float = 1.0) -> Density:
    v = float(value)
    return Density("constant", {"value": v}, lambda t: np.full(t.shape[0], v))


def trig_density(c0: float = 0.0, cos: Sequence[float] = (), sin: Sequence[float] = (),
                 axis: int = 0) -> Density:
    """f(t) = c0 + Σ a_k cos(k t_i) + b_k sin(k t_i)"""
    a = np.asarray(cos, dtype=float)
    b = np.asarray(sin, dtype=float)
    ka = np.arange(1, a.size + 1, dtype=float)
    kb = np.arange(1, b.size + 1, dtype=float)

    def fn(t: np.ndarray) -> np.ndarray:
        s = t[:, axis]
        return c0 + np.cos(np.outer(s, ka)) @ a + np.sin(np.outer(s, kb)) @ b

    return Density("trig", {"c0": float(c0), "cos": a.tolist(), "sin": b.tolist(), "axis": axis}, fn)


def polynomial_density(coefficients: Sequence[float], axis: int = 0) -> Density:
    """f(t) = Σ c_k t_i^k"""
    c = np.asarray(coefficients, dtype=float)
    if c.size == 0:
        raise ConfigurationError("多项式密度至少需要一个系数")

    def fn(t: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(t[:, axis], c)

    return Density("polynomial", {"coefficients": c.tolist(), "axis": axis}, fn)


def gaussian_density(amplitude: float = 1.0, center: Sequence[float] = (0.0,), width: float = 1.0,
                     base: float = 0.0) -> Density:
    """f(t) = base + A·exp(-|t - c|² / (2w²))"""
    if width <= 0:
        raise ConfigurationError("高斯密度宽度必须为正")
    c = np.asarray(center, dtype=float)

    def fn(t: np.ndarray) -> np.ndarray:
        r2 = np.sum((t - c[: t.shape[1]]) ** 2, axis=1)
        return base + amplitude * np.exp(-r2 / (2.0 * width ** 2))

    return Density(
        "gaussian",
        {"amplitude": float(amplitude), "center": c.tolist(), "width": float(width), "base": float(base)},
        fn,
    )


def combine_densities(terms: Sequence[Tuple[float, Density]]) -> Density:
    """线性组合 Σ αᵢ fᵢ"""
    items = [(float(alpha), d) for alpha, d in terms]

    def fn(t: np.ndarray) -> np.ndarray:
        total = np.zeros(t.shape[0])
        for alpha, d in items:
            total = total + alpha * d(t)
        return total

    return Density("combination", {"terms": [[a, d.describe()] for a, d in items]}, fn)


def make_density(spec: Optional[Dict[str, Any]]) -> Optional[Density]:
    """
    从字典描述构造密度

    Args:
        spec: {"kind": 名称, ...参数}，None 表示没有绝对连续部分

    Returns:
        Optional[Density]: 密度对象
    """
    if spec is None:
        return None
    params = dict(spec)
    kind = params.pop("kind", "constant")
    try:
        if kind == "constant":
            return constant_density(**params)
        if kind == "trig":
            return trig_density(**params)
        if kind == "polynomial":
            return polynomial_density(**params)
        if kind == "gaussian":
            return gaussian_density(**params)
    except TypeError as e:
        raise ConfigurationError(f"密度 {kind} 参数错误: {e}") from e
    raise ConfigurationError(f"未知的密度类型: {kind}，可选: constant, trig, polynomial, gaussian")


@dataclass(frozen=True)
class Atom:
    """点质量 w·δ_p"""
    location: Tuple[float, ...]
    weight: float

    @property
    def point(self) -> np.ndarray:
        return np.asarray(self.location, dtype=float)


@dataclass(frozen=True, eq=False)
class RadonMeasure:
    """
    Radon 测度

    normal_weighted 为 True 时表示向量测度 f·N_y·ℋⁿ|_E（双层位势使用），
    此时不允许带点质量。
    """

    carrier: Optional[RectifiableSet]
    density: Optional[Density] = None
    atoms: Tuple[Atom, ...] = ()
    normal_weighted: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.carrier is None and self.density is not None:
            raise ConfigurationError("没有载体的测度不能带密度")
        if self.normal_weighted and self.atoms:
            raise ConfigurationError("法向加权测度不支持点质量")
        dims = {len(a.location) for a in self.atoms}
        if self.carrier is not None:
            dims.add(self.carrier.ambient_dim)
        if len(dims) > 1:
            raise ConfigurationError(f"测度各部分的环境维数不一致: {sorted(dims)}")

    @property
    def ambient_dim(self) -> Optional[int]:
        if self.carrier is not None:
            return self.carrier.ambient_dim
        if self.atoms:
            return len(self.atoms[0].location)
        return None

    @property
    def has_absolute_part(self) -> bool:
        return self.carrier is not None and self.density is not None

    def density_values(self, params) -> np.ndarray:
        """在参数点上的密度值，没有绝对连续部分时为 0"""
        t = np.atleast_2d(np.asarray(params, dtype=float))
        if self.density is None:
            return np.zeros(t.shape[0])
        return self.density(t)

    def scaled(self, alpha: float) -> "RadonMeasure":
        """α·ν"""
        density = None if self.density is None else combine_densities([(alpha, self.density)])
        atoms = tuple(Atom(a.location, alpha * a.weight) for a in self.atoms)
        return RadonMeasure(self.carrier, density, atoms, self.normal_weighted, dict(self.metadata))

    def __add__(self, other: "RadonMeasure") -> "RadonMeasure":
        if not isinstance(other, RadonMeasure):
            return NotImplemented
        if self.normal_weighted != other.normal_weighted:
            raise ConfigurationError("法向加权测度不能与普通测度相加")
        carriers = [m.carrier for m in (self, other) if m.carrier is not None]
        if len(carriers) == 2 and carriers[0] is not carriers[1]:
            raise DomainError("只能相加同一载体上的测度")
        carrier = carriers[0] if carriers else None
        densities = [(1.0, m.density) for m in (self, other) if m.density is not None]
        density = None
        if len(densities) == 1:
            density = densities[0][1]
        elif densities:
            density = combine_densities(densities)
        return RadonMeasure(carrier, density, self.atoms + other.atoms, self.normal_weighted)

    def describe(self) -> Dict[str, Any]:
        return {
            "carrier": None if self.carrier is None else self.carrier.shape,
            "density": None if self.density is None else self.density.describe(),
            "atoms": [[list(a.location), a.weight] for a in self.atoms],
            "normal_weighted": self.normal_weighted,
        }
