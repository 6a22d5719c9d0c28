"""
Calderón-Zygmund 核函数模型

所有核都是奇的、(-n) 次齐次的卷积核 K(x) = Ω(x)/|x|^n，定义在 ℝ^{n+1} 上。
复值核按 (Re, Im) 表示为二维向量。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from scipy.special import gamma

from app.utils.exceptions import InvalidKernelError, KernelDomainError

logger = logging.getLogger(__name__)

KERNEL_NAMES = ("riesz", "cauchy-power", "double-layer")


def unit_sphere_area(n: int) -> float:
    """ℝ^{n+1} 中单位球面的 n 维体积 ω_n"""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / float(gamma((n + 1) / 2.0))


def as_batch(x, dim: int) -> Tuple[np.ndarray, bool]:
    """把单点或点组统一成 (m, dim) 数组，并返回是否需要压缩回单点"""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != dim:
        raise InvalidKernelError(f"点的维数 {arr.shape[-1]} 与核的环境维数 {dim} 不一致")
    return arr, single


@dataclass(frozen=True, eq=False)
class Kernel:
    """奇的 (-n) 次齐次核，K(x) = Ω(x)/|x|^n"""

    name: str
    n: int
    value_dim: int
    omega_fn: Callable[[np.ndarray], np.ndarray]
    closed_form_jump_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    eta: float = 1.0
    contracts_normal: bool = False
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def ambient_dim(self) -> int:
        return self.n + 1

    def _checked(self, x) -> Tuple[np.ndarray, np.ndarray, bool]:
        pts, single = as_batch(x, self.ambient_dim)
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms == 0.0):
            raise KernelDomainError(f"核 {self.name} 在原点处奇异，无法求值")
        return pts, norms, single

    def omega(self, x) -> np.ndarray:
        """角向部分 Ω(x)，0 次齐次"""
        pts, _, single = self._checked(x)
        values = self.omega_fn(pts)
        return values[0] if single else values

    def evaluate(self, x) -> np.ndarray:
        """K(x) = Ω(x)/|x|^n"""
        pts, norms, single = self._checked(x)
        values = self.omega_fn(pts) / (norms ** self.n)[:, None]
        return values[0] if single else values

    def closed_form_jump(self, normal) -> Optional[np.ndarray]:
        """解析跳跃常数 C_K(N)，没有闭式时返回 None"""
        if self.closed_form_jump_fn is None:
            return None
        return self.closed_form_jump_fn(np.asarray(normal, dtype=float))

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "value_dim": self.value_dim,
            "eta": self.eta,
            "contracts_normal": self.contracts_normal,
            "has_closed_form_jump": self.closed_form_jump_fn is not None,
            **self.params,
        }


def _riesz_omega(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=1)[:, None]


def make_riesz(n: int) -> Kernel:
    """
    n 维 Riesz 核 K(x) = x/|x|^{n+1}

    Args:
        n: 齐次维数，核定义在 ℝ^{n+1} 上

    Returns:
        Kernel: 跳跃常数闭式 C_K(N) = (ω_n/2)·N
    """
    if n < 1:
        raise InvalidKernelError(f"Riesz 核要求 n >= 1，收到 n={n}")
    half_area = unit_sphere_area(n) / 2.0

    def jump(normal: np.ndarray) -> np.ndarray:
        return half_area * normal

    return Kernel(
        name="riesz",
        n=n,
        value_dim=n + 1,
        omega_fn=_riesz_omega,
        closed_form_jump_fn=jump,
        params={"n": n},
    )


def _complex_power(u: np.ndarray, j: int) -> np.ndarray:
    # 逐次相乘，保证 (-u)^j = -u^j 逐位成立
    w = u.copy()
    for _ in range(j - 1):
        w = w * u
    return w


def make_cauchy_power(j: int) -> Kernel:
    """
    复平面上的奇次 Cauchy 幂核 K(z) = z^j/|z|^{j+1}

    Args:
        j: 奇数幂次，j >= 1

    Returns:
        Kernel: n=1, value_dim=2, 跳跃常数闭式 C_K(N) = (-1)^{(j-1)/2} π N^j

    j=1 时核与 n=1 的 Riesz 核逐点相同，C_K(N) = πN。
    """
    if j < 1 or j % 2 == 0:
        raise InvalidKernelError(f"Cauchy 幂核要求 j 为正奇数，偶数幂不是奇核: j={j}")

    def omega(x: np.ndarray) -> np.ndarray:
        z = x[:, 0] + 1j * x[:, 1]
        w = _complex_power(z / np.abs(z), j)
        return np.stack([w.real, w.imag], axis=1)

    # 沿切线积分 cos(jφ)/cos(φ)，φ ∈ (-π/2, π/2)
    sign = -1.0 if ((j - 1) // 2) % 2 else 1.0

    def jump(normal: np.ndarray) -> np.ndarray:
        nz = complex(normal[0], normal[1])
        value = sign * math.pi * nz ** j
        return np.array([value.real, value.imag])

    return Kernel(
        name="cauchy-power",
        n=1,
        value_dim=2,
        omega_fn=omega,
        closed_form_jump_fn=jump,
        params={"j": j},
    )


def make_double_layer(n: int) -> Kernel:
    """
    双层位势核 (x/|x|^{n+1})/ω_n

    与向量测度 f·N_y·ℋⁿ|_E 缩并使用，缩并后的跳跃项为 f(x)/2。
    """
    if n < 1:
        raise InvalidKernelError(f"双层位势核要求 n >= 1，收到 n={n}")
    area = unit_sphere_area(n)

    def omega(x: np.ndarray) -> np.ndarray:
        return _riesz_omega(x) / area

    def jump(normal: np.ndarray) -> np.ndarray:
        return 0.5 * normal

    return Kernel(
        name="double-layer",
        n=n,
        value_dim=n + 1,
        omega_fn=omega,
        closed_form_jump_fn=jump,
        contracts_normal=True,
        params={"n": n},
    )


def make_kernel(name: str, n: Optional[int] = None, j: Optional[int] = None) -> Kernel:
    """按名称构造内置核"""
    key = (name or "").strip().lower()
    if key == "riesz":
        return make_riesz(n if n is not None else 1)
    if key == "cauchy-power":
        if n not in (None, 1):
            raise InvalidKernelError("Cauchy 幂核只定义在复平面上 (n=1)")
        return make_cauchy_power(j if j is not None else 1)
    if key == "double-layer":
        return make_double_layer(n if n is not None else 1)
    raise InvalidKernelError(f"未知的核名称: {name}，可选: {', '.join(KERNEL_NAMES)}")
