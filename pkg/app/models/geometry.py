"""
可求长集合的几何模型

集合由若干参数化片 φ: D ⊂ ℝⁿ → ℝ^{n+1} 组成（n = 1 曲线, n = 2 曲面），
提供切平面、法向、锥以及测度积分需要的 Jacobian。
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from app.utils.exceptions import ConfigurationError, DegenerateParametrizationError, DomainError

logger = logging.getLogger(__name__)


class Orientation(str, Enum):
    """法向选取规则"""
    OUTWARD = "outward"      # 闭曲线/闭曲面取外法向
    GRAPH_UP = "graph-up"    # 图像片取沿高度轴为正的法向


@dataclass(frozen=True)
class LineExtension:
    """直线段的无限延长信息，用于远场修正"""
    origin: Tuple[float, ...]
    direction: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Patch:
    """参数化片：矩形参数域 [lower, upper] 上的映射及其一阶导数"""

    lower: np.ndarray
    upper: np.ndarray
    mapping: Callable[[np.ndarray], np.ndarray]      # (m, n) -> (m, d)
    jacobian: Callable[[np.ndarray], np.ndarray]     # (m, n) -> (m, d, n)
    up: Optional[np.ndarray] = None
    label: str = ""
    extension: Optional[LineExtension] = None

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, params, tol: float = 0.0) -> bool:
        t = np.asarray(params, dtype=float)
        return bool(np.all(t >= self.lower - tol) and np.all(t <= self.upper + tol))


@dataclass(frozen=True)
class CarrierPoint:
    """载体上的点，用 (片序号, 参数) 表示"""
    patch_index: int
    params: Tuple[float, ...]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.params, dtype=float)


@dataclass(frozen=True, eq=False)
class TangentFrame:
    """切标架：点 x、L_x 的正交基 e_1..e_n 以及单位法向 N_x"""

    point: np.ndarray
    basis: np.ndarray      # (n, d)
    normal: np.ndarray     # (d,)
    anchor: Optional[CarrierPoint] = None

    @property
    def n(self) -> int:
        return int(self.basis.shape[0])

    def distance_to_plane(self, y) -> float:
        """dist(y, L_x)"""
        return abs(float(np.dot(np.asarray(y, dtype=float) - self.point, self.normal)))

    def reflect(self, y) -> np.ndarray:
        """关于 x 的对称点 2x - y"""
        return 2.0 * self.point - np.asarray(y, dtype=float)


@dataclass(frozen=True, eq=False)
class Cone:
    """单侧锥 X_a(x, u) = {y : (y-x)·u > a|y-x|}"""

    apex: np.ndarray
    axis: np.ndarray
    aperture: float

    def __post_init__(self):
        if not 0.0 < self.aperture < 1.0:
            raise ConfigurationError(f"锥的开口参数必须在 (0,1) 内: a={self.aperture}")
        if abs(float(np.linalg.norm(self.axis)) - 1.0) > 1e-9:
            raise ConfigurationError("锥轴必须是单位向量")

    def contains(self, y) -> np.ndarray:
        """严格不等式判定，顶点本身不属于锥"""
        pts = np.atleast_2d(np.asarray(y, dtype=float))
        diff = pts - self.apex
        inside = diff @ self.axis > self.aperture * np.linalg.norm(diff, axis=1)
        return inside if np.ndim(y) > 1 else inside[0]

    def reflected(self) -> "Cone":
        """X_a(x, -u)"""
        return Cone(apex=self.apex, axis=-self.axis, aperture=self.aperture)


def cone_contains(cone: Cone, y) -> bool:
    """判断 y 是否在锥内"""
    return bool(cone.contains(np.asarray(y, dtype=float)))


def area_elements(jac: np.ndarray) -> np.ndarray:
    """面积元 sqrt(det(Dφᵀ Dφ))"""
    gram = np.einsum("mdi,mdj->mij", jac, jac)
    if gram.shape[1] == 1:
        det = gram[:, 0, 0]
    elif gram.shape[1] == 2:
        det = gram[:, 0, 0] * gram[:, 1, 1] - gram[:, 0, 1] * gram[:, 1, 0]
    else:
        det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None))


def raw_normals(jac: np.ndarray) -> np.ndarray:
    """由 Jacobian 列向量得到的（未定向）单位法向"""
    if jac.shape[2] == 1:
        tau = jac[:, :, 0]
        raw = np.stack([-tau[:, 1], tau[:, 0]], axis=1)
    else:
        raw = np.cross(jac[:, :, 0], jac[:, :, 1])
    norms = np.linalg.norm(raw, axis=1)
    norms = np.where(norms > 0.0, norms, 1.0)
    return raw / norms[:, None]


@dataclass(frozen=True, eq=False)
class RectifiableSet:
    """由参数化片组成的 n 维可求长集合"""

    n: int
    patches: Tuple[Patch, ...]
    orientation: Orientation
    shape: str
    length_scale: float
    center: Optional[np.ndarray] = None
    closed: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def ambient_dim(self) -> int:
        return self.n + 1

    def patch(self, index: int) -> Patch:
        if not 0 <= index < len(self.patches):
            raise DomainError(f"片序号越界: {index}")
        return self.patches[index]

    def points(self, patch_index: int, params) -> np.ndarray:
        return self.patch(patch_index).mapping(np.atleast_2d(np.asarray(params, dtype=float)))

    def jacobians(self, patch_index: int, params) -> np.ndarray:
        return self.patch(patch_index).jacobian(np.atleast_2d(np.asarray(params, dtype=float)))

    def point_of(self, where: CarrierPoint) -> np.ndarray:
        return self.points(where.patch_index, where.array)[0]

    def normals(self, patch_index: int, params, points: Optional[np.ndarray] = None) -> np.ndarray:
        """按定向规则给出的单位法向"""
        params = np.atleast_2d(np.asarray(params, dtype=float))
        raw = raw_normals(self.jacobians(patch_index, params))
        if self.orientation == Orientation.OUTWARD and "signed_area" in self.metadata:
            # 逆时针走向时左法向朝内
            sign = np.full(params.shape[0], -math.copysign(1.0, self.metadata["signed_area"]))
        elif self.orientation == Orientation.OUTWARD and self.center is not None:
            pts = points if points is not None else self.points(patch_index, params)
            sign = np.sign(np.einsum("md,md->m", pts - self.center, raw))
        else:
            up = self.patch(patch_index).up
            if up is None:
                up = np.eye(self.ambient_dim)[-1]
            sign = np.sign(raw @ up)
        sign = np.where(sign == 0.0, 1.0, sign)
        return raw * sign[:, None]

    def tangent_frame(self, patch_index: int, params) -> TangentFrame:
        """
        计算切标架

        Args:
            patch_index: 片序号
            params: 参数点，需位于参数域内

        Returns:
            TangentFrame: L_x 的正交基与定向后的法向
        """
        patch = self.patch(patch_index)
        t = np.asarray(params, dtype=float).reshape(-1)
        if t.size != self.n or not patch.contains(t, tol=1e-12 * float(np.max(patch.widths))):
            raise DomainError(f"参数点 {t.tolist()} 不在片 {patch_index} 的参数域内")
        jac = self.jacobians(patch_index, t)[0]
        singular = np.linalg.svd(jac, compute_uv=False)
        if singular.min() <= 1e-12 * max(float(singular.max()), 1.0):
            raise DegenerateParametrizationError(
                f"片 {patch_index} 在参数 {t.tolist()} 处 Jacobian 秩不足"
            )
        q, _ = np.linalg.qr(jac)
        point = self.points(patch_index, t)[0]
        normal = self.normals(patch_index, t)[0]
        return TangentFrame(
            point=point,
            basis=q.T.copy(),
            normal=normal,
            anchor=CarrierPoint(patch_index, tuple(float(v) for v in t)),
        )

    def frame_at(self, where: CarrierPoint) -> TangentFrame:
        return self.tangent_frame(where.patch_index, where.array)

    def sample_points(self, per_axis: int = 65) -> np.ndarray:
        """每个片上的均匀参数采样点"""
        chunks = []
        for index, patch in enumerate(self.patches):
            axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(patch.lower, patch.upper)]
            grid = np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)
            chunks.append(self.points(index, grid))
        return np.concatenate(chunks, axis=0)

    def diameter(self) -> float:
        pts = self.sample_points()
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))

    def locate(self, point, tol: Optional[float] = None) -> CarrierPoint:
        """
        找到离给定点最近的载体点

        Args:
            point: 环境空间中的点
            tol: 允许的距离，默认 1e-8 倍长度尺度

        Returns:
            CarrierPoint: 最近点所在的片与参数
        """
        target = np.asarray(point, dtype=float)
        tol = tol if tol is not None else 1e-8 * self.length_scale
        per_axis = 257 if self.n == 1 else 65
        best: Optional[Tuple[float, int, np.ndarray]] = None
        for index, patch in enumerate(self.patches):
            axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(patch.lower, patch.upper)]
            grid = np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)
            dist = np.linalg.norm(self.points(index, grid) - target, axis=1)
            start = grid[int(np.argmin(dist))]
            solution = least_squares(
                lambda t, i=index: self.points(i, t)[0] - target,
                start,
                jac=lambda t, i=index: self.jacobians(i, t)[0],
                bounds=(patch.lower, patch.upper),
                xtol=1e-15, ftol=1e-15, gtol=1e-15,
            )
            distance = float(np.linalg.norm(self.points(index, solution.x)[0] - target))
            if best is None or distance < best[0]:
                best = (distance, index, solution.x)
        distance, index, params = best
        if distance > tol:
            raise DomainError(f"点 {target.tolist()} 不在载体上 (距离 {distance:.3e})")
        return CarrierPoint(index, tuple(float(v) for v in params))

    def evaluation_points(self, count: int, window: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
                          offset_fraction: float = 0.01) -> List[CarrierPoint]:
        """
        默认评估点：参数域上的等距网格，距片端点保留 1% 的偏移

        Args:
            count: 点数
            window: 可选的参数窗口 (lower, upper)，与各片参数域取交
            offset_fraction: 端点偏移比例

        Returns:
            List[CarrierPoint]: 评估点列表
        """
        if count < 1:
            raise ConfigurationError("评估点数必须 >= 1")
        domains = []
        for patch in self.patches:
            lo, hi = patch.lower.copy(), patch.upper.copy()
            if window is not None:
                lo = np.maximum(lo, np.asarray(window[0], dtype=float))
                hi = np.minimum(hi, np.asarray(window[1], dtype=float))
            domains.append((lo, hi))
        sizes = np.array([float(np.prod(np.clip(hi - lo, 0.0, None))) for lo, hi in domains])
        if sizes.sum() <= 0.0:
            raise DomainError("评估窗口与参数域没有交集")

        # 最大余数法按参数测度分配点数
        quota = count * sizes / sizes.sum()
        alloc = np.floor(quota).astype(int)
        order = sorted(range(len(sizes)), key=lambda i: (-(quota[i] - alloc[i]), i))
        for i in order[: count - int(alloc.sum())]:
            alloc[i] += 1

        points: List[CarrierPoint] = []
        for index, ((lo, hi), m) in enumerate(zip(domains, alloc)):
            if m == 0:
                continue
            off = offset_fraction * (hi - lo)
            if self.n == 1:
                axes_counts = [m]
            else:
                rows = max(1, int(math.floor(math.sqrt(m))))
                axes_counts = [rows, int(math.ceil(m / rows))]
            axes = []
            for axis, k in enumerate(axes_counts):
                if k == 1:
                    axes.append(np.array([0.5 * (lo[axis] + hi[axis])]))
                else:
                    axes.append(np.linspace(lo[axis] + off[axis], hi[axis] - off[axis], k))
            grid = np.stack([g.reshape(-1) for g in np.meshgrid(*axes, indexing="ij")], axis=1)
            for t in grid[:m]:
                points.append(CarrierPoint(index, tuple(float(v) for v in t)))
        return points


def _segment_patch(start: np.ndarray, end: np.ndarray, label: str, up: Optional[np.ndarray] = None,
                   centered: bool = True) -> Patch:
    length = float(np.linalg.norm(end - start))
    if length == 0.0:
        raise DegenerateParametrizationError("线段端点重合")
    direction = (end - start) / length
    origin = 0.5 * (start + end) if centered else start
    lower = np.array([-0.5 * length if centered else 0.0])
    upper = np.array([0.5 * length if centered else length])

    def mapping(t: np.ndarray) -> np.ndarray:
        return origin + t[:, :1] * direction

    def jacobian(t: np.ndarray) -> np.ndarray:
        return np.broadcast_to(direction[None, :, None], (t.shape[0], direction.size, 1)).copy()

    return Patch(
        lower=lower, upper=upper, mapping=mapping, jacobian=jacobian, up=up, label=label,
        extension=LineExtension(tuple(origin.tolist()), tuple(direction.tolist())),
    )


def make_segment(start, end, orientation: Orientation = Orientation.GRAPH_UP) -> RectifiableSet:
    """ℝ² 中的线段，参数为以中点为原点的弧长"""
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    if a.shape != (2,) or b.shape != (2,):
        raise DomainError("线段端点必须是二维点")
    patch = _segment_patch(a, b, "segment")
    length = float(np.linalg.norm(b - a))
    return RectifiableSet(
        n=1, patches=(patch,), orientation=orientation, shape="segment",
        length_scale=length, center=0.5 * (a + b), metadata={"truncation_length": 0.5 * length},
    )


def make_circle(center=(0.0, 0.0), radius: float = 1.0,
                orientation: Orientation = Orientation.OUTWARD) -> RectifiableSet:
    """圆周 φ(θ) = c + r(cosθ, sinθ), θ ∈ [-π, π]"""
    c = np.asarray(center, dtype=float)
    if radius <= 0:
        raise DomainError("圆的半径必须为正")

    def mapping(t: np.ndarray) -> np.ndarray:
        return c + radius * np.stack([np.cos(t[:, 0]), np.sin(t[:, 0])], axis=1)

    def jacobian(t: np.ndarray) -> np.ndarray:
        return (radius * np.stack([-np.sin(t[:, 0]), np.cos(t[:, 0])], axis=1))[:, :, None]

    patch = Patch(np.array([-math.pi]), np.array([math.pi]), mapping, jacobian, label="circle")
    return RectifiableSet(
        n=1, patches=(patch,), orientation=orientation, shape="circle",
        length_scale=2.0 * radius, center=c, closed=True,
    )


def signed_area(vertices) -> float:
    """闭合多边形的有向面积（鞋带公式），逆时针为正"""
    v = np.asarray(vertices, dtype=float)
    w = np.roll(v, -1, axis=0)
    return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))


def make_polyline(vertices, closed: bool = False, orientation: Optional[Orientation] = None) -> RectifiableSet:
    """折线，每条边一个片；顶点处切向无定义，评估点只取边内部"""
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 2:
        raise DomainError("折线至少需要两个二维顶点")
    if closed and not np.allclose(verts[0], verts[-1]):
        verts = np.vstack([verts, verts[:1]])
    patches = tuple(
        _segment_patch(verts[i], verts[i + 1], f"edge-{i}", centered=False)
        for i in range(len(verts) - 1)
    )
    unique = verts[:-1] if closed else verts
    span = float(np.linalg.norm(unique.max(axis=0) - unique.min(axis=0)))
    return RectifiableSet(
        n=1, patches=patches,
        orientation=orientation or (Orientation.OUTWARD if closed else Orientation.GRAPH_UP),
        shape="polyline", length_scale=span, center=unique.mean(axis=0), closed=closed,
        metadata={"signed_area": signed_area(unique)} if closed else {},
    )


def make_fourier_graph(sin_coeffs: Sequence[float] = (), cos_coeffs: Sequence[float] = (),
                       lower: float = -math.pi, upper: float = math.pi, offset: float = 0.0) -> RectifiableSet:
    """图像曲线 s ↦ (s, F(s))，F(s) = offset + Σ a_k sin(ks) + b_k cos(ks)"""
    a = np.asarray(sin_coeffs, dtype=float)
    b = np.asarray(cos_coeffs, dtype=float)
    ka = np.arange(1, a.size + 1, dtype=float)
    kb = np.arange(1, b.size + 1, dtype=float)
    if upper <= lower:
        raise DomainError("参数区间必须非空")

    def height(s: np.ndarray) -> np.ndarray:
        return offset + np.sin(np.outer(s, ka)) @ a + np.cos(np.outer(s, kb)) @ b

    def slope(s: np.ndarray) -> np.ndarray:
        return np.cos(np.outer(s, ka)) @ (ka * a) - np.sin(np.outer(s, kb)) @ (kb * b)

    def mapping(t: np.ndarray) -> np.ndarray:
        s = t[:, 0]
        return np.stack([s, height(s)], axis=1)

    def jacobian(t: np.ndarray) -> np.ndarray:
        s = t[:, 0]
        return np.stack([np.ones_like(s), slope(s)], axis=1)[:, :, None]

    patch = Patch(np.array([lower]), np.array([upper]), mapping, jacobian, up=np.array([0.0, 1.0]),
                  label="fourier-graph")
    samples = mapping(np.linspace(lower, upper, 513)[:, None])
    span = float(np.linalg.norm(samples.max(axis=0) - samples.min(axis=0)))
    return RectifiableSet(
        n=1, patches=(patch,), orientation=Orientation.GRAPH_UP, shape="fourier-graph",
        length_scale=span,
    )


def make_sphere(center=(0.0, 0.0, 0.0), radius: float = 1.0) -> RectifiableSet:
    """球面，参数 (极角 θ ∈ [0,π], 方位角 φ ∈ [-π,π])，取外法向"""
    c = np.asarray(center, dtype=float)
    if radius <= 0:
        raise DomainError("球的半径必须为正")

    def mapping(t: np.ndarray) -> np.ndarray:
        th, ph = t[:, 0], t[:, 1]
        return c + radius * np.stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1
        )

    def jacobian(t: np.ndarray) -> np.ndarray:
        th, ph = t[:, 0], t[:, 1]
        d_th = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=1)
        d_ph = np.stack([-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), np.zeros_like(th)], axis=1)
        return radius * np.stack([d_th, d_ph], axis=2)

    patch = Patch(np.array([0.0, -math.pi]), np.array([math.pi, math.pi]), mapping, jacobian, label="sphere")
    return RectifiableSet(
        n=2, patches=(patch,), orientation=Orientation.OUTWARD, shape="sphere",
        length_scale=2.0 * radius, center=c, closed=True,
    )


def make_poly_graph(coefficients: Sequence[Tuple[int, int, float]], lower=(-1.0, -1.0),
                    upper=(1.0, 1.0)) -> RectifiableSet:
    """曲面图像 (u, v) ↦ (u, v, P(u, v))，P 为多项式 Σ c·u^i·v^j"""
    terms = [(int(i), int(j), float(c)) for i, j, c in coefficients]
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if np.any(hi <= lo):
        raise DomainError("参数矩形必须非空")

    def height(u, v):
        total = np.zeros_like(u)
        for i, j, c in terms:
            total = total + c * u ** i * v ** j
        return total

    def grad(u, v):
        du = np.zeros_like(u)
        dv = np.zeros_like(u)
        for i, j, c in terms:
            if i > 0:
                du = du + c * i * u ** (i - 1) * v ** j
            if j > 0:
                dv = dv + c * j * u ** i * v ** (j - 1)
        return du, dv

    def mapping(t: np.ndarray) -> np.ndarray:
        u, v = t[:, 0], t[:, 1]
        return np.stack([u, v, height(u, v)], axis=1)

    def jacobian(t: np.ndarray) -> np.ndarray:
        u, v = t[:, 0], t[:, 1]
        du, dv = grad(u, v)
        one, zero = np.ones_like(u), np.zeros_like(u)
        return np.stack([np.stack([one, zero, du], axis=1), np.stack([zero, one, dv], axis=1)], axis=2)

    patch = Patch(lo, hi, mapping, jacobian, up=np.array([0.0, 0.0, 1.0]), label="poly-graph")
    return RectifiableSet(
        n=2, patches=(patch,), orientation=Orientation.GRAPH_UP, shape="poly-graph",
        length_scale=float(np.linalg.norm(hi - lo)),
        metadata={"truncation_length": float(0.5 * np.min(hi - lo))},
    )


def make_plane_patch(frame: TangentFrame, half_width: float) -> RectifiableSet:
    """过标架点、张成 L_x 的平坦片 [-R, R]^n"""
    if half_width <= 0:
        raise DomainError("平面片半宽必须为正")
    origin = frame.point
    basis = frame.basis
    n, d = basis.shape

    def mapping(t: np.ndarray) -> np.ndarray:
        return origin + t @ basis

    def jacobian(t: np.ndarray) -> np.ndarray:
        return np.broadcast_to(basis.T[None, :, :], (t.shape[0], d, n)).copy()

    patch = Patch(-half_width * np.ones(n), half_width * np.ones(n), mapping, jacobian,
                  up=frame.normal, label="plane")
    return RectifiableSet(
        n=n, patches=(patch,), orientation=Orientation.GRAPH_UP, shape="plane",
        length_scale=2.0 * half_width, center=origin,
    )
