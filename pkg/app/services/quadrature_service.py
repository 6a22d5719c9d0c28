"""
参数片上的自适应求积

每个片的参数域被划分为矩形单元，单元上用张量 Gauss-Legendre 公式；
单元可以与其关于聚焦点的镜像单元成对参与误差估计。与球面 |y-c| = r
相交的单元沿最后一个参数轴求出交点后分段积分；二维参数域上外层区间也在
沿线交点个数变化处切开。
"""

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.models.configs import QuadratureConfig
from app.models.geometry import Patch, RectifiableSet, area_elements
from app.models.quadrature import Ball, BallKeep, Focus, QuadratureResult
from app.utils.exceptions import QuadratureConvergenceError
from app.utils.helpers import pairwise_sum

logger = logging.getLogger(__name__)

# integrand(patch_index, params (m, n), points (m, d)) -> (m, value_dim)
Integrand = Callable[[int, np.ndarray, np.ndarray], np.ndarray]

_BISECTION_STEPS = 60
_MAX_FOCUS_LEVELS = 200


@dataclass
class _Unit:
    uid: int
    patch: int
    lo: np.ndarray
    hi: np.ndarray
    mirror: Optional[np.ndarray] = None     # 成对单元的对称中心 t0
    coarse: Optional[np.ndarray] = None
    coarse_forced: bool = False
    kid_values: List[np.ndarray] = field(default_factory=list)
    kid_forced: List[bool] = field(default_factory=list)
    value: Optional[np.ndarray] = None
    error: float = 0.0
    forced: bool = False

    def boxes(self, lo: np.ndarray, hi: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
        out = [(lo, hi)]
        if self.mirror is not None:
            out.append((2.0 * self.mirror - hi, 2.0 * self.mirror - lo))
        return out


def _children(lo: np.ndarray, hi: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    mid = 0.5 * (lo + hi)
    kids = []
    for bits in itertools.product((0, 1), repeat=lo.size):
        b = np.asarray(bits, dtype=bool)
        kids.append((np.where(b, mid, lo), np.where(b, hi, mid)))
    return kids


def _split(lo: np.ndarray, hi: np.ndarray, max_width: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    """把过宽的单元等分，保证每个方向宽度不超过 max_width"""
    counts = [max(1, int(math.ceil(w / m - 1e-9))) for w, m in zip(hi - lo, max_width)]
    edges = [np.linspace(a, b, c + 1) for a, b, c in zip(lo, hi, counts)]
    cells = []
    for idx in itertools.product(*[range(c) for c in counts]):
        cells.append((
            np.array([edges[i][k] for i, k in enumerate(idx)]),
            np.array([edges[i][k + 1] for i, k in enumerate(idx)]),
        ))
    return cells


def _tensor_rule(order: int, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=1)
    weights = np.prod(np.stack([g.reshape(-1) for g in wgrids], axis=1), axis=1)
    return nodes, weights


def _positive_side(offset: np.ndarray) -> bool:
    """偏移向量按字典序为正（第一个非零分量大于 0）"""
    for v in offset:
        if v > 0:
            return True
        if v < 0:
            return False
    return False


class _Run:
    """一次积分的工作状态"""

    def __init__(self, carrier: RectifiableSet, integrand: Integrand, value_dim: int,
                 ball: Optional[Ball], cfg: QuadratureConfig):
        self.carrier = carrier
        self.integrand = integrand
        self.value_dim = value_dim
        self.ball = ball
        self.cfg = cfg
        self.n = carrier.n
        self.nodes, self.weights = _tensor_rule(cfg.order, self.n)
        self.gl_x, self.gl_w = np.polynomial.legendre.leggauss(cfg.order)
        self.outer_nodes, self.outer_weights = _tensor_rule(cfg.order, self.n - 1)
        self.cells = 0

    # ------------------------------------------------------------------
    # 单元求值
    # ------------------------------------------------------------------
    def evaluate(self, requests: Sequence[Tuple[int, np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
        """
        批量计算单元积分

        Returns:
            (values, forced): values 形状 (len, value_dim)；forced 标记与球面相交且像直径仍过大的单元
        """
        count = len(requests)
        values = np.zeros((count, self.value_dim))
        forced = np.zeros(count, dtype=bool)
        if count == 0:
            return values, forced
        groups: Dict[int, List[int]] = defaultdict(list)
        for i, (p, _, _) in enumerate(requests):
            groups[p].append(i)

        q = self.weights.size
        for p in sorted(groups):
            idx = np.asarray(groups[p])
            lo = np.stack([requests[i][1] for i in idx])
            hi = np.stack([requests[i][2] for i in idx])
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            params = (mid[:, None, :] + half[:, None, :] * self.nodes[None, :, :]).reshape(-1, self.n)
            pts = self.carrier.points(p, params)
            jac = self.carrier.jacobians(p, params)
            da = area_elements(jac).reshape(idx.size, q)
            speed = np.linalg.norm(jac, axis=1).reshape(idx.size, q, self.n).max(axis=1)
            rho = 0.55 * np.sum((hi - lo) * speed, axis=1)

            kept = np.ones(idx.size, dtype=bool)
            straddle = np.zeros(idx.size, dtype=bool)
            if self.ball is not None:
                dist = np.linalg.norm(self.carrier.points(p, mid) - self.ball.center, axis=1)
                outside = dist - rho > self.ball.radius
                inside = dist + rho < self.ball.radius
                kept = outside if self.ball.keep == BallKeep.OUTSIDE else inside
                straddle = ~(outside | inside)
                forced[idx[straddle]] = 2.0 * rho[straddle] > self.cfg.exclusion_refine * self.ball.radius

            if kept.any():
                sel = np.repeat(kept, q)
                f = np.asarray(self.integrand(p, params[sel], pts[sel]), dtype=float)
                f = f.reshape(int(kept.sum()), q, self.value_dim)
                w = self.weights[None, :] * np.prod(half[kept], axis=1)[:, None] * da[kept]
                values[idx[kept]] = np.einsum("bq,bqk->bk", w, f)
            if straddle.any():
                values[idx[straddle]] = self._straddle_values(p, lo[straddle], hi[straddle])
        self.cells += count
        return values, forced

    def _ball_gap(self, p: int, outer: np.ndarray, s: np.ndarray) -> np.ndarray:
        pts = self.carrier.points(p, np.column_stack([outer, s]))
        return np.sum((pts - self.ball.center) ** 2, axis=1) - self.ball.radius ** 2

    def _crossings(self, p: int, outer: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """沿最后一轴的采样线 [a, b] 上球面间隙函数的变号次数"""
        samples = self.cfg.line_samples
        grid = a[:, None] + np.linspace(0.0, 1.0, samples)[None, :] * (b - a)[:, None]
        gap = self._ball_gap(p, np.repeat(outer, samples, axis=0), grid.reshape(-1))
        positive = gap.reshape(-1, samples) > 0
        return np.count_nonzero(positive[:, :-1] != positive[:, 1:], axis=1)

    def _outer_pieces(self, p: int, lo: np.ndarray, hi: np.ndarray) -> List[Tuple[int, float, float]]:
        """
        二维参数域上把外层区间在交点个数变化处切开

        交线碰到单元在最后一轴上的边、或与采样线相切时，沿线交点个数改变；
        切开后每段上交点是外层参数的光滑函数，Gauss 公式恢复高阶收敛。
        """
        count = lo.shape[0]
        samples = self.cfg.line_samples
        u = lo[:, 0][:, None] + np.linspace(0.0, 1.0, samples)[None, :] * (hi[:, 0] - lo[:, 0])[:, None]
        crossings = self._crossings(
            p, u.reshape(-1, 1), np.repeat(lo[:, 1], samples), np.repeat(hi[:, 1], samples),
        ).reshape(count, samples)

        ci, ki = np.nonzero(crossings[:, :-1] != crossings[:, 1:])
        left = u[ci, ki]
        right = u[ci, ki + 1]
        left_count = crossings[ci, ki]
        for _ in range(_BISECTION_STEPS if ci.size else 0):
            middle = 0.5 * (left + right)
            same = self._crossings(p, middle[:, None], lo[ci, 1], hi[ci, 1]) == left_count
            left = np.where(same, middle, left)
            right = np.where(same, right, middle)
        cuts = 0.5 * (left + right)

        pieces: List[Tuple[int, float, float]] = []
        for cell in range(count):
            breaks = [lo[cell, 0], *np.sort(cuts[ci == cell]), hi[cell, 0]]
            pieces.extend((cell, s0, s1) for s0, s1 in zip(breaks[:-1], breaks[1:]) if s1 > s0)
        return pieces

    def _outer_lines(self, p: int, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """外层 Gauss 节点、权重与所属单元"""
        count = lo.shape[0]
        if self.n == 2:
            pieces = self._outer_pieces(p, lo, hi)
            cells = np.array([c for c, _, _ in pieces], dtype=int)
            pa = np.array([s0 for _, s0, _ in pieces])
            pb = np.array([s1 for _, _, s1 in pieces])
            half = 0.5 * (pb - pa)
            outer = (0.5 * (pa + pb))[:, None] + half[:, None] * self.gl_x[None, :]
            outer_w = (self.gl_w[None, :] * half[:, None]).reshape(-1)
            return outer.reshape(-1, 1), outer_w, np.repeat(cells, self.gl_x.size)
        qo = self.outer_weights.size
        half_o = 0.5 * (hi[:, :-1] - lo[:, :-1])
        mid_o = 0.5 * (hi[:, :-1] + lo[:, :-1])
        outer = (mid_o[:, None, :] + half_o[:, None, :] * self.outer_nodes[None, :, :]).reshape(count * qo, self.n - 1)
        outer_w = (self.outer_weights[None, :] * np.prod(half_o, axis=1)[:, None]).reshape(-1)
        return outer, outer_w, np.repeat(np.arange(count), qo)

    def _straddle_values(self, p: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """与球面相交的单元：外层轴取 Gauss 节点，沿最后一轴按交点分段"""
        count = lo.shape[0]
        outer, outer_w, owner = self._outer_lines(p, lo, hi)
        a = lo[owner, -1]
        b = hi[owner, -1]
        lines = a.size

        samples = self.cfg.line_samples
        grid = a[:, None] + np.linspace(0.0, 1.0, samples)[None, :] * (b - a)[:, None]
        positive = self._ball_gap(p, np.repeat(outer, samples, axis=0), grid.reshape(-1)).reshape(lines, samples) > 0

        li, si = np.nonzero(positive[:, :-1] != positive[:, 1:])
        left = grid[li, si]
        right = grid[li, si + 1]
        left_positive = positive[li, si]
        for _ in range(_BISECTION_STEPS if li.size else 0):
            middle = 0.5 * (left + right)
            same = (self._ball_gap(p, outer[li], middle) > 0) == left_positive
            left = np.where(same, middle, left)
            right = np.where(same, right, middle)
        roots = 0.5 * (left + right)

        counts = np.bincount(li, minlength=lines)
        seg_line, seg_a, seg_b = [], [], []
        start = 0
        for line in range(lines):
            breaks = [a[line], *roots[start:start + counts[line]], b[line]]
            start += counts[line]
            for s0, s1 in zip(breaks[:-1], breaks[1:]):
                if s1 > s0:
                    seg_line.append(line)
                    seg_a.append(s0)
                    seg_b.append(s1)
        seg_line = np.asarray(seg_line, dtype=int)
        seg_a = np.asarray(seg_a)
        seg_b = np.asarray(seg_b)

        outside = self._ball_gap(p, outer[seg_line], 0.5 * (seg_a + seg_b)) > 0
        keep = outside if self.ball.keep == BallKeep.OUTSIDE else ~outside
        out = np.zeros((count, self.value_dim))
        if not keep.any():
            return out
        seg_line, seg_a, seg_b = seg_line[keep], seg_a[keep], seg_b[keep]
        q = self.gl_x.size
        seg_half = 0.5 * (seg_b - seg_a)
        s = (0.5 * (seg_a + seg_b))[:, None] + seg_half[:, None] * self.gl_x[None, :]
        params = np.column_stack([np.repeat(outer[seg_line], q, axis=0), s.reshape(-1)])
        pts = self.carrier.points(p, params)
        da = area_elements(self.carrier.jacobians(p, params))
        f = np.asarray(self.integrand(p, params, pts), dtype=float).reshape(-1, self.value_dim)
        w = (self.gl_w[None, :] * seg_half[:, None]).reshape(-1) * da * np.repeat(outer_w[seg_line], q)
        np.add.at(out, np.repeat(owner[seg_line], q), f * w[:, None])
        return out

    # ------------------------------------------------------------------
    # 单元误差估计
    # ------------------------------------------------------------------
    def estimate(self, units: Sequence[_Unit]) -> None:
        requests: List[Tuple[int, np.ndarray, np.ndarray]] = []
        plan = []
        for u in units:
            own = []
            if u.coarse is None:
                for box in u.boxes(u.lo, u.hi):
                    own.append(len(requests))
                    requests.append((u.patch, *box))
            kids = []
            for clo, chi in _children(u.lo, u.hi):
                slots = []
                for box in u.boxes(clo, chi):
                    slots.append(len(requests))
                    requests.append((u.patch, *box))
                kids.append(slots)
            plan.append((own, kids))

        values, forced = self.evaluate(requests)
        for u, (own, kids) in zip(units, plan):
            if own:
                u.coarse = pairwise_sum([values[i] for i in own])
                u.coarse_forced = bool(forced[own].any())
            u.kid_values = [pairwise_sum([values[i] for i in slots]) for slots in kids]
            u.kid_forced = [bool(forced[slots].any()) for slots in kids]
            u.value = pairwise_sum(u.kid_values)
            u.error = float(np.linalg.norm(u.value - u.coarse))
            u.forced = u.coarse_forced

    def refine(self, u: _Unit, next_id: int) -> List[_Unit]:
        kids = []
        for k, (clo, chi) in enumerate(_children(u.lo, u.hi)):
            kids.append(_Unit(
                uid=next_id + k, patch=u.patch, lo=clo, hi=chi, mirror=u.mirror,
                coarse=u.kid_values[k], coarse_forced=u.kid_forced[k],
            ))
        return kids


class QuadratureService:
    """自适应求积服务"""

    def __init__(self, config: Optional[QuadratureConfig] = None):
        self.config = config or QuadratureConfig()
        logger.info("求积服务初始化完成")

    def integrate(
        self,
        carrier: Optional[RectifiableSet],
        integrand: Integrand,
        value_dim: int,
        ball: Optional[Ball] = None,
        focus: Optional[Focus] = None,
        config: Optional[QuadratureConfig] = None,
        strict: bool = False,
    ) -> QuadratureResult:
        """
        计算 ∫_{E \\ B} integrand dℋⁿ（或 ∫_{E ∩ B}，视 ball.keep 而定）

        Args:
            carrier: 积分载体，None 时结果为 0
            integrand: 被积函数，接收 (片序号, 参数, 点)
            value_dim: 被积函数输出维数
            ball: 可选的球形排除（或保留）区域
            focus: 可选的网格加密点
            config: 求积参数
            strict: 未达到精度时是否抛出 QuadratureConvergenceError

        Returns:
            QuadratureResult: 积分值、误差估计、单元数与收敛标志
        """
        cfg = config or self.config
        if carrier is None:
            return QuadratureResult(np.zeros(value_dim), 0.0, 0, True)

        run = _Run(carrier, integrand, value_dim, ball, cfg)
        units = self._initial_units(carrier, focus, cfg)
        next_id = len(units)
        pending = list(units)
        rounds = 0
        while True:
            run.estimate(pending)
            value = pairwise_sum([u.value for u in units])
            error = math.fsum(u.error for u in units)
            forced = [u for u in units if u.forced]
            tol = max(cfg.abs_tol, cfg.rel_tol * float(np.linalg.norm(value)))
            if not forced and error <= tol:
                converged = True
                break
            if run.cells >= cfg.max_cells or rounds >= cfg.max_rounds:
                converged = False
                break

            selected = {u.uid for u in forced}
            if error > tol:
                target = 0.5 * error
                picked = 0.0
                for u in sorted((u for u in units if not u.forced), key=lambda u: (-u.error, u.uid)):
                    if picked >= target:
                        break
                    selected.add(u.uid)
                    picked += u.error

            survivors, pending = [], []
            for u in units:
                if u.uid in selected:
                    kids = run.refine(u, next_id)
                    next_id += len(kids)
                    pending.extend(kids)
                else:
                    survivors.append(u)
            units = survivors + pending
            units.sort(key=lambda u: u.uid)
            rounds += 1

        logger.debug(
            f"求积结束: 单元={run.cells}, 轮数={rounds}, 误差={error:.3e}, 收敛={converged}"
        )
        if not converged and strict:
            raise QuadratureConvergenceError(
                f"求积在 {run.cells} 个单元内未达到精度 (误差估计 {error:.3e})",
                estimate=value, error_bound=error, cells=run.cells,
            )
        return QuadratureResult(value=value, error=error, cells=run.cells, converged=converged)

    def _initial_units(self, carrier: RectifiableSet, focus: Optional[Focus],
                       cfg: QuadratureConfig) -> List[_Unit]:
        units: List[_Unit] = []
        for p, patch in enumerate(carrier.patches):
            max_width = patch.widths / cfg.initial_cells
            if focus is not None and focus.patch_index == p:
                t0, pairs, singles = self._focus_layout(carrier, patch, focus)
            else:
                t0, pairs, singles = None, [], [(patch.lower.copy(), patch.upper.copy())]
            for lo, hi in pairs:
                for slo, shi in _split(lo, hi, max_width):
                    units.append(_Unit(uid=len(units), patch=p, lo=slo, hi=shi, mirror=t0))
            for lo, hi in singles:
                for slo, shi in _split(lo, hi, max_width):
                    units.append(_Unit(uid=len(units), patch=p, lo=slo, hi=shi))
        return units

    @staticmethod
    def _focus_layout(carrier: RectifiableSet, patch: Patch, focus: Focus):
        """
        聚焦点附近的几何分级网格

        以 t0 为中心的方盒 [t0-R, t0+R]^n 逐层减半，每层环带切成边长 r/2 的单元，
        最内层方盒按象限切分；方盒之外的剩余参数域作为普通单元。
        """
        t0 = np.asarray(focus.params, dtype=float)
        n = t0.size
        jac = carrier.jacobians(focus.patch_index, t0)[0]
        speed = float(np.linalg.norm(jac, axis=0).max())
        floor = focus.scale / speed / 8.0
        radius = float(min(np.min(t0 - patch.lower), np.min(patch.upper - t0)))

        offsets: List[Tuple[np.ndarray, np.ndarray]] = []
        singles: List[Tuple[np.ndarray, np.ndarray]] = []
        if radius > 0.0:
            r = radius
            levels = 0
            while r / 2.0 > floor and levels < _MAX_FOCUS_LEVELS:
                edges = -r + 0.5 * r * np.arange(5)
                for idx in itertools.product(range(4), repeat=n):
                    if all(i in (1, 2) for i in idx):
                        continue
                    ix = np.asarray(idx)
                    offsets.append((edges[ix], edges[ix + 1]))
                r *= 0.5
                levels += 1
            for bits in itertools.product((0, 1), repeat=n):
                bb = np.asarray(bits, dtype=bool)
                offsets.append((np.where(bb, 0.0, -r), np.where(bb, r, 0.0)))

            axes = []
            for i in range(n):
                cuts = [patch.lower[i], t0[i] - radius, t0[i] + radius, patch.upper[i]]
                axes.append([(cuts[k], cuts[k + 1]) for k in range(3) if cuts[k + 1] > cuts[k]])
            for combo in itertools.product(*axes):
                lo = np.array([c[0] for c in combo])
                hi = np.array([c[1] for c in combo])
                if np.all(np.isclose(lo, t0 - radius)) and np.all(np.isclose(hi, t0 + radius)):
                    continue
                singles.append((lo, hi))
        else:
            singles.append((patch.lower.copy(), patch.upper.copy()))

        if focus.paired:
            pairs = [(t0 + olo, t0 + ohi) for olo, ohi in offsets if _positive_side(0.5 * (olo + ohi))]
            return t0, pairs, singles
        return t0, [], [(t0 + olo, t0 + ohi) for olo, ohi in offsets] + singles


_default_service: Optional[QuadratureService] = None


def get_quadrature_service() -> QuadratureService:
    global _default_service
    if _default_service is None:
        _default_service = QuadratureService()
    return _default_service


def integrate_measure(
    carrier: RectifiableSet,
    integrand: Callable[[np.ndarray], np.ndarray],
    exclusion: Optional[Tuple[Sequence[float], float]] = None,
    config: Optional[QuadratureConfig] = None,
    focus: Optional[Focus] = None,
) -> np.ndarray:
    """
    ∫_{E \\ B(c, ε)} integrand dℋⁿ，被积函数只依赖环境空间中的点

    未达到精度时抛出 QuadratureConvergenceError，异常中携带最佳估计。
    """
    probe_patch = carrier.patches[0]
    probe = carrier.points(0, 0.5 * (probe_patch.lower + probe_patch.upper))
    value_dim = int(np.atleast_2d(np.asarray(integrand(probe), dtype=float)).shape[1])
    ball = None
    if exclusion is not None:
        ball = Ball(center=np.asarray(exclusion[0], dtype=float), radius=float(exclusion[1]))
    result = get_quadrature_service().integrate(
        carrier,
        lambda _p, _t, pts: np.asarray(integrand(pts), dtype=float).reshape(pts.shape[0], value_dim),
        value_dim,
        ball=ball,
        focus=focus,
        config=config,
        strict=True,
    )
    return result.value
