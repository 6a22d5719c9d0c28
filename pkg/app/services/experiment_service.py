import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from app.api.schemas.experiment_schemas import ExperimentConfig
from app.api.schemas.report_schemas import (
    DiagnosticRow,
    DiagnosticTable,
    JumpReport,
    LimitTrace,
    PointRecord,
)
from app.config.settings import settings
from app.models.geometry import CarrierPoint
from app.models.kernel import Kernel, make_kernel
from app.models.measure import RadonMeasure
from app.models.results import JumpPointResult
from app.models.scene import Scene
from app.repositories.report_repository import ReportRepository
from app.repositories.scene_repository import SceneRepository
from app.services.diagnostic_service import DiagnosticService, cone_directions
from app.services.operator_service import OperatorService
from app.services.plot_service import PlotService
from app.utils.exceptions import ConfigurationError, SceneError
from app.utils.helpers import as_float_list, format_timestamp

logger = logging.getLogger(__name__)

REFLECTION_OFFSET = 0.1


@dataclass
class PreparedExperiment:
    """一次实验所需的场景、核、测度与评估点"""
    scene: Scene
    kernel: Kernel
    measure: RadonMeasure
    anchors: List[CarrierPoint]
    mode: str


class ExperimentService:
    """跳跃公式验证实验：场景构造、逐点并行计算、报告汇总与持久化"""

    def __init__(self, scenes: Optional[SceneRepository] = None,
                 reports: Optional[ReportRepository] = None,
                 plots: Optional[PlotService] = None):
        self.scenes = scenes or SceneRepository()
        self.reports = reports or ReportRepository()
        self.plots = plots or PlotService()
        logger.info("实验服务初始化完成")

    # ------------------------------------------------------------------
    # 准备
    # ------------------------------------------------------------------
    def prepare(self, config: ExperimentConfig, double_layer: Optional[bool] = None) -> PreparedExperiment:
        """
        构造场景、核与评估点

        Args:
            config: 实验配置
            double_layer: 是否按双层位势运行，缺省时由核名称决定

        Returns:
            PreparedExperiment: 准备好的实验
        """
        scene = self.scenes.load(config.scene)
        carrier = scene.carrier
        if double_layer is None:
            double_layer = config.kernel.name.strip().lower() == "double-layer"

        if double_layer:
            kernel = make_kernel("double-layer", n=config.kernel.n or carrier.n)
            measure = self._double_layer_measure(scene)
            mode = "double-layer"
        else:
            n = config.kernel.n
            if n is None and config.kernel.name.strip().lower() == "riesz":
                n = carrier.n
            kernel = make_kernel(config.kernel.name, n=n, j=config.kernel.j)
            measure = scene.measure
            mode = "jump"
        if kernel.ambient_dim != carrier.ambient_dim:
            raise ConfigurationError(
                f"核 {kernel.name} 的环境维数 {kernel.ambient_dim} 与场景 {scene.name} 的 {carrier.ambient_dim} 不一致"
            )

        anchors = self._anchors(config, scene)
        for anchor in anchors:
            x = carrier.point_of(anchor)
            for atom in measure.atoms:
                if np.linalg.norm(atom.point - x) == 0.0:
                    raise SceneError(f"评估点 {x.tolist()} 与点质量位置重合")
        logger.info(f"实验准备完成: 场景={scene.name}, 核={kernel.name}, 评估点={len(anchors)}, 模式={mode}")
        return PreparedExperiment(scene=scene, kernel=kernel, measure=measure, anchors=anchors, mode=mode)

    @staticmethod
    def _double_layer_measure(scene: Scene) -> RadonMeasure:
        """f(y)·N_y·ℋⁿ|_E"""
        if not scene.carrier.closed:
            raise SceneError(f"双层位势需要闭合的定向载体，场景 {scene.name} 不是闭合的")
        if scene.measure.atoms:
            raise SceneError("双层位势的场景不能带点质量")
        if scene.measure.density is None:
            raise SceneError("双层位势的场景需要密度")
        return RadonMeasure(scene.carrier, scene.measure.density, (), normal_weighted=True)

    @staticmethod
    def _anchors(config: ExperimentConfig, scene: Scene) -> List[CarrierPoint]:
        if not config.anchors:
            return scene.evaluation_points(config.points)
        carrier = scene.carrier
        anchors = []
        for spec in config.anchors:
            if not 0 <= spec.patch < len(carrier.patches):
                raise SceneError(f"片序号越界: {spec.patch}")
            patch = carrier.patch(spec.patch)
            if len(spec.params) != patch.dim or not patch.contains(spec.params):
                raise SceneError(f"评估点参数不在片 {spec.patch} 的参数域内: {spec.params}")
            anchors.append(CarrierPoint(spec.patch, tuple(float(v) for v in spec.params)))
        return anchors

    @staticmethod
    def _parallel() -> Parallel:
        return Parallel(n_jobs=settings.JUMPLAB_THREADS, backend=settings.JUMPLAB_PARALLEL_BACKEND)

    # ------------------------------------------------------------------
    # 跳跃公式验证
    # ------------------------------------------------------------------
    def _evaluate_point(self, operators: OperatorService, prepared: PreparedExperiment,
                        config: ExperimentConfig, point_id: int, anchor: CarrierPoint) -> PointRecord:
        logger.info(f"计算评估点 {point_id}: 片={anchor.patch_index}, 参数={list(anchor.params)}")
        result = operators.jump_residuals(
            prepared.kernel, prepared.measure, anchor, config.a, config.b,
            config.extrapolation, point_id=point_id,
        )
        reflection = None
        if config.reflection_checks:
            reflection = self._reflection(operators, prepared, anchor, config)
        return self._record(result, anchor, reflection)

    @staticmethod
    def _reflection(operators: OperatorService, prepared: PreparedExperiment,
                    anchor: CarrierPoint, config: ExperimentConfig) -> float:
        """评估点切平面上的反射相消检查"""
        carrier = prepared.scene.carrier
        frame = carrier.frame_at(anchor)
        direction = cone_directions(frame, config.a)[1]
        y = frame.point + REFLECTION_OFFSET * carrier.length_scale * direction
        return DiagnosticService(operators).flat_plane_reflection_check(
            prepared.kernel, frame, y, carrier.length_scale, config=config.quadrature,
        )

    @staticmethod
    def _record(result: JumpPointResult, anchor: CarrierPoint, reflection: Optional[float]) -> PointRecord:
        return PointRecord(
            point_id=result.point_id,
            patch=anchor.patch_index,
            params=list(anchor.params),
            x=as_float_list(result.x),
            normal=as_float_list(result.normal),
            f=float(result.density),
            pv=as_float_list(result.pv.value),
            t_plus=as_float_list(result.t_plus.value),
            t_minus=as_float_list(result.t_minus.value),
            jump_constant=as_float_list(result.jump_constant),
            jump_term=as_float_list(result.jump_term),
            residual_avg=result.residual_avg,
            residual_jump=result.residual_jump,
            converged=result.converged,
            traces={
                "pv": LimitTrace(**result.pv.to_dict()),
                "t_plus": LimitTrace(**result.t_plus.to_dict()),
                "t_minus": LimitTrace(**result.t_minus.to_dict()),
            },
            residual_trace=[[float(s), float(ra), float(rj)] for s, ra, rj in result.residual_trace],
            reflection=reflection,
        )

    def _verify(self, config: ExperimentConfig, prepared: PreparedExperiment) -> JumpReport:
        operators = OperatorService(quad_config=config.quadrature)
        records = self._parallel()(
            delayed(self._evaluate_point)(operators, prepared, config, i, anchor)
            for i, anchor in enumerate(prepared.anchors)
        )
        all_converged = all(r.converged for r in records)
        max_avg = max((r.residual_avg for r in records), default=0.0)
        max_jump = max((r.residual_jump for r in records), default=0.0)
        passed = all_converged and max_avg < config.residual_tol and max_jump < config.residual_tol
        report = JumpReport(
            generated_at=format_timestamp(),
            mode=prepared.mode,
            scene={**prepared.scene.spec, "name": prepared.scene.name},
            kernel=prepared.kernel.describe(),
            config=config.echo(),
            truncation_length=prepared.scene.truncation_length,
            residual_tol=config.residual_tol,
            all_converged=all_converged,
            passed=passed,
            max_residual_avg=max_avg,
            max_residual_jump=max_jump,
            points=list(records),
        )
        log = logger.info if passed else logger.warning
        log(f"实验完成: 收敛={all_converged}, 通过={passed}, "
            f"max res_avg={max_avg:.3e}, max res_jump={max_jump:.3e}")
        self.persist(report, config)
        return report

    def run_experiment(self, config: ExperimentConfig) -> JumpReport:
        """
        在场景的所有评估点上验证跳跃公式

        Args:
            config: 实验配置

        Returns:
            JumpReport: 报告（给定输出路径时同时写出 JSON/CSV/SVG）
        """
        prepared = self.prepare(config)
        return self._verify(config, prepared)

    def run_double_layer(self, config: ExperimentConfig) -> JumpReport:
        """双层位势 R f 的跳跃验证：½(R⁺f - R⁻f) = ½f(x)，½(R⁺f + R⁻f) = pv Rf(x)"""
        prepared = self.prepare(config, double_layer=True)
        return self._verify(config, prepared)

    @staticmethod
    def exit_code(report: JumpReport) -> int:
        return 0 if report.passed else 1

    def persist(self, report: JumpReport, config: ExperimentConfig) -> None:
        if config.output:
            self.reports.save_report(report, config.output)
        if config.csv:
            self.reports.save_csv(report, config.csv)
        if config.plot:
            self.plots.emit_plot(report, config.plot)

    # ------------------------------------------------------------------
    # 诊断
    # ------------------------------------------------------------------
    def _sweep_point(self, operators: OperatorService, prepared: PreparedExperiment,
                     config: ExperimentConfig, point_id: int, anchor: CarrierPoint,
                     ladder: Sequence[float]) -> List[DiagnosticRow]:
        """
        用最大 δ 的一组锥内采样点一次算出 T(y) 与 T(y*)，各 δ 取 |x-y| ≤ δ 的子集上的上确界
        """
        kernel, measure = prepared.kernel, prepared.measure
        frame = measure.carrier.frame_at(anchor)
        pv = operators.principal_value(kernel, measure, anchor, config.extrapolation).value
        density = float(measure.density_values(anchor.array)[0])
        _, term = operators.jump_term(kernel, measure, frame.normal, density)

        diagnostics = DiagnosticService(operators)
        # 半径层至少覆盖到阶梯中最小的 δ
        span = int(math.ceil(math.log2(max(ladder) / min(ladder)))) + 1
        pts = diagnostics.sample_points(frame, config.a, max(ladder), settings.DIAGNOSTIC_SAMPLES,
                                        min_levels=span)
        values: List[Tuple[float, float, float]] = []
        for dist, t_y, t_star in diagnostics.symmetric_values(kernel, measure, anchor, pts, config.b):
            s_sum = float(np.linalg.norm(pv - 0.5 * (t_y + t_star)))
            s_diff = float(np.linalg.norm(term - 0.5 * (t_y - t_star)))
            values.append((dist, s_sum, s_diff))

        rows = []
        for delta in ladder:
            kept = [(s, d) for dist, s, d in values if dist <= delta * (1.0 + 1e-12)]
            rows.append(DiagnosticRow(
                point_id=point_id, delta=float(delta),
                s_sum=max((s for s, _ in kept), default=0.0),
                s_diff=max((d for _, d in kept), default=0.0),
            ))
        logger.info(f"评估点 {point_id} 诊断完成: {len(ladder)} 个 δ")
        return rows

    def diagnostic_sweep(self, config: ExperimentConfig,
                         delta_ladder: Optional[Sequence[float]] = None) -> DiagnosticTable:
        """
        在 δ 阶梯上采样 S_δ 与 S̃_δ

        Args:
            config: 实验配置
            delta_ladder: δ 序列，缺省时依次取 config.delta_ladder 与 settings.DIAGNOSTIC_DELTA_LADDER

        Returns:
            DiagnosticTable: 每个评估点、每个 δ 一行
        """
        if delta_ladder is None:
            delta_ladder = config.delta_ladder or settings.DIAGNOSTIC_DELTA_LADDER
        ladder = list(delta_ladder)
        if not ladder or any(not d > 0 for d in ladder):
            raise ConfigurationError("delta 阶梯必须非空且全为正数")
        prepared = self.prepare(config)
        operators = OperatorService(quad_config=config.quadrature)
        chunks = self._parallel()(
            delayed(self._sweep_point)(operators, prepared, config, i, anchor, ladder)
            for i, anchor in enumerate(prepared.anchors)
        )
        table = DiagnosticTable(
            generated_at=format_timestamp(),
            scene={**prepared.scene.spec, "name": prepared.scene.name},
            kernel=prepared.kernel.describe(),
            rows=[row for chunk in chunks for row in chunk],
        )
        if config.output:
            self.reports.save_diagnostic_json(table, config.output)
        if config.csv:
            self.reports.save_diagnostic_csv(table, config.csv)
        if config.plot:
            self.plots.emit_plot(table, config.plot)
        return table
