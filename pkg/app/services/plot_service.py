import io
import logging
from pathlib import Path
from typing import List, Tuple, Union

import matplotlib
from matplotlib.figure import Figure

from app.api.schemas.report_schemas import DiagnosticTable, JumpReport
from app.repositories.base import BaseFileRepository, PathLike
from app.utils.exceptions import NoDataError

logger = logging.getLogger(__name__)

Series = Tuple[str, List[Tuple[float, float]]]

FIGSIZE = (6.4, 4.8)
FLOOR = 1e-16
# 固定 SVG 内部 id 的随机盐，保证相同输入得到相同字节
SVG_RC = {"svg.hashsalt": "jumplab", "svg.fonttype": "none"}


def series_gid(index: int) -> str:
    """第 index 条序列在 SVG 中的分组 id"""
    return f"series-{index}"


class PlotService:
    """残差与诊断量的 log-log SVG 折线图"""

    def __init__(self):
        logger.info("绘图服务初始化完成")

    @staticmethod
    def series_from(data: Union[JumpReport, DiagnosticTable]) -> Tuple[str, str, List[Series]]:
        """
        把报告或诊断表拆成折线序列

        Returns:
            (标题, x 轴名称, 序列列表)；每个评估点一条序列
        """
        if isinstance(data, JumpReport):
            series = [
                (f"point {p.point_id}", [(s, max(ra, rj)) for s, ra, rj in p.residual_trace])
                for p in data.points if p.residual_trace
            ]
            title = f"jump residuals: {data.scene.get('name', '')} / {data.kernel.get('name', '')}"
            return title, "scale", series
        grouped: dict = {}
        for row in data.rows:
            grouped.setdefault(row.point_id, []).append((row.delta, max(row.s_sum, row.s_diff)))
        series = [(f"point {pid}", pts) for pid, pts in grouped.items()]
        title = f"symmetric diagnostics: {data.scene.get('name', '')} / {data.kernel.get('name', '')}"
        return title, "delta", series

    def render_svg(self, data: Union[JumpReport, DiagnosticTable]) -> str:
        """生成 SVG 文本，相同输入得到相同字节"""
        title, x_label, series = self.series_from(data)
        series = [(label, [(x, max(y, FLOOR)) for x, y in pts if x > 0]) for label, pts in series]
        if not any(pts for _, pts in series):
            raise NoDataError("没有可绘制的数据")

        with matplotlib.rc_context(SVG_RC):
            fig = Figure(figsize=FIGSIZE)
            ax = fig.add_subplot()
            for index, (label, pts) in enumerate(series):
                if not pts:
                    continue
                xs, ys = zip(*pts)
                ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.5, label=label, gid=series_gid(index))
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel(x_label)
            ax.set_ylabel("residual")
            ax.set_title(title, fontsize=10)
            ax.grid(True, which="major", linewidth=0.3)
            ax.legend(loc="upper left", bbox_to_anchor=(1.02, 1.0), fontsize=8, frameon=False)
            fig.tight_layout()
            buffer = io.StringIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        return buffer.getvalue()

    def emit_plot(self, data: Union[JumpReport, DiagnosticTable], path: PathLike) -> Path:
        """
        写出 SVG 文件

        Args:
            data: 跳跃报告或诊断表
            path: 输出路径

        Returns:
            Path: 写出的文件
        """
        svg = self.render_svg(data)
        target = BaseFileRepository.ensure_parent(path)
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(svg)
        logger.info(f"已写出图像: {target}")
        return target
