import csv
import io
import logging
from pathlib import Path
from typing import List

from app.api.schemas.report_schemas import DiagnosticTable, JumpReport
from app.repositories.base import BaseFileRepository, PathLike

logger = logging.getLogger(__name__)


def _num(value: float) -> str:
    return f"{float(value):.17g}"


class ReportRepository(BaseFileRepository[JumpReport]):
    """报告仓库：JSON 全量报告、CSV 表格与诊断表"""

    def __init__(self):
        super().__init__(JumpReport)

    @staticmethod
    def csv_header(report: JumpReport) -> List[str]:
        first = report.points[0] if report.points else None
        d = len(first.x) if first else 0
        k = len(first.pv) if first else 0
        kc = len(first.jump_constant) if first else 0
        header = ["point_id"]
        header += [f"x{i}" for i in range(d)]
        header += [f"N{i}" for i in range(d)]
        header += ["f"]
        header += [f"pv{i}" for i in range(k)]
        header += [f"Tplus{i}" for i in range(k)]
        header += [f"Tminus{i}" for i in range(k)]
        header += [f"CK{i}" for i in range(kc)]
        header += ["res_avg", "res_jump", "converged"]
        return header

    def report_csv(self, report: JumpReport) -> str:
        """每个评估点一行"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.csv_header(report))
        for p in report.points:
            writer.writerow(
                [p.point_id]
                + [_num(v) for v in p.x]
                + [_num(v) for v in p.normal]
                + [_num(p.f)]
                + [_num(v) for v in p.pv]
                + [_num(v) for v in p.t_plus]
                + [_num(v) for v in p.t_minus]
                + [_num(v) for v in p.jump_constant]
                + [_num(p.residual_avg), _num(p.residual_jump), int(p.converged)]
            )
        return buffer.getvalue()

    def save_report(self, report: JumpReport, path: PathLike) -> Path:
        return self.write(report, path)

    def save_csv(self, report: JumpReport, path: PathLike) -> Path:
        target = self.write_text(self.report_csv(report), path)
        logger.info(f"已写出 CSV 表格: {target}")
        return target

    @staticmethod
    def diagnostic_csv(table: DiagnosticTable) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["point_id", "delta", "s_sum", "s_diff"])
        for row in table.rows:
            writer.writerow([row.point_id, _num(row.delta), _num(row.s_sum), _num(row.s_diff)])
        return buffer.getvalue()

    def save_diagnostic_csv(self, table: DiagnosticTable, path: PathLike) -> Path:
        target = self.write_text(self.diagnostic_csv(table), path)
        logger.info(f"已写出诊断表: {target}")
        return target

    def save_diagnostic_json(self, table: DiagnosticTable, path: PathLike) -> Path:
        target = self.write_text(table.model_dump_json(indent=2) + "\n", path)
        logger.info(f"已写出诊断报告: {target}")
        return target
