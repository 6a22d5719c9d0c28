import logging

from fastapi import APIRouter

from app.api.schemas.experiment_schemas import ExperimentConfig
from app.api.schemas.report_schemas import DiagnosticTable, JumpReport
from app.services.experiment_service import ExperimentService

logger = logging.getLogger(__name__)
router = APIRouter()


@router.post("/verify", response_model=JumpReport)
def verify(config: ExperimentConfig):
    """
    在场景评估点上验证跳跃公式；核为 double-layer 时按双层位势运行
    """
    service = ExperimentService()
    if config.kernel.name.strip().lower() == "double-layer":
        return service.run_double_layer(config)
    return service.run_experiment(config)


@router.post("/diagnose", response_model=DiagnosticTable)
def diagnose(config: ExperimentConfig):
    """
    S_δ / S̃_δ 诊断扫描，δ 阶梯取自 delta_ladder，缺省用 DIAGNOSTIC_DELTA_LADDER
    """
    return ExperimentService().diagnostic_sweep(config)
