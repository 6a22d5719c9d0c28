import logging
from typing import Any, Dict, List, Optional

from fastapi import APIRouter, Query

from app.api.schemas.experiment_schemas import KernelCheckResponse
from app.services.kernel_service import KernelService

logger = logging.getLogger(__name__)
router = APIRouter()


@router.get("", response_model=List[Dict[str, Any]])
async def list_kernels():
    """
    内置核列表
    """
    return KernelService().list_kernels()


@router.get("/{name}/check", response_model=KernelCheckResponse)
def check_kernel(
    name: str,
    n: Optional[int] = None,
    j: Optional[int] = None,
    samples: int = Query(default=10_000, ge=10, le=1_000_000),
    seed: int = 0,
):
    """
    数值检查核的奇性、齐次性与 CZ 常数
    """
    service = KernelService()
    kernel = service.get_kernel(name, n=n, j=j)
    return service.check_report(kernel, sample_count=samples, seed=seed)
