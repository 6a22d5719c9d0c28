import logging

from fastapi import APIRouter

from app.api.schemas.experiment_schemas import ConstantRequest, ConstantResponse
from app.services.jump_service import JumpService
from app.services.kernel_service import KernelService

logger = logging.getLogger(__name__)
router = APIRouter()


@router.post("", response_model=ConstantResponse)
def jump_constant(request: ConstantRequest):
    """
    计算跳跃常数 C_K(N)
    """
    kernel = KernelService().get_kernel(request.kernel.name, n=request.kernel.n, j=request.kernel.j)
    return ConstantResponse(**JumpService().describe_constant(kernel, request.direction, request.numeric))
